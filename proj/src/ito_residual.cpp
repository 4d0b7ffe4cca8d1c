#include "pathhedge/ito.hpp"

#include <algorithm>
#include <cmath>

namespace pathhedge {

double generator_term(const ValueField& v, const LocalVolModel& model, double t, const Eigen::VectorXd& x) {
  Eigen::MatrixXd a = model.covariance(t, x);
  if (model.flavor() == Flavor::positive) a = x.asDiagonal() * a * x.asDiagonal();
  const Eigen::MatrixXd hess = v.hessian(t, x);
  const double dt_term = v.time_derivative ? v.time_derivative(t, x) : 0.0;
  return dt_term + 0.5 * (a.cwiseProduct(hess)).sum();
}

double pathwise_ito_residual(const ValueField& v, const LocalVolModel& model, const SampledPath& path, int level) {
  if (path.dimension() != model.dimension()) throw ValidationError("path dimension does not match the model");
  const auto& hierarchy = path.hierarchy();
  hierarchy.check_level(level);
  const auto intervals = hierarchy.intervals(level);
  const double dt = hierarchy.mesh(level);
  const Eigen::VectorXd x0 = path.node(level, 0);
  const double v0 = v.value(0.0, x0);
  double stochastic = 0.0, drift = 0.0, worst = 0.0;
  Eigen::VectorXd x = x0;
  for (std::int64_t k = 0; k < intervals; ++k) {
    const double t = hierarchy.time(level, k);
    const Eigen::VectorXd next = path.node(level, k + 1);
    stochastic += v.gradient(t, x).dot(next - x);
    drift += generator_term(v, model, t, x) * dt;
    x = next;
    const double residual = v.value(hierarchy.time(level, k + 1), x) - v0 - stochastic - drift;
    worst = std::max(worst, std::abs(residual));
  }
  return worst;
}

}  // namespace pathhedge
