#include "pathhedge/local_vol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pathhedge {

namespace {

// Index i with knots(i) <= x < knots(i+1) and the weight of knots(i+1),
// clamped to the table.
void bracket(const Eigen::VectorXd& knots, double x, Eigen::Index& i, double& w) {
  const Eigen::Index n = knots.size();
  if (n == 1 || x <= knots(0)) {
    i = 0;
    w = 0.0;
    return;
  }
  if (x >= knots(n - 1)) {
    i = n - 2;
    w = 1.0;
    return;
  }
  const auto* it = std::upper_bound(knots.data(), knots.data() + n, x);
  i = (it - knots.data()) - 1;
  w = (x - knots(i)) / (knots(i + 1) - knots(i));
}

void check_correlation(const Eigen::MatrixXd& rho, std::size_t d) {
  if (rho.rows() != static_cast<Eigen::Index>(d) || rho.cols() != static_cast<Eigen::Index>(d))
    throw ValidationError("correlation matrix has the wrong size");
  if ((rho - rho.transpose()).cwiseAbs().maxCoeff() > 0.0) throw ValidationError("correlation must be symmetric");
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    if (rho(i, i) != 1.0) throw ValidationError("correlation diagonal must be 1");
}

}  // namespace

double VolTable::operator()(double t, double x) const {
  if (times.size() == 0 || spaces.size() == 0 || sigma.rows() != times.size() || sigma.cols() != spaces.size())
    throw ValidationError("volatility table is malformed");
  Eigen::Index it = 0, ix = 0;
  double wt = 0.0, wx = 0.0;
  bracket(times, t, it, wt);
  bracket(spaces, x, ix, wx);
  const Eigen::Index it1 = std::min<Eigen::Index>(it + 1, times.size() - 1);
  const Eigen::Index ix1 = std::min<Eigen::Index>(ix + 1, spaces.size() - 1);
  return (1 - wt) * ((1 - wx) * sigma(it, ix) + wx * sigma(it, ix1)) +
         wt * ((1 - wx) * sigma(it1, ix) + wx * sigma(it1, ix1));
}

LocalVolModel LocalVolModel::constant(Flavor flavor, const Eigen::MatrixXd& covariance, double bound,
                                      double eigen_floor) {
  if (covariance.rows() < 1 || covariance.rows() != covariance.cols())
    throw ValidationError("covariance must be a non-empty square matrix");
  if (covariance.rows() > 2) throw ValidationError("only dimensions 1 and 2 are supported");
  if (!covariance.allFinite()) throw ValidationError("covariance must be finite");
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("covariance must be symmetric");
  const double lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(covariance).eigenvalues().minCoeff();
  LocalVolModel m;
  m.dimension_ = static_cast<int>(covariance.rows());
  m.flavor_ = flavor;
  m.family_ = VolFamily::constant;
  m.constant_ = covariance;
  m.bound_ = bound >= 0.0 ? bound : covariance.cwiseAbs().maxCoeff();
  m.eigen_floor_ = eigen_floor >= 0.0 ? eigen_floor : lambda;
  if (!(m.eigen_floor_ > 0.0)) throw ValidationError("covariance is not positive definite (eigen floor must be > 0)");
  if (lambda < m.eigen_floor_ || covariance.cwiseAbs().maxCoeff() > m.bound_)
    throw ValidationError("constant covariance violates its declared bound or eigen floor");
  return m;
}

LocalVolModel LocalVolModel::separable(Flavor flavor, std::vector<SigmaFn> sigmas, const Eigen::MatrixXd& correlation,
                                       double bound, double eigen_floor) {
  if (sigmas.empty() || sigmas.size() > 2) throw ValidationError("only dimensions 1 and 2 are supported");
  check_correlation(correlation, sigmas.size());
  if (!(bound > 0.0) || !(eigen_floor > 0.0)) throw ValidationError("bound and eigen floor must be positive");
  LocalVolModel m;
  m.dimension_ = static_cast<int>(sigmas.size());
  m.flavor_ = flavor;
  m.family_ = VolFamily::separable;
  m.sigmas_ = std::move(sigmas);
  m.correlation_ = correlation;
  m.bound_ = bound;
  m.eigen_floor_ = eigen_floor;
  return m;
}

LocalVolModel LocalVolModel::tabulated(Flavor flavor, std::vector<VolTable> tables, const Eigen::MatrixXd& correlation,
                                       double bound, double eigen_floor) {
  std::vector<SigmaFn> sigmas;
  for (auto& table : tables) {
    (void)table(0.0, 0.0);  // shape check
    sigmas.emplace_back([table = std::move(table)](double t, double x) { return table(t, x); });
  }
  auto m = separable(flavor, std::move(sigmas), correlation, bound, eigen_floor);
  m.family_ = VolFamily::tabulated;
  return m;
}

Eigen::MatrixXd LocalVolModel::covariance(double t, const Eigen::VectorXd& x) const {
  if (x.size() != dimension_) throw ValidationError("state dimension does not match the model");
  if (family_ == VolFamily::constant) return scale_ * constant_;
  Eigen::VectorXd s(dimension_);
  for (int i = 0; i < dimension_; ++i) s(i) = sigmas_[i](t, x(i));
  return scale_ * (s.asDiagonal() * correlation_ * s.asDiagonal());
}

LocalVolModel LocalVolModel::scaled(double kappa) const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("scale factor kappa must be positive");
  LocalVolModel m = *this;
  m.scale_ *= kappa;
  return m;
}

ModelValidation LocalVolModel::validate(const StateBox& box, double horizon, int points_per_axis) const {
  if (box.lower.size() != dimension_ || box.upper.size() != dimension_)
    throw ValidationError("validation box dimension does not match the model");
  if (flavor_ == Flavor::positive && (box.lower.array() <= 0.0).any())
    throw ValidationError("positive model validated on a box reaching x <= 0");
  ModelValidation report;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  const int times = 11;
  Eigen::VectorXd x(dimension_);
  const int per_axis = std::max(points_per_axis, 2);
  const long total = dimension_ == 1 ? per_axis : static_cast<long>(per_axis) * per_axis;
  for (int it = 0; it < times; ++it) {
    const double t = horizon * it / (times - 1);
    for (long p = 0; p < total; ++p) {
      long rest = p;
      for (int i = 0; i < dimension_; ++i) {
        const long k = rest % per_axis;
        rest /= per_axis;
        x(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * static_cast<double>(k) / (per_axis - 1);
      }
      const Eigen::MatrixXd a = covariance(t, x);
      if (!a.allFinite()) throw ValidationError("covariance is not finite at a probe point");
      report.max_asymmetry = std::max(report.max_asymmetry, (a - a.transpose()).cwiseAbs().maxCoeff());
      report.max_abs_entry = std::max(report.max_abs_entry, a.cwiseAbs().maxCoeff());
      const double lambda = dimension_ == 1 ? a(0, 0)
                                            : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly)
                                                  .eigenvalues()
                                                  .minCoeff();
      report.min_eigenvalue = std::min(report.min_eigenvalue, lambda);
      ++report.probes;
    }
  }
  if (report.max_asymmetry > 1e-14 * std::max(1.0, report.max_abs_entry))
    throw ValidationError("covariance is not symmetric");
  if (report.min_eigenvalue < eigen_floor() * (1.0 - 1e-12))
    throw ValidationError("covariance eigenvalue " + std::to_string(report.min_eigenvalue) +
                          " below declared floor " + std::to_string(eigen_floor()));
  if (report.max_abs_entry > bound() * (1.0 + 1e-12))
    throw ValidationError("covariance entry " + std::to_string(report.max_abs_entry) + " exceeds declared bound " +
                          std::to_string(bound()));
  return report;
}

}  // namespace pathhedge
