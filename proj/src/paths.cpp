#include "pathhedge/paths.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "pathhedge/parallel.hpp"

namespace pathhedge {

namespace {

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& a) {
  if (a.rows() == 1) {
    if (!(a(0, 0) > 0.0)) throw ValidationError("Cholesky failure: covariance is not positive definite");
    return Eigen::MatrixXd::Constant(1, 1, std::sqrt(a(0, 0)));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw ValidationError("Cholesky failure: covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

EulerStepper::EulerStepper(const LocalVolModel& model, double kappa) : model_(&model), kappa_(kappa) {
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (model.is_constant()) constant_factor_ = cholesky_factor(kappa * model.covariance(0.0, Eigen::VectorXd::Ones(model.dimension())));
}

void EulerStepper::step(Eigen::VectorXd& state, double t, double dt, const NormalStream& normals,
                        std::uint32_t step) const {
  const int d = model_->dimension();
  if (d == 1) {
    const double z = normals.pair(step)[0];
    const double var = constant_factor_.size() > 0 ? constant_factor_(0, 0) * constant_factor_(0, 0)
                                                   : kappa_ * model_->covariance(t, state)(0, 0);
    if (!(var > 0.0)) throw ValidationError("Cholesky failure: covariance is not positive definite");
    const double shock = std::sqrt(var * dt) * z;
    if (model_->flavor() == Flavor::whole_space) {
      state(0) += shock;
    } else {
      state(0) *= std::exp(-0.5 * var * dt + shock);
      if (!(state(0) > 0.0) || !std::isfinite(state(0)))
        throw ValidationError("positive path left (0, inf) (numerical overflow)");
    }
    return;
  }
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; i += 2) {
    const auto pair = normals.pair(step, static_cast<std::uint32_t>(i / 2));
    z(i) = pair[0];
    if (i + 1 < d) z(i + 1) = pair[1];
  }
  const bool constant = constant_factor_.size() > 0;
  Eigen::MatrixXd a;
  if (!constant || model_->flavor() == Flavor::positive) a = kappa_ * model_->covariance(t, state);
  const Eigen::MatrixXd factor = constant ? constant_factor_ : cholesky_factor(a);
  const Eigen::VectorXd shock = std::sqrt(dt) * (factor * z);
  if (model_->flavor() == Flavor::whole_space) {
    state += shock;
    return;
  }
  for (int i = 0; i < d; ++i) state(i) *= std::exp(-0.5 * a(i, i) * dt + shock(i));
  if ((state.array() <= 0.0).any() || !state.allFinite())
    throw ValidationError("positive path left (0, inf) (numerical overflow)");
}

CovariationCheck realized_covariation_check(const SampledPath& path, const LocalVolModel& model, double kappa,
                                            double sigmas) {
  const int level = path.level();
  const int d = path.dimension();
  const auto& hierarchy = path.hierarchy();
  const double dt = hierarchy.mesh(level);
  CovariationCheck check;
  check.realized = covariation(path, level).matrix_at_horizon();
  check.target = Eigen::MatrixXd::Zero(d, d);
  for (std::int64_t k = 0; k < hierarchy.intervals(level); ++k) {
    const Eigen::VectorXd x = path.node(level, k);
    Eigen::MatrixXd a = kappa * model.covariance(hierarchy.time(level, k), x);
    if (path.flavor() == Flavor::positive) a = x.asDiagonal() * a * x.asDiagonal();
    check.target += a * dt;
  }
  check.tolerance = sigmas * std::sqrt(2.0 / static_cast<double>(hierarchy.intervals(level)));
  for (int i = 0; i < d; ++i) {
    const double dev = std::abs(check.realized(i, i) - check.target(i, i)) / check.target(i, i);
    check.max_relative_deviation = std::max(check.max_relative_deviation, dev);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double scale = std::sqrt(check.target(i, i) * check.target(j, j));
      const double dev = std::abs(check.realized(i, j) - check.target(i, j)) / scale;
      check.max_relative_deviation = std::max(check.max_relative_deviation, dev);
    }
  check.passed = check.max_relative_deviation <= check.tolerance;
  return check;
}

SampledPath generate_path(const PathGeneratorSpec& spec, std::uint64_t index) {
  const int d = spec.model.dimension();
  if (spec.initial.size() != d) throw ValidationError("initial state dimension does not match the model");
  if (spec.model.flavor() == Flavor::positive && (spec.initial.array() <= 0.0).any())
    throw ValidationError("positive model needs a positive initial state");
  if (!(spec.model.eigen_floor() > 0.0)) throw ValidationError("model eigen floor must be positive");
  const PartitionHierarchy hierarchy(spec.horizon, spec.level);
  const auto intervals = hierarchy.intervals(spec.level);
  const double dt = hierarchy.mesh(spec.level);
  const EulerStepper stepper(spec.model, spec.kappa);
  const NormalStream normals(spec.seed, index);
  Eigen::MatrixXd values(intervals + 1, d);
  Eigen::VectorXd state = spec.initial;
  values.row(0) = state.transpose();
  for (std::int64_t k = 0; k < intervals; ++k) {
    stepper.step(state, hierarchy.time(spec.level, k), dt, normals, static_cast<std::uint32_t>(k));
    values.row(k + 1) = state.transpose();
  }
  SampledPath path(hierarchy, std::move(values), spec.model.flavor());
  const auto check = realized_covariation_check(path, spec.model, spec.kappa);
  if (!check.passed)
    throw ValidationError("generated path " + std::to_string(index) + " fails the covariation check (deviation " +
                          std::to_string(check.max_relative_deviation) + ")");
  return path;
}

std::vector<SampledPath> generate_paths(const PathGeneratorSpec& spec, int threads) {
  std::vector<std::optional<SampledPath>> slots(spec.count);
  parallel_for(spec.count, threads, [&](std::size_t i) { slots[i].emplace(generate_path(spec, i)); });
  std::vector<SampledPath> out;
  out.reserve(spec.count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace pathhedge
