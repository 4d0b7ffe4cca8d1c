#pragma once

// Euler surrogates for trajectories whose covariation density is a (whole
// space) or a_ij S_i S_j (positive flavor).

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "pathhedge/local_vol.hpp"
#include "pathhedge/pathcalc.hpp"
#include "pathhedge/rng.hpp"

namespace pathhedge {

struct PathGeneratorSpec {
  LocalVolModel model;
  int level = 14;
  double horizon = 1.0;
  std::uint64_t seed = 42;
  std::uint64_t count = 1;
  /// Realized covariation uses kappa * a.
  double kappa = 1.0;
  Eigen::VectorXd initial;
};

/// One Euler step x <- x + chol(kappa a) sqrt(dt) z, in log coordinates with
/// drift -kappa a_ii / 2 for positive models. Normals come from draw block
/// `step` of the stream.
class EulerStepper {
 public:
  EulerStepper(const LocalVolModel& model, double kappa);

  /// Advances `state` (price coordinates) from t to t + dt.
  void step(Eigen::VectorXd& state, double t, double dt, const NormalStream& normals, std::uint32_t step) const;

 private:
  const LocalVolModel* model_;
  double kappa_;
  Eigen::MatrixXd constant_factor_;
};

/// Path `index` of the spec (stream = index), sampled on all 2^L + 1 nodes.
/// Throws if the realized level-L covariation strays more than 8 standard
/// deviations (chi-square scale sqrt(2 / 2^L)) from the target integral.
SampledPath generate_path(const PathGeneratorSpec& spec, std::uint64_t index = 0);

std::vector<SampledPath> generate_paths(const PathGeneratorSpec& spec, int threads = 1);

struct CovariationCheck {
  Eigen::MatrixXd realized;  // <S_i,S_j>(T) at level L
  Eigen::MatrixXd target;    // left Riemann sum of kappa a (weighted by S_i S_j if positive)
  double max_relative_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares the finest-level covariation with the model-implied integral.
CovariationCheck realized_covariation_check(const SampledPath& path, const LocalVolModel& model, double kappa,
                                            double sigmas = 8.0);

}  // namespace pathhedge
