#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

#include "pathhedge/pathcalc.hpp"

namespace pathhedge {

/// Piecewise-bilinear table sigma(t, x) on a rectangular (time, space) grid,
/// flat beyond the outermost knots.
struct VolTable {
  Eigen::VectorXd times;
  Eigen::VectorXd spaces;
  Eigen::MatrixXd sigma;  // sigma(time index, space index)

  double operator()(double t, double x) const;
};

enum class VolFamily { constant, separable, tabulated };

/// Axis-aligned box of state values used for sampled validation.
struct StateBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct ModelValidation {
  double min_eigenvalue = 0.0;
  double max_abs_entry = 0.0;
  double max_asymmetry = 0.0;
  long probes = 0;
};

/// Local covariance field a(t, x). For whole-space models the covariation
/// density of admissible paths is a(t, S); for positive models it is
/// a_ij(t, S) S_i S_j, i.e. a is the return covariance.
class LocalVolModel {
 public:
  using SigmaFn = std::function<double(double t, double x)>;

  /// Constant positive-definite matrix. bound and eigen floor default to the
  /// matrix's own max entry and smallest eigenvalue.
  static LocalVolModel constant(Flavor flavor, const Eigen::MatrixXd& covariance, double bound = -1.0,
                                double eigen_floor = -1.0);
  /// a_ij = rho_ij sigma_i(t, x_i) sigma_j(t, x_j).
  static LocalVolModel separable(Flavor flavor, std::vector<SigmaFn> sigmas, const Eigen::MatrixXd& correlation,
                                 double bound, double eigen_floor);
  /// Separable model whose sigma_i are bilinear tables.
  static LocalVolModel tabulated(Flavor flavor, std::vector<VolTable> tables, const Eigen::MatrixXd& correlation,
                                 double bound, double eigen_floor);

  int dimension() const { return dimension_; }
  Flavor flavor() const { return flavor_; }
  VolFamily family() const { return family_; }
  double bound() const { return bound_ * scale_; }
  double eigen_floor() const { return eigen_floor_ * scale_; }
  double scale() const { return scale_; }
  bool is_constant() const { return family_ == VolFamily::constant; }

  Eigen::MatrixXd covariance(double t, const Eigen::VectorXd& x) const;

  /// Same field multiplied by kappa > 0.
  LocalVolModel scaled(double kappa) const;

  /// Probes a on a 101-point-per-axis grid over `box` at 11 times in
  /// [0, horizon]; throws ValidationError if symmetry, the eigen floor or the
  /// entry bound is violated.
  ModelValidation validate(const StateBox& box, double horizon, int points_per_axis = 101) const;

 private:
  LocalVolModel() = default;

  int dimension_ = 1;
  Flavor flavor_ = Flavor::whole_space;
  VolFamily family_ = VolFamily::constant;
  double bound_ = 0.0;
  double eigen_floor_ = 0.0;
  double scale_ = 1.0;
  Eigen::MatrixXd constant_;
  Eigen::MatrixXd correlation_;
  std::vector<SigmaFn> sigmas_;
};

}  // namespace pathhedge
