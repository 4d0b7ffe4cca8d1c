#pragma once

// Non-anticipative functionals F_t(X_t) = u(t, X(t), s(t)) carried by a
// finite-dimensional running state s (terminal value, running integral or
// running maximum), with bump-based vertical / horizontal derivatives and the
// path-dependent PDE residual. Scalar paths (d = 1).

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pathhedge/grid.hpp"
#include "pathhedge/lattice.hpp"
#include "pathhedge/local_vol.hpp"
#include "pathhedge/pathcalc.hpp"

namespace pathhedge {

enum class StateKind { terminal, running_integral, running_max };

/// Natural cubic spline on a uniform axis.
class NaturalSpline {
 public:
  NaturalSpline(const Axis& axis, const Eigen::VectorXd& values);
  double operator()(double z) const;

 private:
  Axis axis_;
  Eigen::VectorXd values_;
  Eigen::VectorXd second_;
};

/// Tabulated u(t, z) from a 1D grid solution: natural splines in the solver
/// coordinate, cubic Hermite in time with slice derivatives -L_h v from the
/// generator that produced the solution. Queries take original coordinates.
class SplineSurface {
 public:
  SplineSurface(const GridSolution& solution, const Generator& generator);
  double operator()(double t, double x) const;
  const GridSolution& solution() const { return solution_; }

 private:
  GridSolution solution_;
  std::vector<NaturalSpline> values_;
  std::vector<NaturalSpline> rates_;
};

struct AugmentedFunctional {
  std::string name;
  StateKind kind = StateKind::terminal;
  double horizon = 1.0;
  /// u(t, x, s) for t < T.
  std::function<double(double t, double x, double s)> map;
  /// H at T; F_T is always evaluated through this.
  std::function<double(double x, double s)> payoff;
  /// Reference magnitude for bumps and tolerances.
  double scale = 1.0;
  /// Declared regularity (recorded, spot-checked only).
  bool smooth_in_space = true;
  bool smooth_in_state = true;

  double value(double t, double x, double s) const;
  double initial_state(double x0) const;
  /// Running update over one finest step [t, t + dt].
  double advance(double s, double x_left, double x_right, double dt) const;
  /// State after extending the path by dt with frozen endpoint x.
  double horizontal_state(double s, double x, double dt) const;
  /// State after bumping the endpoint x -> x + h.
  double bumped_state(double s, double x, double h) const;
};

/// State s(t) on every finest node of the path (left-endpoint sums for the
/// running integral).
Eigen::VectorXd running_state(const AugmentedFunctional& f, const SampledPath& path);

struct VerticalDerivative {
  double first = 0.0;
  double second = 0.0;
};

/// Central differences under the endpoint bump X(u) <- X(u) + h on [t, T].
VerticalDerivative vertical_derivative(const AugmentedFunctional& f, double t, double x, double s, double bump);

/// [F_{t+dt}(frozen extension) - F_t] / dt. Requires t + dt <= T.
double horizontal_derivative(const AugmentedFunctional& f, double t, double x, double s, double dt);

struct FunctionalDerivativeReport {
  double t = 0.0;
  double x = 0.0;
  double state = 0.0;
  double vertical = 0.0;
  double second_vertical = 0.0;
  double horizontal = 0.0;  // DF
  double generator = 0.0;   // A F = 1/2 a (x^2) d2F
  double residual = 0.0;    // DF + A F
};

FunctionalDerivativeReport derivative_report(const AugmentedFunctional& f, const LocalVolModel& model, double t,
                                             double x, double s, double bump, double dt);

struct FtvpOptions {
  std::vector<double> sample_times;
  double bump = 0.0;  // <= 0: 1e-4 scale
  double dt = 0.0;    // <= 0: mesh of the paths' finest level
  double tolerance = 0.0;
};

struct FtvpReport {
  std::vector<FunctionalDerivativeReport> samples;
  double sup_residual = 0.0;
  double tolerance = 0.0;
  double terminal_mismatch = 0.0;  // max |F_T - H| over the paths
  bool passed = false;
};

/// Residual DF + A F at every (path, sample time) and the terminal check.
FtvpReport ftvp_residual(const AugmentedFunctional& f, const LocalVolModel& model,
                         const std::vector<SampledPath>& paths, const FtvpOptions& options);

/// CSV `t,x,state,DF,A_F,residual`.
void write_ftvp_csv(std::ostream& out, const FtvpReport& report);

struct FunctionalHedgeCheck {
  double max_discrepancy = 0.0;
  double initial_value = 0.0;
  double final_value = 0.0;
};

/// max over t in T_n of |F_t - F_0 - level-n Foellmer integral of the vertical
/// derivative|.
FunctionalHedgeCheck functional_hedge_check(const AugmentedFunctional& f, const SampledPath& path, int level,
                                            double bump = 0.0);

/// Augmented functional together with the grid steps of its value map.
struct BuiltFunctional {
  AugmentedFunctional functional;
  std::shared_ptr<const SplineSurface> surface;
  double grid_step = 0.0;
  double time_step = 0.0;
};

/// Fixed-strike Asian call (I_T / T - K)^+ with I the running integral,
/// zero rates, constant volatility sigma. u = x g(t, z), z = (K - I/T) / x,
/// g_t - g_z / T + 1/2 sigma^2 z^2 g_zz = 0 on z in [0, z_max] with
/// g(t, 0) = (T - t)/T; for z < 0, g = (T - t)/T - z. The grid is uniform in
/// q = asinh(z / stretch); grid_step reports the q step.
BuiltFunctional asian_call_functional(double sigma, double strike, double horizon, int nodes = 801,
                                      int time_steps = 400, double z_max = 4.0, double stretch = 0.05);

/// Floating-strike lookback put M_T - S_T with M the running maximum.
/// u = x g(t, w), w = log(m / x) >= 0, g_t + 1/2 sigma^2 (g_ww - g_w) = 0,
/// g_w(t, 0) = 0, g(T, w) = e^w - 1.
BuiltFunctional lookback_put_functional(double sigma, double horizon, int nodes = 801, int time_steps = 400,
                                        double w_max = 2.0);

/// F_t = X(t).
AugmentedFunctional spot_functional(double horizon);
/// F_t = int_0^t X du.
AugmentedFunctional integral_functional(double horizon);
/// F_t = u(t, X(t)) for a 1D grid solution u of the model's TVP (no path
/// dependence).
BuiltFunctional markov_functional(const GridSolution& solution, const LocalVolModel& model);

}  // namespace pathhedge
