#pragma once

// Finite-difference solver for the backward terminal-value problems
// dv/dt + L v = 0, v(t_end) = f, with L = 1/2 sum a_ij d_ij (whole space) or
// 1/2 sum a_ij x_i x_j d_ij (positive, solved in log coordinates).

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

#include "pathhedge/grid.hpp"
#include "pathhedge/local_vol.hpp"

namespace pathhedge {

/// Second-order operator 1/2 sum c_ij(t,y) d_ij + sum b_i(t,y) d_i in solver
/// coordinates. c may be only semi-definite (degenerate augmented problems).
struct Generator {
  int dimension = 1;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> diffusion;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> drift;
  bool time_homogeneous = false;
};

using TerminalFn = std::function<double(const Eigen::VectorXd&)>;

/// Whole-space problem obtained from a positive model by x = exp(y):
/// c_ij(t,y) = a_ij(t,e^y), b_i(t,y) = -a_ii(t,e^y)/2, f~(y) = f(e^y).
struct TransformedProblem {
  Generator generator;
  TerminalFn terminal;
};

TransformedProblem log_transform(const LocalVolModel& model, TerminalFn terminal);

/// The generator the solver uses for a model: a itself for whole-space
/// models, the log transform for positive ones.
Generator solver_generator(const LocalVolModel& model);

/// Grid centred on `center` spanning +-width_sd * sqrt(bound * duration) per
/// axis, in log coordinates for positive models.
GridSpec centered_grid(const LocalVolModel& model, const Eigen::VectorXd& center, double duration, int nodes,
                       int time_steps, double width_sd = 6.0);

/// Core solver in solver coordinates. 1D: Crank-Nicolson with optional
/// Rannacher start. 2D: explicit central differences with the cross term
/// under dt <= h_min^2 / (2 d max|c|).
GridSolution solve_generator(const Generator& generator, const Eigen::VectorXd& terminal_nodes, double t_start,
                             double t_end, const GridSpec& grid, bool log_space);

GridSolution solve_tvp(const LocalVolModel& model, const TerminalFn& terminal, double t_start, double t_end,
                       const GridSpec& grid);
/// Terminal data given directly at the grid nodes (flattened, axis 0 fastest).
GridSolution solve_tvp(const LocalVolModel& model, const Eigen::VectorXd& terminal_nodes, double t_start,
                       double t_end, const GridSpec& grid);

/// Terminal function sampled at the nodes of a grid spec (original coordinates).
Eigen::VectorXd sample_terminal(const TerminalFn& terminal, const GridSpec& grid, bool log_space);

/// Gradient in original coordinates; throws DomainError outside the interior margin.
Eigen::VectorXd gradient(const GridSolution& solution, double t, const Eigen::VectorXd& x);

/// max |dv/dt + L v| over interior nodes, recomputed with time-centred and
/// space-centred differences on slices m in [first_slice, steps - 1].
double pde_residual(const GridSolution& solution, const Generator& generator, int first_slice = 1);

/// Default PDE residual tolerance 10 (h^2 + dt^2) scale.
double pde_residual_tolerance(const GridSolution& solution, double scale);

struct MaximumPrincipleReport {
  double min_value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool positivity_checked = false;
  bool positivity_held = false;
  double min_interior_start = 0.0;
};

/// Solves with terminal f >= 0 and checks min v >= -1e-8 ||f||_inf; if f > 0
/// at some interior node, also checks v(t_start, .) > 0 at every interior node.
MaximumPrincipleReport maximum_principle_check(const LocalVolModel& model, const TerminalFn& terminal,
                                               double t_start, double t_end, const GridSpec& grid);

struct MartingaleReport {
  double mean_difference = 0.0;
  double standard_error = 0.0;
  double tolerance = 0.0;
  std::int64_t paths = 0;
  bool passed = false;
};

/// Monte-Carlo estimate of E[v(t1, S(t1)) | S(t0) = x] - v(t0, x) with paths
/// from the model's own generator (level-`level` Euler steps on [t0, t1]).
MartingaleReport martingale_check(const LocalVolModel& model, const GridSolution& solution,
                                  std::int64_t n_paths, double t0, double t1, const Eigen::VectorXd& x,
                                  std::uint64_t seed, int level = 8, double grid_tolerance = 1e-3);

/// Smallest c with |v| <= c (1 + |x|^p) over all grid nodes and slices.
double growth_constant(const GridSolution& solution, double exponent);

}  // namespace pathhedge
