#include "pathhedge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pathhedge/paths.hpp"
#include "pathhedge/tridiagonal.hpp"

namespace pathhedge {

TransformedProblem log_transform(const LocalVolModel& model, TerminalFn terminal) {
  if (model.flavor() != Flavor::positive) throw ValidationError("log transform requires a positive-flavor model");
  TransformedProblem out;
  out.generator = solver_generator(model);
  out.terminal = [f = std::move(terminal)](const Eigen::VectorXd& y) -> double {
    return f ? f(y.array().exp().matrix()) : 0.0;
  };
  return out;
}

Generator solver_generator(const LocalVolModel& model) {
  Generator g;
  g.dimension = model.dimension();
  g.time_homogeneous = model.is_constant();
  if (model.flavor() == Flavor::whole_space) {
    g.diffusion = [model](double t, const Eigen::VectorXd& x) { return model.covariance(t, x); };
    g.drift = [d = model.dimension()](double, const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(d).eval(); };
  } else {
    g.diffusion = [model](double t, const Eigen::VectorXd& y) {
      return model.covariance(t, y.array().exp().matrix());
    };
    g.drift = [model](double t, const Eigen::VectorXd& y) {
      return (-0.5 * model.covariance(t, y.array().exp().matrix()).diagonal()).eval();
    };
  }
  return g;
}

GridSpec centered_grid(const LocalVolModel& model, const Eigen::VectorXd& center, double duration, int nodes,
                       int time_steps, double width_sd) {
  if (center.size() != model.dimension()) throw ValidationError("grid centre dimension does not match the model");
  if (!(duration > 0.0)) throw ValidationError("grid duration must be positive");
  GridSpec spec;
  spec.time_steps = time_steps;
  const double half = width_sd * std::sqrt(model.bound() * duration);
  for (int i = 0; i < model.dimension(); ++i) {
    double c = center(i);
    if (model.flavor() == Flavor::positive) {
      if (!(c > 0.0)) throw ValidationError("positive grid needs a positive centre");
      c = std::log(c);
    }
    spec.axes.push_back(Axis{c - half, c + half, nodes});
  }
  return spec;
}

Eigen::VectorXd sample_terminal(const TerminalFn& terminal, const GridSpec& grid, bool log_space) {
  Eigen::Index total = 1;
  for (const auto& axis : grid.axes) total *= axis.nodes;
  Eigen::VectorXd out(total);
  const int d = static_cast<int>(grid.axes.size());
  Eigen::VectorXd x(d);
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    Eigen::Index rest = flat;
    for (int i = 0; i < d; ++i) {
      const auto k = rest % grid.axes[i].nodes;
      rest /= grid.axes[i].nodes;
      const double y = grid.axes[i].coordinate(static_cast<int>(k));
      x(i) = log_space ? std::exp(y) : y;
    }
    out(flat) = terminal(x);
  }
  return out;
}

namespace {

// Rows of the discrete operator A on a 1D grid. Interior rows use the
// tridiagonal entries; the two boundary rows may reach one node further.
struct Operator1D {
  Eigen::VectorXd sub, diag, sup;
  double first[3] = {0, 0, 0};  // row 0 on nodes 0, 1, 2
  double last[3] = {0, 0, 0};   // row n-1 on nodes n-1, n-2, n-3
};

void assemble(const Generator& g, const Axis& axis, const GridSpec& spec, double t, Operator1D& op) {
  const int n = axis.nodes;
  const double h = axis.step();
  op.sub.resize(n);
  op.diag.resize(n);
  op.sup.resize(n);
  Eigen::VectorXd y(1);
  auto coeffs = [&](int i, double& c, double& b) {
    y(0) = axis.coordinate(i);
    c = g.diffusion(t, y)(0, 0);
    b = g.drift(t, y)(0);
  };
  double c = 0.0, b = 0.0;
  for (int i = 1; i < n - 1; ++i) {
    coeffs(i, c, b);
    op.sub(i) = 0.5 * c / (h * h) - 0.5 * b / h;
    op.diag(i) = -c / (h * h);
    op.sup(i) = 0.5 * c / (h * h) + 0.5 * b / h;
  }
  coeffs(0, c, b);
  switch (spec.lower.kind) {
    case BoundaryKind::extrapolate:
      op.first[0] = 0.5 * c / (h * h) - 1.5 * b / h;
      op.first[1] = -c / (h * h) + 2.0 * b / h;
      op.first[2] = 0.5 * c / (h * h) - 0.5 * b / h;
      break;
    case BoundaryKind::zero_slope:
      op.first[0] = -c / (h * h);
      op.first[1] = c / (h * h);
      op.first[2] = 0.0;
      break;
    case BoundaryKind::dirichlet:
      op.first[0] = op.first[1] = op.first[2] = 0.0;
      break;
  }
  coeffs(n - 1, c, b);
  switch (spec.upper.kind) {
    case BoundaryKind::extrapolate:
      op.last[0] = 0.5 * c / (h * h) + 1.5 * b / h;
      op.last[1] = -c / (h * h) - 2.0 * b / h;
      op.last[2] = 0.5 * c / (h * h) + 0.5 * b / h;
      break;
    case BoundaryKind::zero_slope:
      op.last[0] = -c / (h * h);
      op.last[1] = c / (h * h);
      op.last[2] = 0.0;
      break;
    case BoundaryKind::dirichlet:
      op.last[0] = op.last[1] = op.last[2] = 0.0;
      break;
  }
}

void apply(const Operator1D& op, const Eigen::VectorXd& v, Eigen::VectorXd& out) {
  const Eigen::Index n = v.size();
  out.resize(n);
  for (Eigen::Index i = 1; i < n - 1; ++i) out(i) = op.sub(i) * v(i - 1) + op.diag(i) * v(i) + op.sup(i) * v(i + 1);
  out(0) = op.first[0] * v(0) + op.first[1] * v(1) + op.first[2] * v(2);
  out(n - 1) = op.last[0] * v(n - 1) + op.last[1] * v(n - 2) + op.last[2] * v(n - 3);
}

double boundary_value(const Boundary& b, double t) {
  if (!b.value) throw ValidationError("Dirichlet boundary needs a value function");
  return b.value(t);
}

// One theta-step backwards from v(t + dt) to v(t); coefficients at t + dt/2.
void theta_step(const Generator& g, const Axis& axis, const GridSpec& spec, double t, double dt, double theta,
                Eigen::VectorXd& v, Operator1D& op, Eigen::VectorXd& work, Eigen::VectorXd& scratch, bool reassemble) {
  const Eigen::Index n = v.size();
  if (reassemble) assemble(g, axis, spec, t + 0.5 * dt, op);
  apply(op, v, work);
  Eigen::VectorXd rhs = v + (1.0 - theta) * dt * work;
  Eigen::VectorXd sub = -theta * dt * op.sub;
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(n) - theta * dt * op.diag;
  Eigen::VectorXd sup = -theta * dt * op.sup;
  // Boundary rows, possibly with a third entry that is eliminated against
  // the adjacent interior row.
  double r0[3] = {1.0 - theta * dt * op.first[0], -theta * dt * op.first[1], -theta * dt * op.first[2]};
  double rn[3] = {1.0 - theta * dt * op.last[0], -theta * dt * op.last[1], -theta * dt * op.last[2]};
  if (spec.lower.kind == BoundaryKind::dirichlet) {
    r0[0] = 1.0;
    r0[1] = r0[2] = 0.0;
    rhs(0) = boundary_value(spec.lower, t);
  }
  if (spec.upper.kind == BoundaryKind::dirichlet) {
    rn[0] = 1.0;
    rn[1] = rn[2] = 0.0;
    rhs(n - 1) = boundary_value(spec.upper, t);
  }
  if (r0[2] != 0.0) {
    if (sup(1) == 0.0) throw ValidationError("boundary elimination failed: vanishing off-diagonal");
    const double f = r0[2] / sup(1);
    r0[0] -= f * sub(1);
    r0[1] -= f * diag(1);
    rhs(0) -= f * rhs(1);
  }
  if (rn[2] != 0.0) {
    if (sub(n - 2) == 0.0) throw ValidationError("boundary elimination failed: vanishing off-diagonal");
    const double f = rn[2] / sub(n - 2);
    rn[0] -= f * sup(n - 2);
    rn[1] -= f * diag(n - 2);
    rhs(n - 1) -= f * rhs(n - 2);
  }
  diag(0) = r0[0];
  sup(0) = r0[1];
  diag(n - 1) = rn[0];
  sub(n - 1) = rn[1];
  solve_tridiagonal(sub, diag, sup, rhs, scratch);
  v = std::move(rhs);
}

GridSolution solve_1d(const Generator& g, const Eigen::VectorXd& terminal, double t_start, double t_end,
                      const GridSpec& spec, bool log_space) {
  const Axis& axis = spec.axes[0];
  const int steps = spec.time_steps;
  const double dt = (t_end - t_start) / steps;
  std::vector<Eigen::VectorXd> slices(steps + 1);
  slices[steps] = terminal;
  Eigen::VectorXd v = terminal;
  Operator1D op;
  Eigen::VectorXd work, scratch;
  bool assembled = false;
  for (int m = steps - 1; m >= 0; --m) {
    const double t = t_start + dt * m;
    const bool reassemble = !g.time_homogeneous || !assembled;
    if (m == steps - 1 && spec.rannacher) {
      theta_step(g, axis, spec, t + 0.5 * dt, 0.5 * dt, 1.0, v, op, work, scratch, true);
      theta_step(g, axis, spec, t, 0.5 * dt, 1.0, v, op, work, scratch, true);
      assembled = false;
    } else {
      theta_step(g, axis, spec, t, dt, 0.5, v, op, work, scratch, reassemble || !g.time_homogeneous);
      assembled = true;
    }
    if (!v.allFinite()) throw ValidationError("solver produced non-finite values");
    slices[m] = v;
  }
  return GridSolution(spec.axes, log_space, t_start, t_end, std::move(slices));
}

double max_abs_diffusion(const Generator& g, const GridSpec& spec, double t) {
  const auto& a0 = spec.axes[0];
  const auto& a1 = spec.axes[1];
  double worst = 0.0;
  Eigen::VectorXd y(2);
  for (int j = 0; j < a1.nodes; ++j)
    for (int i = 0; i < a0.nodes; ++i) {
      y << a0.coordinate(i), a1.coordinate(j);
      worst = std::max(worst, g.diffusion(t, y).cwiseAbs().maxCoeff());
    }
  return worst;
}

void extrapolate_edges_2d(Eigen::VectorXd& v, int n0, int n1) {
  auto at = [&](int i, int j) -> double& { return v(i + static_cast<Eigen::Index>(n0) * j); };
  for (int j = 1; j < n1 - 1; ++j) {
    at(0, j) = 3 * at(1, j) - 3 * at(2, j) + at(3, j);
    at(n0 - 1, j) = 3 * at(n0 - 2, j) - 3 * at(n0 - 3, j) + at(n0 - 4, j);
  }
  for (int i = 0; i < n0; ++i) {
    at(i, 0) = 3 * at(i, 1) - 3 * at(i, 2) + at(i, 3);
    at(i, n1 - 1) = 3 * at(i, n1 - 2) - 3 * at(i, n1 - 3) + at(i, n1 - 4);
  }
}

GridSolution solve_2d(const Generator& g, const Eigen::VectorXd& terminal, double t_start, double t_end,
                      const GridSpec& spec, bool log_space) {
  if (spec.lower.kind != BoundaryKind::extrapolate || spec.upper.kind != BoundaryKind::extrapolate)
    throw ValidationError("2D grids support extrapolating boundaries only");
  const Axis& a0 = spec.axes[0];
  const Axis& a1 = spec.axes[1];
  const int n0 = a0.nodes, n1 = a1.nodes;
  const double h0 = a0.step(), h1 = a1.step();
  const int steps = spec.time_steps;
  const double dt = (t_end - t_start) / steps;

  // Coefficient cache: c00, c01, c11, b0, b1 per node.
  const Eigen::Index total = static_cast<Eigen::Index>(n0) * n1;
  Eigen::MatrixXd coeff(total, 5);
  auto fill = [&](double t) {
    Eigen::VectorXd y(2);
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < n0; ++i) {
        y << a0.coordinate(i), a1.coordinate(j);
        const Eigen::MatrixXd c = g.diffusion(t, y);
        const Eigen::VectorXd b = g.drift(t, y);
        coeff.row(i + static_cast<Eigen::Index>(n0) * j) << c(0, 0), c(0, 1), c(1, 1), b(0), b(1);
      }
  };

  std::vector<Eigen::VectorXd> slices(steps + 1);
  slices[steps] = terminal;
  Eigen::VectorXd v = terminal;
  Eigen::VectorXd next(total);
  bool filled = false;
  for (int m = steps - 1; m >= 0; --m) {
    const double t_hi = t_start + dt * (m + 1);
    const double cmax = max_abs_diffusion(g, spec, t_hi);
    const double h_min = std::min(h0, h1);
    const double dt_cfl = h_min * h_min / (2.0 * 2.0 * cmax);
    int sub = spec.substeps;
    if (sub <= 0) {
      sub = std::max(1, static_cast<int>(std::ceil(dt / dt_cfl - 1e-12)));
    } else if (dt / sub > dt_cfl * (1.0 + 1e-12)) {
      throw ValidationError("CFL violation: explicit step " + std::to_string(dt / sub) + " exceeds limit " +
                            std::to_string(dt_cfl));
    }
    const double ds = dt / sub;
    for (int s = 0; s < sub; ++s) {
      const double t = t_hi - ds * s;
      if (!filled || !g.time_homogeneous) {
        fill(t);
        filled = true;
      }
      next = v;
      for (int j = 1; j < n1 - 1; ++j)
        for (int i = 1; i < n0 - 1; ++i) {
          const Eigen::Index k = i + static_cast<Eigen::Index>(n0) * j;
          const double vxx = (v(k + 1) - 2 * v(k) + v(k - 1)) / (h0 * h0);
          const double vyy = (v(k + n0) - 2 * v(k) + v(k - n0)) / (h1 * h1);
          const double vxy = (v(k + 1 + n0) - v(k + 1 - n0) - v(k - 1 + n0) + v(k - 1 - n0)) / (4 * h0 * h1);
          const double vx = (v(k + 1) - v(k - 1)) / (2 * h0);
          const double vy = (v(k + n0) - v(k - n0)) / (2 * h1);
          const auto c = coeff.row(k);
          next(k) = v(k) + ds * (0.5 * c(0) * vxx + c(1) * vxy + 0.5 * c(2) * vyy + c(3) * vx + c(4) * vy);
        }
      extrapolate_edges_2d(next, n0, n1);
      v.swap(next);
    }
    if (!v.allFinite()) throw ValidationError("solver produced non-finite values");
    slices[m] = v;
  }
  return GridSolution(spec.axes, log_space, t_start, t_end, std::move(slices));
}

}  // namespace

GridSolution solve_generator(const Generator& generator, const Eigen::VectorXd& terminal_nodes, double t_start,
                             double t_end, const GridSpec& grid, bool log_space) {
  if (grid.axes.size() != static_cast<std::size_t>(generator.dimension))
    throw ValidationError("grid axes do not match the problem dimension");
  if (generator.dimension < 1 || generator.dimension > 2) throw ValidationError("only 1D and 2D grids are supported");
  if (!(t_start < t_end)) throw ValidationError("solve interval needs t_start < t_end");
  if (grid.time_steps < 1) throw ValidationError("grid needs at least one time step");
  Eigen::Index total = 1;
  for (const auto& axis : grid.axes) {
    if (axis.nodes < 4 || !(axis.upper > axis.lower)) throw ValidationError("grid axis needs >= 4 nodes and upper > lower");
    total *= axis.nodes;
  }
  if (terminal_nodes.size() != total) throw ValidationError("terminal data does not match the grid");
  if (!terminal_nodes.allFinite()) throw ValidationError("terminal data must be finite");
  if (generator.dimension == 1) return solve_1d(generator, terminal_nodes, t_start, t_end, grid, log_space);
  return solve_2d(generator, terminal_nodes, t_start, t_end, grid, log_space);
}

GridSolution solve_tvp(const LocalVolModel& model, const Eigen::VectorXd& terminal_nodes, double t_start,
                       double t_end, const GridSpec& grid) {
  return solve_generator(solver_generator(model), terminal_nodes, t_start, t_end, grid,
                         model.flavor() == Flavor::positive);
}

GridSolution solve_tvp(const LocalVolModel& model, const TerminalFn& terminal, double t_start, double t_end,
                       const GridSpec& grid) {
  if (grid.axes.size() != static_cast<std::size_t>(model.dimension()))
    throw ValidationError("grid axes do not match the model dimension");
  const bool log_space = model.flavor() == Flavor::positive;
  return solve_tvp(model, sample_terminal(terminal, grid, log_space), t_start, t_end, grid);
}

Eigen::VectorXd gradient(const GridSolution& solution, double t, const Eigen::VectorXd& x) {
  return solution.gradient(t, x);
}

double pde_residual(const GridSolution& solution, const Generator& generator, int first_slice) {
  const auto& axes = solution.axes();
  const int d = solution.dimension();
  const double dt = solution.time_step();
  const int n0 = axes[0].nodes;
  const int n1 = d == 2 ? axes[1].nodes : 1;
  double worst = 0.0;
  Eigen::VectorXd y(d);
  for (int m = std::max(first_slice, 1); m <= solution.time_steps() - 1; ++m) {
    const auto& v = solution.slice(m);
    const auto& up = solution.slice(m + 1);
    const auto& down = solution.slice(m - 1);
    const double t = solution.time(m);
    for (int j = d == 2 ? 1 : 0; j < (d == 2 ? n1 - 1 : 1); ++j)
      for (int i = 1; i < n0 - 1; ++i) {
        const Eigen::Index k = i + static_cast<Eigen::Index>(n0) * j;
        y(0) = axes[0].coordinate(i);
        if (d == 2) y(1) = axes[1].coordinate(j);
        const Eigen::MatrixXd c = generator.diffusion(t, y);
        const Eigen::VectorXd b = generator.drift(t, y);
        const double h0 = axes[0].step();
        double lv = 0.5 * c(0, 0) * (v(k + 1) - 2 * v(k) + v(k - 1)) / (h0 * h0) + b(0) * (v(k + 1) - v(k - 1)) / (2 * h0);
        if (d == 2) {
          const double h1 = axes[1].step();
          lv += 0.5 * c(1, 1) * (v(k + n0) - 2 * v(k) + v(k - n0)) / (h1 * h1) +
                c(0, 1) * (v(k + 1 + n0) - v(k + 1 - n0) - v(k - 1 + n0) + v(k - 1 - n0)) / (4 * h0 * h1) +
                b(1) * (v(k + n0) - v(k - n0)) / (2 * h1);
        }
        const double dv = (up(k) - down(k)) / (2 * dt);
        worst = std::max(worst, std::abs(dv + lv));
      }
  }
  return worst;
}

double pde_residual_tolerance(const GridSolution& solution, double scale) {
  double h2 = 0.0;
  for (const auto& axis : solution.axes()) h2 = std::max(h2, axis.step() * axis.step());
  const double dt = solution.time_step();
  return 10.0 * (h2 + dt * dt) * scale;
}

MaximumPrincipleReport maximum_principle_check(const LocalVolModel& model, const TerminalFn& terminal, double t_start,
                                               double t_end, const GridSpec& grid) {
  const bool log_space = model.flavor() == Flavor::positive;
  const Eigen::VectorXd f = sample_terminal(terminal, grid, log_space);
  if ((f.array() < 0.0).any()) throw ValidationError("maximum principle check needs a nonnegative terminal function");
  const auto solution = solve_tvp(model, f, t_start, t_end, grid);
  MaximumPrincipleReport report;
  report.min_value = solution.min_value();
  report.tolerance = 1e-8 * f.cwiseAbs().maxCoeff();
  report.passed = report.min_value >= -report.tolerance;

  const int d = solution.dimension();
  const auto& axes = solution.axes();
  auto interior = [&](Eigen::Index flat) {
    Eigen::Index rest = flat;
    for (int i = 0; i < d; ++i) {
      const auto k = rest % axes[i].nodes;
      rest /= axes[i].nodes;
      if (k == 0 || k == axes[i].nodes - 1) return false;
    }
    return true;
  };
  bool positive_somewhere = false;
  for (Eigen::Index k = 0; k < f.size(); ++k)
    if (interior(k) && f(k) > 0.0) positive_somewhere = true;
  if (positive_somewhere) {
    report.positivity_checked = true;
    report.min_interior_start = std::numeric_limits<double>::infinity();
    const auto& start = solution.slice(0);
    for (Eigen::Index k = 0; k < start.size(); ++k)
      if (interior(k)) report.min_interior_start = std::min(report.min_interior_start, start(k));
    report.positivity_held = report.min_interior_start > 0.0;
    report.passed = report.passed && report.positivity_held;
  }
  return report;
}

MartingaleReport martingale_check(const LocalVolModel& model, const GridSolution& solution, std::int64_t n_paths,
                                  double t0, double t1, const Eigen::VectorXd& x, std::uint64_t seed, int level,
                                  double grid_tolerance) {
  if (n_paths < 100) throw ValidationError("martingale check needs at least 100 paths");
  if (!(t0 < t1)) throw ValidationError("martingale check needs t0 < t1");
  const EulerStepper stepper(model, 1.0);
  const auto steps = std::int64_t{1} << level;
  const double dt = (t1 - t0) / static_cast<double>(steps);
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t p = 0; p < n_paths; ++p) {
    const NormalStream normals(seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd state = x;
    for (std::int64_t k = 0; k < steps; ++k)
      stepper.step(state, t0 + dt * static_cast<double>(k), dt, normals, static_cast<std::uint32_t>(k));
    if (!solution.covers(state)) throw DomainError("martingale check: simulated state left the grid");
    const double value = solution.value(t1, state);
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(n_paths);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  MartingaleReport report;
  report.paths = n_paths;
  report.mean_difference = mean - solution.value(t0, x);
  report.standard_error = std::sqrt(var / n);
  report.tolerance = 3.0 * report.standard_error + grid_tolerance;
  report.passed = std::abs(report.mean_difference) <= report.tolerance;
  return report;
}

double growth_constant(const GridSolution& solution, double exponent) {
  double c = 0.0;
  for (Eigen::Index k = 0; k < solution.node_count(); ++k) {
    const double weight = 1.0 + std::pow(solution.node_state(k).norm(), exponent);
    for (const auto& slice : solution.slices()) c = std::max(c, std::abs(slice(k)) / weight);
  }
  return c;
}

}  // namespace pathhedge
