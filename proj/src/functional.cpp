#include "pathhedge/functional.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "pathhedge/tridiagonal.hpp"

namespace pathhedge {

NaturalSpline::NaturalSpline(const Axis& axis, const Eigen::VectorXd& values) : axis_(axis), values_(values) {
  const Eigen::Index n = values.size();
  if (n != axis.nodes || n < 3) throw ValidationError("spline needs one value per axis node (>= 3)");
  const double h = axis.step();
  second_ = Eigen::VectorXd::Zero(n);
  const Eigen::Index m = n - 2;
  Eigen::VectorXd sub = Eigen::VectorXd::Ones(m), diag = Eigen::VectorXd::Constant(m, 4.0),
                  sup = Eigen::VectorXd::Ones(m), rhs(m), scratch;
  for (Eigen::Index i = 0; i < m; ++i) rhs(i) = 6.0 * (values(i + 2) - 2.0 * values(i + 1) + values(i)) / (h * h);
  solve_tridiagonal(sub, diag, sup, rhs, scratch);
  second_.segment(1, m) = rhs;
}

double NaturalSpline::operator()(double z) const {
  const double h = axis_.step();
  const double pos = (z - axis_.lower) / h;
  if (pos < -1e-9 || pos > axis_.nodes - 1 + 1e-9) throw DomainError("spline queried outside its axis");
  const int i = std::clamp(static_cast<int>(std::floor(pos)), 0, axis_.nodes - 2);
  const double b = pos - i, a = 1.0 - b;
  return a * values_(i) + b * values_(i + 1) +
         ((a * a * a - a) * second_(i) + (b * b * b - b) * second_(i + 1)) * h * h / 6.0;
}

SplineSurface::SplineSurface(const GridSolution& solution, const Generator& generator) : solution_(solution) {
  if (solution.dimension() != 1) throw ValidationError("spline surface needs a 1D grid solution");
  const Axis& axis = solution_.axes()[0];
  const int n = axis.nodes;
  const double h = axis.step();
  const int steps = solution_.time_steps();
  const double dt = solution_.time_step();
  Eigen::VectorXd c(n), b(n), y(1);
  for (int i = 0; i < n; ++i) {
    y(0) = axis.coordinate(i);
    c(i) = generator.diffusion(solution_.t_start(), y)(0, 0);
    b(i) = generator.drift(solution_.t_start(), y)(0);
  }
  for (int m = 0; m <= steps; ++m) {
    const auto& v = solution_.slice(m);
    if (!generator.time_homogeneous)
      for (int i = 0; i < n; ++i) {
        y(0) = axis.coordinate(i);
        c(i) = generator.diffusion(solution_.time(m), y)(0, 0);
        b(i) = generator.drift(solution_.time(m), y)(0);
      }
    Eigen::VectorXd rate(n);
    for (int i = 1; i < n - 1; ++i)
      rate(i) = -(0.5 * c(i) * (v(i + 1) - 2 * v(i) + v(i - 1)) / (h * h) + b(i) * (v(i + 1) - v(i - 1)) / (2 * h));
    // Edge nodes: one-sided difference of neighbouring slices.
    const int lo = std::max(m - 1, 0), hi = std::min(m + 1, steps);
    for (int i : {0, n - 1}) rate(i) = (solution_.slice(hi)(i) - solution_.slice(lo)(i)) / ((hi - lo) * dt);
    values_.emplace_back(axis, v);
    rates_.emplace_back(axis, rate);
  }
}

double SplineSurface::operator()(double t, double x) const {
  double z = x;
  if (solution_.log_space()) {
    if (!(x > 0.0)) throw DomainError("log surface queried at a non-positive state");
    z = std::log(x);
  }
  const double dt = solution_.time_step();
  const double scaled = (t - solution_.t_start()) / dt;
  if (scaled < -1e-9 || scaled > solution_.time_steps() + 1e-9) throw DomainError("surface queried outside its time range");
  const int m = std::clamp(static_cast<int>(std::floor(scaled)), 0, solution_.time_steps() - 1);
  const double s = std::clamp(scaled - m, 0.0, 1.0);
  if (s == 0.0) return values_[m](z);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * values_[m](z) + (s3 - 2 * s2 + s) * dt * rates_[m](z) +
         (-2 * s3 + 3 * s2) * values_[m + 1](z) + (s3 - s2) * dt * rates_[m + 1](z);
}

double AugmentedFunctional::value(double t, double x, double s) const {
  if (t >= horizon * (1.0 - 1e-14)) return payoff(x, s);
  return map(t, x, s);
}

double AugmentedFunctional::initial_state(double x0) const {
  switch (kind) {
    case StateKind::running_integral:
      return 0.0;
    case StateKind::running_max:
      return x0;
    case StateKind::terminal:
      break;
  }
  return 0.0;
}

double AugmentedFunctional::advance(double s, double x_left, double x_right, double dt) const {
  switch (kind) {
    case StateKind::running_integral:
      return s + x_left * dt;
    case StateKind::running_max:
      return std::max(s, x_right);
    case StateKind::terminal:
      break;
  }
  return s;
}

double AugmentedFunctional::horizontal_state(double s, double x, double dt) const {
  return kind == StateKind::running_integral ? s + x * dt : s;
}

double AugmentedFunctional::bumped_state(double s, double x, double h) const {
  return kind == StateKind::running_max ? std::max(s, x + h) : s;
}

Eigen::VectorXd running_state(const AugmentedFunctional& f, const SampledPath& path) {
  if (path.dimension() != 1) throw ValidationError("functionals are defined on scalar paths");
  const auto& values = path.values();
  const auto n = values.rows();
  const double dt = path.hierarchy().mesh(path.level());
  Eigen::VectorXd s(n);
  s(0) = f.initial_state(values(0, 0));
  for (Eigen::Index k = 1; k < n; ++k) s(k) = f.advance(s(k - 1), values(k - 1, 0), values(k, 0), dt);
  return s;
}

VerticalDerivative vertical_derivative(const AugmentedFunctional& f, double t, double x, double s, double bump) {
  if (!(bump > 0.0)) throw ValidationError("vertical bump must be positive");
  if (t >= f.horizon) throw ValidationError("vertical derivative needs t < T");
  const double up = f.value(t, x + bump, f.bumped_state(s, x, bump));
  const double mid = f.value(t, x, s);
  const double down = f.value(t, x - bump, f.bumped_state(s, x, -bump));
  return VerticalDerivative{(up - down) / (2.0 * bump), (up - 2.0 * mid + down) / (bump * bump)};
}

double horizontal_derivative(const AugmentedFunctional& f, double t, double x, double s, double dt) {
  if (!(dt > 0.0)) throw ValidationError("horizontal step must be positive");
  if (t + dt > f.horizon * (1.0 + 1e-14)) throw ValidationError("horizontal step runs past T");
  return (f.value(t + dt, x, f.horizontal_state(s, x, dt)) - f.value(t, x, s)) / dt;
}

FunctionalDerivativeReport derivative_report(const AugmentedFunctional& f, const LocalVolModel& model, double t,
                                             double x, double s, double bump, double dt) {
  if (model.dimension() != 1) throw ValidationError("functional residuals need a 1D model");
  FunctionalDerivativeReport r;
  r.t = t;
  r.x = x;
  r.state = s;
  const auto v = vertical_derivative(f, t, x, s, bump);
  r.vertical = v.first;
  r.second_vertical = v.second;
  r.horizontal = horizontal_derivative(f, t, x, s, dt);
  double a = model.covariance(t, Eigen::VectorXd::Constant(1, x))(0, 0);
  if (model.flavor() == Flavor::positive) a *= x * x;
  r.generator = 0.5 * a * v.second;
  r.residual = r.horizontal + r.generator;
  return r;
}

FtvpReport ftvp_residual(const AugmentedFunctional& f, const LocalVolModel& model,
                         const std::vector<SampledPath>& paths, const FtvpOptions& options) {
  FtvpReport report;
  report.tolerance = options.tolerance;
  const double bump = options.bump > 0.0 ? options.bump : 1e-4 * f.scale;
  for (const auto& path : paths) {
    const auto& hierarchy = path.hierarchy();
    const int level = path.level();
    const double dt = options.dt > 0.0 ? options.dt : hierarchy.mesh(level);
    if (dt > hierarchy.mesh(level) * (1.0 + 1e-12)) throw ValidationError("horizontal dt exceeds the finest mesh");
    const Eigen::VectorXd state = running_state(f, path);
    for (double t : options.sample_times) {
      const auto k = hierarchy.index_of(level, t);
      if (k < 0) throw ValidationError("sample time is not a node of the path");
      const double x = path.values()(k, 0);
      report.samples.push_back(derivative_report(f, model, t, x, state(k), bump, dt));
      report.sup_residual = std::max(report.sup_residual, std::abs(report.samples.back().residual));
    }
    const auto last = hierarchy.intervals(level);
    const double x_end = path.values()(last, 0);
    const double mismatch = std::abs(f.value(hierarchy.horizon(), x_end, state(last)) - f.payoff(x_end, state(last)));
    report.terminal_mismatch = std::max(report.terminal_mismatch, mismatch);
  }
  report.passed = report.sup_residual <= report.tolerance && report.terminal_mismatch == 0.0;
  return report;
}

void write_ftvp_csv(std::ostream& out, const FtvpReport& report) {
  out << "t,x,state,DF,A_F,residual\n";
  char buffer[160];
  for (const auto& s : report.samples) {
    std::snprintf(buffer, sizeof buffer, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.x, s.state, s.horizontal,
                  s.generator, s.residual);
    out << buffer;
  }
  if (!out) throw IoError("failed writing residual CSV");
}

FunctionalHedgeCheck functional_hedge_check(const AugmentedFunctional& f, const SampledPath& path, int level,
                                            double bump) {
  const auto& hierarchy = path.hierarchy();
  hierarchy.check_level(level);
  if (bump <= 0.0) bump = 1e-4 * f.scale;
  const Eigen::VectorXd state = running_state(f, path);
  const auto n = hierarchy.intervals(level);
  FunctionalHedgeCheck check;
  auto at = [&](std::int64_t k, double& t, double& x, double& s) {
    const auto fine = hierarchy.finest_index(level, k);
    t = hierarchy.time(level, k);
    x = path.values()(fine, 0);
    s = state(fine);
  };
  double t = 0.0, x = 0.0, s = 0.0;
  at(0, t, x, s);
  check.initial_value = f.value(t, x, s);
  double integral = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    at(k, t, x, s);
    const double xi = vertical_derivative(f, t, x, s, bump).first;
    double t1 = 0.0, x1 = 0.0, s1 = 0.0;
    at(k + 1, t1, x1, s1);
    integral += xi * (x1 - x);
    const double value = f.value(t1, x1, s1);
    check.max_discrepancy = std::max(check.max_discrepancy, std::abs(value - check.initial_value - integral));
    if (k + 1 == n) check.final_value = value;
  }
  return check;
}

namespace {

GridSolution solve_reduced(const Generator& g, std::function<double(double)> terminal, const GridSpec& spec,
                           double horizon) {
  const Axis& axis = spec.axes[0];
  Eigen::VectorXd nodes(axis.nodes);
  for (int i = 0; i < axis.nodes; ++i) nodes(i) = terminal(axis.coordinate(i));
  return solve_generator(g, nodes, 0.0, horizon, spec, false);
}

}  // namespace

BuiltFunctional asian_call_functional(double sigma, double strike, double horizon, int nodes, int time_steps,
                                      double z_max, double stretch) {
  if (!(sigma > 0.0) || !(horizon > 0.0) || !(z_max > 0.0) || !(stretch > 0.0))
    throw ValidationError("Asian functional needs sigma, T, z_max, stretch > 0");
  // Solved in q with z = stretch * sinh(q): fine steps near z = 0, where the
  // diffusion degenerates and the layer of g has width ~ sigma z sqrt(T - t).
  Generator g;
  g.dimension = 1;
  g.time_homogeneous = true;
  g.diffusion = [sigma](double, const Eigen::VectorXd& q) {
    const double th = std::tanh(q(0));
    return Eigen::MatrixXd::Constant(1, 1, sigma * sigma * th * th);
  };
  g.drift = [sigma, stretch, horizon](double, const Eigen::VectorXd& q) {
    const double th = std::tanh(q(0));
    return Eigen::VectorXd::Constant(1, -1.0 / (horizon * stretch * std::cosh(q(0))) - 0.5 * sigma * sigma * th * th * th);
  };
  GridSpec spec;
  spec.axes = {Axis{0.0, std::asinh(z_max / stretch), nodes}};
  spec.time_steps = time_steps;
  spec.lower.kind = BoundaryKind::dirichlet;
  spec.lower.value = [horizon](double t) { return (horizon - t) / horizon; };
  const GridSolution reduced = solve_reduced(g, [](double) { return 0.0; }, spec, horizon);
  auto surface = std::make_shared<const SplineSurface>(reduced, g);

  BuiltFunctional out;
  out.surface = surface;
  out.grid_step = spec.axes[0].step();
  out.time_step = horizon / time_steps;
  auto& f = out.functional;
  f.name = "asian_call";
  f.kind = StateKind::running_integral;
  f.horizon = horizon;
  f.scale = strike;
  f.map = [surface, strike, horizon, stretch](double t, double x, double s) {
    if (!(x > 0.0)) throw DomainError("Asian functional needs a positive spot");
    const double z = (strike - s / horizon) / x;
    if (z <= 0.0) return x * ((horizon - t) / horizon - z);
    return x * (*surface)(t, std::asinh(z / stretch));
  };
  f.payoff = [strike, horizon](double, double s) { return std::max(s / horizon - strike, 0.0); };
  return out;
}

BuiltFunctional lookback_put_functional(double sigma, double horizon, int nodes, int time_steps, double w_max) {
  if (!(sigma > 0.0) || !(horizon > 0.0) || !(w_max > 0.0)) throw ValidationError("lookback functional needs sigma, T, w_max > 0");
  Generator g;
  g.dimension = 1;
  g.time_homogeneous = true;
  g.diffusion = [sigma](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, sigma * sigma); };
  g.drift = [sigma](double, const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, -0.5 * sigma * sigma); };
  GridSpec spec;
  spec.axes = {Axis{0.0, w_max, nodes}};
  spec.time_steps = time_steps;
  spec.lower.kind = BoundaryKind::zero_slope;
  const GridSolution reduced = solve_reduced(g, [](double w) { return std::expm1(w); }, spec, horizon);
  auto surface = std::make_shared<const SplineSurface>(reduced, g);

  BuiltFunctional out;
  out.surface = surface;
  out.grid_step = spec.axes[0].step();
  out.time_step = horizon / time_steps;
  auto& f = out.functional;
  f.name = "lookback_put";
  f.kind = StateKind::running_max;
  f.horizon = horizon;
  f.smooth_in_state = false;
  f.map = [surface](double t, double x, double m) {
    if (!(x > 0.0) || m < x * (1.0 - 1e-12)) throw DomainError("lookback functional needs 0 < x <= m");
    return x * (*surface)(t, std::log(std::max(m, x) / x));
  };
  f.payoff = [](double x, double m) { return m - x; };
  return out;
}

AugmentedFunctional spot_functional(double horizon) {
  AugmentedFunctional f;
  f.name = "spot";
  f.horizon = horizon;
  f.map = [](double, double x, double) { return x; };
  f.payoff = [](double x, double) { return x; };
  return f;
}

AugmentedFunctional integral_functional(double horizon) {
  AugmentedFunctional f;
  f.name = "integral";
  f.kind = StateKind::running_integral;
  f.horizon = horizon;
  f.map = [](double, double, double s) { return s; };
  f.payoff = [](double, double s) { return s; };
  return f;
}

BuiltFunctional markov_functional(const GridSolution& solution, const LocalVolModel& model) {
  if (model.dimension() != 1) throw ValidationError("markov functional needs a 1D model");
  auto surface = std::make_shared<const SplineSurface>(solution, solver_generator(model));
  BuiltFunctional out;
  out.surface = surface;
  out.grid_step = solution.axes()[0].step();
  out.time_step = solution.time_step();
  auto& f = out.functional;
  f.name = "markov";
  f.horizon = solution.t_end();
  f.scale = solution.log_space() ? std::exp(0.5 * (solution.axes()[0].lower + solution.axes()[0].upper)) : 1.0;
  f.map = [surface](double t, double x, double) { return (*surface)(t, x); };
  f.payoff = [surface, t_end = solution.t_end()](double x, double) { return (*surface)(t_end, x); };
  return out;
}

}  // namespace pathhedge
