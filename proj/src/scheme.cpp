#include "pathhedge/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathhedge/parallel.hpp"

namespace pathhedge {

FixingSchedule::FixingSchedule(std::vector<double> times, const PartitionHierarchy& hierarchy)
    : times_(std::move(times)) {
  if (times_.size() < 2) throw ValidationError("fixing schedule needs t0 and at least one more fixing");
  if (times_.front() != 0.0) throw ValidationError("fixing schedule must start at t0 = 0");
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (!(times_[k] > times_[k - 1])) throw ValidationError("fixing times must be strictly increasing");
  if (std::abs(times_.back() - hierarchy.horizon()) > 1e-12 * hierarchy.horizon())
    throw ValidationError("last fixing must equal the horizon T");
  for (double t : times_)
    if (!hierarchy.contains(hierarchy.max_level(), t))
      throw ValidationError("fixing time " + std::to_string(t) + " is not a node of the finest partition");
  times_.back() = hierarchy.horizon();
}

int FixingSchedule::interval_of(double t) const {
  if (t < 0.0 || t > horizon() * (1.0 + 1e-12)) throw DomainError("time outside the fixing schedule");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const int k = static_cast<int>(it - times_.begin()) - 1;
  return std::min(k, count() - 1);
}

SchemeConfig default_scheme_config(const LocalVolModel& model, const Eigen::VectorXd& spot, double horizon, int nodes,
                                   int time_steps) {
  SchemeConfig config;
  config.grid = centered_grid(model, spot, horizon, nodes, time_steps);
  config.fixing_nodes = model.dimension() == 1 ? 129 : 33;
  return config;
}

void cubic_weights(const Axis& axis, double y, int& first, double weights[4]) {
  const double pos = (y - axis.lower) / axis.step();
  first = std::clamp(static_cast<int>(std::floor(pos)) - 1, 0, axis.nodes - 4);
  const double s = pos - first;  // in [0, 3] inside the domain
  weights[0] = -(s - 1) * (s - 2) * (s - 3) / 6.0;
  weights[1] = s * (s - 2) * (s - 3) / 2.0;
  weights[2] = -s * (s - 1) * (s - 3) / 2.0;
  weights[3] = s * (s - 1) * (s - 2) / 6.0;
}

namespace {

double cubic_eval(const std::vector<Axis>& axes, const Eigen::VectorXd& values, const Eigen::VectorXd& y) {
  int f0 = 0;
  double w0[4];
  cubic_weights(axes[0], y(0), f0, w0);
  if (axes.size() == 1) {
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) acc += w0[a] * values(f0 + a);
    return acc;
  }
  int f1 = 0;
  double w1[4];
  cubic_weights(axes[1], y(1), f1, w1);
  const Eigen::Index n0 = axes[0].nodes;
  double acc = 0.0;
  for (int b = 0; b < 4; ++b)
    for (int a = 0; a < 4; ++a) acc += w0[a] * w1[b] * values((f0 + a) + n0 * (f1 + b));
  return acc;
}

std::vector<Eigen::VectorXd> tensor_points(const std::vector<Axis>& axes, bool log_space, bool solver_coordinates) {
  Eigen::Index total = 1;
  for (const auto& axis : axes) total *= axis.nodes;
  std::vector<Eigen::VectorXd> out(total, Eigen::VectorXd(axes.size()));
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    Eigen::Index rest = flat;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const auto k = rest % axes[i].nodes;
      rest /= axes[i].nodes;
      const double y = axes[i].coordinate(static_cast<int>(k));
      out[flat](i) = log_space && !solver_coordinates ? std::exp(y) : y;
    }
  }
  return out;
}

}  // namespace

SchemeContext::SchemeContext(LocalVolModel model, FixingSchedule schedule, PayoffSpec payoff, SchemeConfig config)
    : model_(std::move(model)),
      schedule_(std::move(schedule)),
      payoff_(std::move(payoff)),
      config_(std::move(config)),
      generator_(solver_generator(model_)) {
  const int d = model_.dimension();
  if (payoff_.dimension() != d) throw ValidationError("payoff dimension does not match the model");
  if (payoff_.last_fixing() != schedule_.count()) throw ValidationError("payoff fixings do not match the schedule");
  if (config_.grid.axes.size() != static_cast<std::size_t>(d)) throw ValidationError("grid axes do not match the model");
  if (config_.fixing_nodes < 4) throw ValidationError("fixing grid needs at least 4 nodes");
  if (config_.grid.time_steps < schedule_.count()) throw ValidationError("need at least one time step per interval");
  for (const auto& axis : config_.grid.axes) {
    if (axis.nodes < 4 || !(axis.upper > axis.lower)) throw ValidationError("grid axis needs >= 4 nodes and upper > lower");
    fixing_axes_.push_back(Axis{axis.lower, axis.upper, config_.fixing_nodes});
  }
  fixing_points_ = tensor_points(fixing_axes_, log_space(), false);
  pde_points_ = tensor_points(config_.grid.axes, log_space(), false);
}

GridSpec SchemeContext::interval_grid(int k) const {
  GridSpec spec = config_.grid;
  const double share = (schedule_.time(k + 1) - schedule_.time(k)) / schedule_.horizon();
  spec.time_steps = std::max(1, static_cast<int>(std::lround(config_.grid.time_steps * share)));
  spec.rannacher = config_.grid.rannacher && k + 1 == schedule_.count();
  return spec;
}

bool SchemeContext::covers(const Eigen::VectorXd& x) const {
  if (x.size() != model_.dimension()) return false;
  for (int i = 0; i < x.size(); ++i) {
    if (log_space() && !(x(i) > 0.0)) return false;
    const double y = log_space() ? std::log(x(i)) : x(i);
    const auto& axis = config_.grid.axes[i];
    if (!(y >= axis.lower && y <= axis.upper)) return false;
  }
  return true;
}

double SchemeContext::estimated_solves(int k) const {
  const int n = schedule_.count();
  const double per_fixing = std::pow(static_cast<double>(config_.fixing_nodes), model_.dimension());
  double total = 1.0, branch = 1.0;
  for (int j = k + 1; j <= n - 1; ++j) {
    if (payoff_.depends_on(j)) branch *= per_fixing;
    total += branch;
  }
  return total;
}

SchemeContext::Key SchemeContext::key(int k, const Fixings& prefix) const {
  Key out{k, {}};
  for (int i = 0; i <= k; ++i)
    if (payoff_.depends_on(i))
      for (Eigen::Index c = 0; c < prefix[i].size(); ++c) out.second.push_back(prefix[i](c));
  return out;
}

std::shared_ptr<const Eigen::VectorXd> SchemeContext::start_slice(int k, const Fixings& prefix, int threads) const {
  Key id;
  if (config_.memoize) {
    id = key(k, prefix);
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
  }
  const GridSolution solution = solve_interval(k, prefix, threads);
  auto slice = std::make_shared<const Eigen::VectorXd>(solution.slice(0));
  if (config_.memoize) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = memo_.emplace(std::move(id), slice);
    return it->second;
  }
  return slice;
}

Eigen::VectorXd SchemeContext::terminal_nodes(int k, const Fixings& prefix, int threads) const {
  const int n = schedule_.count();
  const auto nodes = static_cast<Eigen::Index>(pde_points_.size());
  Eigen::VectorXd out(nodes);
  Fixings fixings = prefix;
  if (k + 1 == n) {
    fixings.push_back(pde_points_.front());
    for (Eigen::Index i = 0; i < nodes; ++i) {
      fixings.back() = pde_points_[i];
      out(i) = payoff_(fixings);
    }
    return out;
  }
  if (!payoff_.depends_on(k + 1)) {
    // v_{k+1} does not read x_{k+1}: its start slice is f_{k+1} on the nodes.
    fixings.push_back(prefix.back());
    return *start_slice(k + 1, fixings, threads);
  }
  const auto& axes = config_.grid.axes;
  const std::size_t m = fixing_points_.size();
  Eigen::VectorXd at_fixing(static_cast<Eigen::Index>(m));
  parallel_for(m, threads, [&](std::size_t j) {
    Fixings extended = prefix;
    extended.push_back(fixing_points_[j]);
    const auto slice = start_slice(k + 1, extended, 1);
    Eigen::VectorXd y = fixing_points_[j];
    if (log_space()) y = y.array().log().matrix();
    at_fixing(static_cast<Eigen::Index>(j)) = cubic_eval(axes, *slice, y);
  });
  const auto solver_nodes = tensor_points(axes, log_space(), true);
  for (Eigen::Index i = 0; i < nodes; ++i) out(i) = cubic_eval(fixing_axes_, at_fixing, solver_nodes[i]);
  return out;
}

GridSolution SchemeContext::solve_interval(int k, const Fixings& prefix, int threads) const {
  const Eigen::VectorXd terminal = terminal_nodes(k, prefix, threads);
  GridSolution solution =
      solve_generator(generator_, terminal, schedule_.time(k), schedule_.time(k + 1), interval_grid(k), log_space());
  std::lock_guard lock(mutex_);
  ++solves_;
  return solution;
}

std::size_t SchemeContext::nested_solves() const {
  std::lock_guard lock(mutex_);
  return solves_;
}

std::size_t SchemeContext::memo_entries() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

double SchemeSolution::interval_start() const { return context_->schedule().time(k_); }

double SchemeSolution::interval_end() const {
  return terminal() ? context_->schedule().horizon() : context_->schedule().time(k_ + 1);
}

const GridSolution& SchemeSolution::grid() const {
  if (!grid_) throw ValidationError("scheme solution is at the terminal stage (schedule exhausted)");
  return *grid_;
}

double SchemeSolution::value(double t, const Eigen::VectorXd& spot) const {
  if (terminal()) return terminal_value_;
  return grid_->value(t, spot);
}

double SchemeSolution::terminal_value() const {
  if (!terminal()) throw ValidationError("scheme solution has not reached the last fixing");
  return terminal_value_;
}

std::size_t SchemeSolution::nested_solves() const { return context_->nested_solves(); }
std::size_t SchemeSolution::memo_entries() const { return context_->memo_entries(); }

SchemeSolution build_scheme(const LocalVolModel& model, const FixingSchedule& schedule, const PayoffSpec& payoff,
                            const Fixings& prefix, const SchemeConfig& config) {
  if (prefix.empty() || prefix.size() > static_cast<std::size_t>(schedule.count()))
    throw ValidationError("prefix must hold x0..xk with k < N");
  auto context = std::make_shared<SchemeContext>(model, schedule, payoff, config);
  for (const auto& x : prefix) {
    if (x.size() != model.dimension()) throw ValidationError("prefix fixing has the wrong dimension");
    if (!context->covers(x)) throw DomainError("prefix fixing lies outside the PDE grid");
  }
  const int k = static_cast<int>(prefix.size()) - 1;
  const double needed = context->estimated_solves(k);
  if (needed > config.budget)
    throw BudgetError("scheme needs " + std::to_string(static_cast<long long>(needed)) +
                      " nested solves, above the budget cap " + std::to_string(static_cast<long long>(config.budget)));
  SchemeSolution out;
  out.context_ = context;
  out.k_ = k;
  out.prefix_ = prefix;
  out.grid_.emplace(context->solve_interval(k, prefix, config.threads));
  return out;
}

Eigen::VectorXd scheme_delta(const SchemeSolution& solution, double t, const Eigen::VectorXd& spot) {
  const auto& grid = solution.grid();
  const double tol = 1e-12 * std::max(1.0, solution.interval_end());
  if (t < solution.interval_start() - tol || t > solution.interval_end() + tol)
    throw DomainError("scheme_delta: time outside the solution's interval");
  return grid.gradient(std::clamp(t, grid.t_start(), grid.t_end()), spot);
}

SchemeSolution roll_fixing(const SchemeSolution& solution, const Eigen::VectorXd& fixing) {
  if (solution.terminal()) throw ValidationError("schedule exhausted: no fixing left to roll");
  const auto& context = *solution.context_;
  if (fixing.size() != context.model().dimension()) throw ValidationError("fixing has the wrong dimension");
  SchemeSolution out;
  out.context_ = solution.context_;
  out.k_ = solution.k_ + 1;
  out.prefix_ = solution.prefix_;
  out.prefix_.push_back(fixing);
  if (out.k_ == context.schedule().count()) {
    out.terminal_value_ = context.payoff()(out.prefix_);
    return out;
  }
  if (!context.covers(fixing)) throw DomainError("observed fixing lies outside the PDE grid");
  out.grid_.emplace(context.solve_interval(out.k_, out.prefix_, 1));
  return out;
}

}  // namespace pathhedge
