#pragma once

// Backward chain of terminal-value problems across fixing dates. For a
// realized prefix (x0..xk) the value v_k(t, prefix, x) on [t_k, t_{k+1}]
// solves the TVP with terminal f_{k+1}(x) = v_{k+1}(t_{k+1}, prefix, x, x),
// and v_N = h.

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "pathhedge/grid.hpp"
#include "pathhedge/lattice.hpp"
#include "pathhedge/local_vol.hpp"
#include "pathhedge/payoff.hpp"

namespace pathhedge {

class FixingSchedule {
 public:
  /// times = t0..tN with t0 = 0, strictly increasing, each a node of T_L.
  FixingSchedule(std::vector<double> times, const PartitionHierarchy& hierarchy);

  int count() const { return static_cast<int>(times_.size()) - 1; }  // N
  double time(int k) const { return times_.at(k); }
  const std::vector<double>& times() const { return times_; }
  double horizon() const { return times_.back(); }
  /// Index k with t_k <= t < t_{k+1} (N - 1 for t = T).
  int interval_of(double t) const;

 private:
  std::vector<double> times_;
};

struct SchemeConfig {
  /// One grid for every interval; time_steps covers the whole horizon and
  /// is split across intervals in proportion to their length.
  GridSpec grid;
  int fixing_nodes = 33;
  double budget = 1e5;
  bool memoize = true;
  int threads = 1;
};

/// Grid centred on the spot over the whole schedule (6 sd of the declared
/// bound); 129 fixing nodes in 1D, 33 per axis in 2D.
SchemeConfig default_scheme_config(const LocalVolModel& model, const Eigen::VectorXd& spot, double horizon,
                                   int nodes = 401, int time_steps = 200);

class SchemeContext;

class SchemeSolution {
 public:
  int interval() const { return k_; }
  const Fixings& prefix() const { return prefix_; }
  bool terminal() const { return !grid_.has_value(); }
  double interval_start() const;
  double interval_end() const;

  /// v_k on [t_k, t_{k+1}]; throws on the terminal stage.
  const GridSolution& grid() const;
  double value(double t, const Eigen::VectorXd& spot) const;
  /// The payoff once the schedule is exhausted.
  double terminal_value() const;

  const SchemeContext& context() const { return *context_; }
  std::size_t nested_solves() const;
  std::size_t memo_entries() const;

 private:
  friend class SchemeContext;
  friend SchemeSolution build_scheme(const LocalVolModel&, const FixingSchedule&, const PayoffSpec&, const Fixings&,
                                     const SchemeConfig&);
  friend SchemeSolution roll_fixing(const SchemeSolution&, const Eigen::VectorXd&);

  std::shared_ptr<SchemeContext> context_;
  int k_ = 0;
  Fixings prefix_;
  std::optional<GridSolution> grid_;
  double terminal_value_ = 0.0;
};

/// Shared state of one scheme: model, schedule, payoff, grid and the memo of
/// nested start slices keyed by (k, prefix entries the payoff reads).
class SchemeContext {
 public:
  SchemeContext(LocalVolModel model, FixingSchedule schedule, PayoffSpec payoff, SchemeConfig config);

  const LocalVolModel& model() const { return model_; }
  const FixingSchedule& schedule() const { return schedule_; }
  const PayoffSpec& payoff() const { return payoff_; }
  const SchemeConfig& config() const { return config_; }
  bool log_space() const { return model_.flavor() == Flavor::positive; }

  /// Nested solves needed to build v_k for one prefix.
  double estimated_solves(int k) const;

  /// Terminal data f_{k+1} of v_k at the PDE nodes for the given prefix.
  Eigen::VectorXd terminal_nodes(int k, const Fixings& prefix, int threads) const;
  /// Full solve of v_k on [t_k, t_{k+1}].
  GridSolution solve_interval(int k, const Fixings& prefix, int threads) const;

  std::size_t nested_solves() const;
  std::size_t memo_entries() const;

  /// Grid spec for interval k (time steps scaled to its length, Rannacher
  /// start only when the terminal data is the raw payoff).
  GridSpec interval_grid(int k) const;
  /// Fixing-grid nodes (original coordinates) for the nested recursion.
  const std::vector<Eigen::VectorXd>& fixing_nodes() const { return fixing_points_; }
  bool covers(const Eigen::VectorXd& x) const;

 private:
  using Key = std::pair<int, std::vector<double>>;
  std::shared_ptr<const Eigen::VectorXd> start_slice(int k, const Fixings& prefix, int threads) const;
  Key key(int k, const Fixings& prefix) const;

  LocalVolModel model_;
  FixingSchedule schedule_;
  PayoffSpec payoff_;
  SchemeConfig config_;
  Generator generator_;
  std::vector<Eigen::VectorXd> fixing_points_;   // original coordinates
  std::vector<Axis> fixing_axes_;                // solver coordinates
  std::vector<Eigen::VectorXd> pde_points_;      // original coordinates of PDE nodes

  mutable std::mutex mutex_;
  mutable std::map<Key, std::shared_ptr<const Eigen::VectorXd>> memo_;
  mutable std::size_t solves_ = 0;
};

/// v_k for the realized prefix x0..xk (k = prefix.size() - 1). Throws
/// BudgetError when the nested solve count would exceed config.budget.
SchemeSolution build_scheme(const LocalVolModel& model, const FixingSchedule& schedule, const PayoffSpec& payoff,
                            const Fixings& prefix, const SchemeConfig& config);

/// Gradient of v_k at (t, spot); t must lie in [t_k, t_{k+1}].
Eigen::VectorXd scheme_delta(const SchemeSolution& solution, double t, const Eigen::VectorXd& spot);

/// Appends the observed fixing x_{k+1} and returns the solution for the next
/// interval (or the terminal payoff once k + 1 = N).
SchemeSolution roll_fixing(const SchemeSolution& solution, const Eigen::VectorXd& fixing);

/// 4-point Lagrange weights on a uniform axis for coordinate y (nodes i0..i0+3).
void cubic_weights(const Axis& axis, double y, int& first, double weights[4]);

}  // namespace pathhedge
