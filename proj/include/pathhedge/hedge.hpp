#pragma once

// Pathwise Delta hedging along sampled paths with strategies from the
// recursive scheme, plus the robustness sweep and the no-arbitrage probe.

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pathhedge/paths.hpp"
#include "pathhedge/scheme.hpp"

namespace pathhedge {

struct HedgeReport {
  int level = 0;
  Eigen::VectorXd times;  // nodes of T_n
  Eigen::MatrixXd xi;     // one row per node
  Eigen::VectorXd eta;
  Eigen::VectorXd value;  // V(t) = v0 + level-n Foellmer integral of xi
  Eigen::MatrixXd spot;
  double initial_capital = 0.0;
  double payoff = 0.0;
  double terminal_value = 0.0;
  double replication_error = 0.0;  // V(T) - payoff
  Eigen::MatrixXd realized_covariation;
  /// Minimum of v over every grid the strategy used (admissibility floor).
  double min_grid_value = 0.0;
  bool exited_grid = false;
  std::string exit_reason;
};

/// Hedges `path` at level n starting from v_0 for the prefix (S(0)). Fixing
/// times must be nodes of T_n. If the path leaves the PDE grid the report is
/// flagged and the remaining values are NaN.
HedgeReport run_hedge(const SampledPath& path, const SchemeSolution& initial, int level);

HedgeReport run_hedge(const SampledPath& path, const FixingSchedule& schedule, const PayoffSpec& payoff,
                      const LocalVolModel& hedge_model, const SchemeConfig& config, int level);

/// CSV `t,V,xi_1..xi_d,eta,S_1..S_d`.
void write_hedge_csv(std::ostream& out, const HedgeReport& report);

struct HedgeBatch {
  std::vector<HedgeReport> reports;
  double median_abs_error = 0.0;
  double median_error = 0.0;
  double shortfall_frequency = 0.0;  // V(T) - payoff < -tolerance
  double shortfall_tolerance = 0.0;
  std::size_t exited = 0;
};

/// Generates paths from `paths` (kappa applies to realized covariation) and
/// hedges each with the scheme built from the unscaled hedge model.
HedgeBatch hedge_batch(const PathGeneratorSpec& paths, const FixingSchedule& schedule, const PayoffSpec& payoff,
                       const SchemeConfig& config, int level, int threads, bool keep_reports = false);

struct SweepRow {
  std::string payoff;
  double kappa = 1.0;
  std::size_t n_paths = 0;
  double median_error = 0.0;  // median of V(T) - payoff
  double shortfall_freq = 0.0;
};

struct SweepPayoff {
  std::string name;
  PayoffSpec payoff;
  FixingSchedule schedule;
};

/// For each payoff x kappa: hedge n_paths paths whose covariation is kappa a
/// with the strategy for a. Shortfall tolerance is 0.1% of spot.
std::vector<SweepRow> robustness_sweep(const std::vector<SweepPayoff>& payoffs, const std::vector<double>& kappas,
                                       const PathGeneratorSpec& base, const SchemeConfig& config, int level,
                                       int threads);

/// CSV `payoff,kappa,n_paths,median_error,shortfall_freq`.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

enum class ProbeVerdict { pass, fail, not_applicable };
const char* to_string(ProbeVerdict verdict);

struct ProbeReport {
  ProbeVerdict verdict = ProbeVerdict::not_applicable;
  double initial_value = 0.0;
  double sup_value = 0.0;            // max over paths and t of V(t)
  double min_value = 0.0;            // min over paths and t of V(t)
  double admissibility_floor = 0.0;  // c = ||min(v, 0)||_inf over the grids used
  double value_tolerance = 0.0;      // 1e-6 scale
  double v0_threshold = 1e-8;
  std::size_t paths = 0;
  std::size_t exited = 0;
  std::string note;
};

/// Numerical contrapositive of the no-arbitrage theorem for a scheme
/// strategy with h >= 0: when v0(0, spot) <= v0_threshold, no sampled V(t)
/// may exceed 1e-6 scale and V must stay above -c. The verdict reads "no
/// arbitrage found at tolerance", never a proof.
ProbeReport no_arbitrage_probe(const PathGeneratorSpec& paths, const FixingSchedule& schedule,
                               const PayoffSpec& payoff, const SchemeConfig& config, int level, int threads,
                               double scale, double v0_threshold = 1e-8);

double median(std::vector<double> values);

}  // namespace pathhedge
