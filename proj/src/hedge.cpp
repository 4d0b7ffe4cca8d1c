#include "pathhedge/hedge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "pathhedge/parallel.hpp"

namespace pathhedge {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

HedgeReport run_hedge(const SampledPath& path, const SchemeSolution& initial, int level) {
  const auto& context = initial.context();
  const auto& schedule = context.schedule();
  const auto& hierarchy = path.hierarchy();
  hierarchy.check_level(level);
  if (initial.interval() != 0 || initial.terminal()) throw ValidationError("hedge must start from the first interval");
  if (path.dimension() != context.model().dimension()) throw ValidationError("path dimension does not match the model");
  if (path.flavor() != context.model().flavor()) throw ValidationError("path flavor does not match the model");
  if (std::abs(hierarchy.horizon() - schedule.horizon()) > 1e-12 * schedule.horizon())
    throw ValidationError("path horizon does not match the schedule");
  const int n_fix = schedule.count();
  std::vector<std::int64_t> fixing_index(n_fix + 1);
  for (int j = 0; j <= n_fix; ++j) {
    fixing_index[j] = hierarchy.index_of(level, schedule.time(j));
    if (fixing_index[j] < 0) throw ValidationError("fixing times must be nodes of the hedging level");
  }

  const auto n = hierarchy.intervals(level);
  const int d = path.dimension();
  HedgeReport r;
  r.level = level;
  r.times.resize(n + 1);
  r.xi.setConstant(n + 1, d, std::numeric_limits<double>::quiet_NaN());
  r.eta.setConstant(n + 1, std::numeric_limits<double>::quiet_NaN());
  r.value.setConstant(n + 1, std::numeric_limits<double>::quiet_NaN());
  r.spot = path.on_level(level);
  for (std::int64_t k = 0; k <= n; ++k) r.times(k) = hierarchy.time(level, k);
  r.realized_covariation = covariation(path, level).matrix_at_horizon();

  const Eigen::VectorXd s0 = path.node(level, 0);
  const SchemeSolution* current = &initial;
  std::optional<SchemeSolution> rolled;
  r.min_grid_value = initial.grid().min_value();
  auto bail = [&](const std::string& why) {
    r.exited_grid = true;
    r.exit_reason = why;
    r.payoff = r.terminal_value = r.replication_error = std::numeric_limits<double>::quiet_NaN();
    return r;
  };
  if (!initial.grid().covers_interior(s0)) return bail("initial spot outside the grid interior");
  r.initial_capital = initial.value(0.0, s0);
  double v = r.initial_capital;
  int next_fixing = 1;
  Eigen::VectorXd xi(d);
  for (std::int64_t k = 0; k < n; ++k) {
    const double t = r.times(k);
    const Eigen::VectorXd x = r.spot.row(k).transpose();
    try {
      while (next_fixing < n_fix && fixing_index[next_fixing] == k) {
        SchemeSolution next = roll_fixing(*current, x);
        rolled = std::move(next);
        current = &*rolled;
        r.min_grid_value = std::min(r.min_grid_value, current->grid().min_value());
        ++next_fixing;
      }
      if (!current->grid().covers_interior(x)) return bail("path left the grid interior at t = " + std::to_string(t));
      xi = scheme_delta(*current, t, x);
    } catch (const DomainError& e) {
      return bail(e.what());
    }
    r.value(k) = v;
    r.xi.row(k) = xi.transpose();
    r.eta(k) = v - xi.dot(x);
    v += xi.dot(r.spot.row(k + 1).transpose() - x);
  }
  const Eigen::VectorXd x_end = r.spot.row(n).transpose();
  const SchemeSolution final_stage = roll_fixing(*current, x_end);
  r.value(n) = v;
  r.xi.row(n) = xi.transpose();
  r.eta(n) = v - xi.dot(x_end);
  r.terminal_value = v;
  r.payoff = final_stage.terminal_value();
  r.replication_error = v - r.payoff;
  return r;
}

HedgeReport run_hedge(const SampledPath& path, const FixingSchedule& schedule, const PayoffSpec& payoff,
                      const LocalVolModel& hedge_model, const SchemeConfig& config, int level) {
  const Fixings prefix{path.node(path.level(), 0)};
  return run_hedge(path, build_scheme(hedge_model, schedule, payoff, prefix, config), level);
}

void write_hedge_csv(std::ostream& out, const HedgeReport& report) {
  const auto d = report.spot.cols();
  out << "t,V";
  for (Eigen::Index i = 0; i < d; ++i) out << ",xi_" << (i + 1);
  out << ",eta";
  for (Eigen::Index i = 0; i < d; ++i) out << ",S_" << (i + 1);
  out << '\n';
  char buffer[32];
  auto emit = [&](double v) {
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    out << buffer;
  };
  for (Eigen::Index k = 0; k < report.times.size(); ++k) {
    emit(report.times(k));
    out << ',';
    emit(report.value(k));
    for (Eigen::Index i = 0; i < d; ++i) {
      out << ',';
      emit(report.xi(k, i));
    }
    out << ',';
    emit(report.eta(k));
    for (Eigen::Index i = 0; i < d; ++i) {
      out << ',';
      emit(report.spot(k, i));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing hedge CSV");
}

namespace {

HedgeReport summary_only(HedgeReport r) {
  r.times.resize(0);
  r.xi.resize(0, 0);
  r.eta.resize(0);
  r.value.resize(0);
  r.spot.resize(0, 0);
  return r;
}

struct PathSummary {
  HedgeReport report;
  double sup = -std::numeric_limits<double>::infinity();
  double inf = std::numeric_limits<double>::infinity();
};

std::vector<PathSummary> hedge_paths(const SchemeSolution& initial, const PathGeneratorSpec& spec, int level,
                                     int threads, bool keep_reports) {
  std::vector<PathSummary> out(spec.count);
  parallel_for(spec.count, threads, [&](std::size_t i) {
    const SampledPath path = generate_path(spec, i);
    HedgeReport r = run_hedge(path, initial, level);
    PathSummary& s = out[i];
    for (Eigen::Index k = 0; k < r.value.size(); ++k)
      if (std::isfinite(r.value(k))) {
        s.sup = std::max(s.sup, r.value(k));
        s.inf = std::min(s.inf, r.value(k));
      }
    s.report = keep_reports ? std::move(r) : summary_only(std::move(r));
  });
  return out;
}

HedgeBatch summarize(std::vector<PathSummary> paths, double spot_scale) {
  HedgeBatch batch;
  batch.shortfall_tolerance = 1e-3 * spot_scale;
  std::vector<double> errors, abs_errors;
  std::size_t shortfalls = 0;
  for (auto& p : paths) {
    if (p.report.exited_grid) {
      ++batch.exited;
    } else {
      errors.push_back(p.report.replication_error);
      abs_errors.push_back(std::abs(p.report.replication_error));
      if (p.report.replication_error < -batch.shortfall_tolerance) ++shortfalls;
    }
    batch.reports.push_back(std::move(p.report));
  }
  batch.median_error = median(errors);
  batch.median_abs_error = median(abs_errors);
  batch.shortfall_frequency = errors.empty() ? 0.0 : static_cast<double>(shortfalls) / errors.size();
  return batch;
}

double spot_scale(const Eigen::VectorXd& spot) { return spot.cwiseAbs().maxCoeff(); }

}  // namespace

HedgeBatch hedge_batch(const PathGeneratorSpec& paths, const FixingSchedule& schedule, const PayoffSpec& payoff,
                       const SchemeConfig& config, int level, int threads, bool keep_reports) {
  SchemeConfig scheme_config = config;
  scheme_config.threads = threads;
  const auto initial = build_scheme(paths.model, schedule, payoff, Fixings{paths.initial}, scheme_config);
  return summarize(hedge_paths(initial, paths, level, threads, keep_reports), spot_scale(paths.initial));
}

std::vector<SweepRow> robustness_sweep(const std::vector<SweepPayoff>& payoffs, const std::vector<double>& kappas,
                                       const PathGeneratorSpec& base, const SchemeConfig& config, int level,
                                       int threads) {
  std::vector<SweepRow> rows;
  SchemeConfig scheme_config = config;
  scheme_config.threads = threads;
  for (const auto& item : payoffs) {
    const auto initial = build_scheme(base.model, item.schedule, item.payoff, Fixings{base.initial}, scheme_config);
    for (double kappa : kappas) {
      PathGeneratorSpec spec = base;
      spec.kappa = kappa;
      const auto batch = summarize(hedge_paths(initial, spec, level, threads, false), spot_scale(base.initial));
      rows.push_back(SweepRow{item.name, kappa, static_cast<std::size_t>(spec.count), batch.median_error,
                              batch.shortfall_frequency});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "payoff,kappa,n_paths,median_error,shortfall_freq\n";
  char buffer[128];
  for (const auto& row : rows) {
    std::string name = row.payoff;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      name = quoted + "\"";
    }
    std::snprintf(buffer, sizeof buffer, ",%.17g,%zu,%.17g,%.17g\n", row.kappa, row.n_paths, row.median_error,
                  row.shortfall_freq);
    out << name << buffer;
  }
  if (!out) throw IoError("failed writing sweep CSV");
}

const char* to_string(ProbeVerdict verdict) {
  switch (verdict) {
    case ProbeVerdict::pass:
      return "PASS";
    case ProbeVerdict::fail:
      return "FAIL";
    case ProbeVerdict::not_applicable:
      return "NOT_APPLICABLE";
  }
  return "?";
}

namespace {

// h >= 0 on every combination of fixing-grid points (x0 = spot). Falls back
// to the first 1e5 combinations when the tensor is larger.
void require_nonnegative(const SchemeContext& context, const Eigen::VectorXd& spot) {
  const auto& payoff = context.payoff();
  const auto& points = context.fixing_nodes();
  const int n = context.schedule().count();
  std::vector<int> free;
  for (int k = 1; k <= n; ++k)
    if (payoff.depends_on(k)) free.push_back(k);
  Fixings x(n + 1, spot);
  std::vector<std::size_t> digit(free.size(), 0);
  const std::size_t cap = 100000;
  for (std::size_t count = 0; count < cap; ++count) {
    for (std::size_t f = 0; f < free.size(); ++f) x[free[f]] = points[digit[f]];
    if (payoff(x) < 0.0) throw ValidationError("no-arbitrage probe requires h >= 0 on the fixing grid");
    std::size_t f = 0;
    while (f < digit.size() && ++digit[f] == points.size()) digit[f++] = 0;
    if (f == digit.size()) break;
  }
}

}  // namespace

ProbeReport no_arbitrage_probe(const PathGeneratorSpec& paths, const FixingSchedule& schedule,
                               const PayoffSpec& payoff, const SchemeConfig& config, int level, int threads,
                               double scale, double v0_threshold) {
  if (!(scale > 0.0)) throw ValidationError("probe scale must be positive");
  SchemeConfig scheme_config = config;
  scheme_config.threads = threads;
  const auto initial = build_scheme(paths.model, schedule, payoff, Fixings{paths.initial}, scheme_config);
  require_nonnegative(initial.context(), paths.initial);
  ProbeReport report;
  report.v0_threshold = v0_threshold;
  report.value_tolerance = 1e-6 * scale;
  report.initial_value = initial.value(0.0, paths.initial);
  if (report.initial_value > v0_threshold) {
    report.verdict = ProbeVerdict::not_applicable;
    report.note = "precondition v0 <= threshold fails";
    return report;
  }
  const auto summaries = hedge_paths(initial, paths, level, threads, false);
  report.paths = summaries.size();
  report.sup_value = -std::numeric_limits<double>::infinity();
  report.min_value = std::numeric_limits<double>::infinity();
  double floor = 0.0;
  for (const auto& s : summaries) {
    if (s.report.exited_grid) ++report.exited;
    report.sup_value = std::max(report.sup_value, s.sup);
    report.min_value = std::min(report.min_value, s.inf);
    floor = std::max(floor, -std::min(s.report.min_grid_value, 0.0));
  }
  report.admissibility_floor = floor;
  const bool bounded_above = report.sup_value <= report.value_tolerance;
  const bool admissible = report.min_value >= -floor - report.value_tolerance;
  report.verdict = bounded_above && admissible ? ProbeVerdict::pass : ProbeVerdict::fail;
  report.note = report.verdict == ProbeVerdict::pass ? "no arbitrage found at tolerance"
                                                     : (bounded_above ? "admissibility floor violated"
                                                                      : "sampled value exceeds tolerance");
  return report;
}

}  // namespace pathhedge
