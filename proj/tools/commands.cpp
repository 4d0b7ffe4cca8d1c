#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "pathhedge/functional.hpp"
#include "pathhedge/hedge.hpp"
#include "pathhedge/lattice.hpp"
#include "pathhedge/parallel.hpp"
#include "pathhedge/paths.hpp"
#include "pathhedge/scheme.hpp"

namespace pathhedge::cli {

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out + "\n";
}

std::vector<std::string> pair_names(int d) {
  std::vector<std::string> out;
  for (int i = 1; i <= d; ++i)
    for (int j = i; j <= d; ++j) out.push_back("c" + std::to_string(i) + std::to_string(j));
  return out;
}

std::vector<int> levels_from(const Config& config, const std::string& key, const PathGeneratorSpec& paths,
                             const Overrides& overrides, std::vector<double> fallback) {
  if (overrides.level) return {read_level(config, key, paths, overrides)};
  std::vector<int> out;
  for (double v : config.numbers(key, fallback)) {
    const int n = static_cast<int>(v);
    if (n != v || n < 1 || n > paths.level)
      throw ValidationError(key + " entries must be integers in [1, " + std::to_string(paths.level) + "]");
    out.push_back(n);
  }
  return out;
}

std::string short_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

TerminalFn terminal_from(const PayoffSpec& payoff) {
  return [payoff](const Eigen::VectorXd& x) { return payoff(Fixings{x, x}); };
}

}  // namespace

void command_qv(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  const auto spec = read_paths(config, model, overrides);
  report.seed("paths", spec.seed);
  const int level = read_level(config, "qv.level", spec, overrides);
  const auto paths = generate_paths(spec, overrides.threads);
  const int d = model.dimension();
  const auto names = pair_names(d);

  struct PathQv {
    CovariationCurve curve;
    CovariationCheck check;
  };
  std::vector<std::optional<PathQv>> slots(paths.size());
  parallel_for(paths.size(), overrides.threads, [&](std::size_t p) {
    slots[p].emplace(PathQv{covariation(paths[p], level), realized_covariation_check(paths[p], model, spec.kappa)});
  });

  auto totals = report.open("qv_levels.csv");
  std::vector<std::string> header{"path", "level"};
  header.insert(header.end(), names.begin(), names.end());
  totals << join(header);
  double worst_deviation = 0.0, worst_ratio = 0.0;
  long monotone_violations = 0;
  double asymmetry = 0.0;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& q = slots[p]->curve;
    for (int n = 1; n <= level; ++n) {
      std::vector<std::string> row{std::to_string(p), std::to_string(n)};
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) row.push_back(csv_number(q.totals_by_level(i, j)(n - 1)));
      totals << join(row);
    }
    for (int i = 0; i < d; ++i) {
      const auto c = q.curve(i, i);
      for (Eigen::Index k = 1; k < c.size(); ++k)
        if (c(k) < c(k - 1)) ++monotone_violations;
      for (int j = 0; j < d; ++j) asymmetry = std::max(asymmetry, (q.curve(i, j) - q.curve(j, i)).cwiseAbs().maxCoeff());
    }
    const auto& check = slots[p]->check;
    worst_deviation = std::max(worst_deviation, check.max_relative_deviation);
    worst_ratio = std::max(worst_ratio, check.max_relative_deviation / check.tolerance);
  }
  report.close(totals, "qv_levels.csv");

  const auto curve_paths = std::min<std::size_t>(paths.size(), config.integer("qv.curve_paths", 1));
  auto curves = report.open("qv_curve.csv");
  header = {"path", "t"};
  header.insert(header.end(), names.begin(), names.end());
  curves << join(header);
  const auto& hierarchy = paths.front().hierarchy();
  for (std::size_t p = 0; p < curve_paths; ++p) {
    const auto& q = slots[p]->curve;
    for (std::int64_t k = 0; k < hierarchy.nodes(level); ++k) {
      std::vector<std::string> row{std::to_string(p), csv_number(hierarchy.time(level, k))};
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) row.push_back(csv_number(q.curve(i, j)(k)));
      curves << join(row);
    }
  }
  report.close(curves, "qv_curve.csv");

  report.result("max_relative_deviation", worst_deviation);
  report.check("covariation_deviation_over_tolerance", worst_ratio, "<=", 1.0);
  report.check("monotonicity_violations", static_cast<double>(monotone_violations), "==", 0.0);
  report.check("symmetry_defect", asymmetry, "==", 0.0);
}

void command_integrate(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  const auto spec = read_paths(config, model, overrides);
  report.seed("paths", spec.seed);
  const auto levels = levels_from(config, "integrate.levels", spec, overrides, {10, 12, 14});
  const auto strikes = config.numbers("integrate.strikes", {0.0});
  const double tolerance = config.number("integrate.tolerance", 1e-10);
  const auto paths = generate_paths(spec, overrides.threads);
  const int d = model.dimension();

  struct Row {
    int level, i, j;
    double strike;
    ItoIdentityCheck check;
  };
  std::vector<std::vector<Row>> rows(paths.size());
  parallel_for(paths.size(), overrides.threads, [&](std::size_t p) {
    for (int n : levels)
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
          for (double k : strikes) rows[p].push_back(Row{n, i, j, k, ito_identity_check(paths[p], n, i, j, k)});
  });

  auto out = report.open("integrate.csv");
  out << "path,level,i,j,K,max_abs_error,max_relative_error\n";
  double worst = 0.0;
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (const auto& r : rows[p]) {
      out << join({std::to_string(p), std::to_string(r.level), std::to_string(r.i + 1), std::to_string(r.j + 1),
                   csv_number(r.strike), csv_number(r.check.max_abs_error), csv_number(r.check.max_relative_error)});
      worst = std::max(worst, r.check.max_relative_error);
    }
  report.close(out, "integrate.csv");
  report.check("ito_identity_max_relative_error", worst, "<=", tolerance);
}

void command_solve(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  const int d = model.dimension();
  const Eigen::VectorXd spot = read_spot(config, d);
  const double t_start = config.number("solve.t_start", 0.0);
  const double t_end = config.number("solve.t_end", config.number("paths.horizon", 1.0));
  const auto terminal_spec = read_payoff(config.text("solve.terminal"), config, d, 1);
  const auto terminal = terminal_from(terminal_spec);
  const auto grid = read_grid(config, model, spot, t_end - t_start);
  const auto solution = solve_tvp(model, terminal, t_start, t_end, grid);
  (void)overrides;

  auto out = report.open("solution.csv");
  solution.write_csv(out, static_cast<int>(config.integer("solve.stride", 1)));
  report.close(out, "solution.csv");

  const double v0 = solution.value(t_start, spot);
  report.result("value", v0);
  if (solution.covers_interior(spot)) {
    const Eigen::VectorXd delta = gradient(solution, t_start, spot);
    report.result("delta", std::vector<double>(delta.data(), delta.data() + delta.size()));
  }
  report.result("pde_residual", pde_residual(solution, solver_generator(model)));
  report.result("min_value", solution.min_value());

  const std::string oracle = config.text("solve.oracle", "none");
  if (oracle == "quadratic") {
    // v = |x|^2 + tr(a)(T - t) for terminal |x|^2 and constant whole-space a.
    if (model.flavor() != Flavor::whole_space || !model.is_constant())
      throw ValidationError("quadratic oracle needs a constant whole-space model");
    const double trace = model.covariance(0.0, Eigen::VectorXd::Zero(d)).trace();
    double worst = 0.0;
    for (int m = 0; m <= solution.time_steps(); ++m)
      for (Eigen::Index k = 0; k < solution.node_count(); ++k) {
        const Eigen::VectorXd x = solution.node_state(k);
        const double exact = x.squaredNorm() + trace * (t_end - solution.time(m));
        worst = std::max(worst, std::abs(solution.slice(m)(k) - exact));
      }
    report.check("max_error", worst, "<=", config.number("solve.max_error", 1e-3));
  } else if (oracle == "bs_call") {
    if (model.flavor() != Flavor::positive || !model.is_constant() || d != 1)
      throw ValidationError("bs_call oracle needs a constant positive 1D model");
    const double strike = config.number("solve.strike");
    const double var = model.covariance(0.0, spot)(0, 0) * (t_end - t_start);
    const double d1 = (std::log(spot(0) / strike) + 0.5 * var) / std::sqrt(var);
    const double price = spot(0) * normal_cdf(d1) - strike * normal_cdf(d1 - std::sqrt(var));
    report.result("reference_value", price);
    report.result("reference_delta", normal_cdf(d1));
    report.check("relative_price_error", std::abs(v0 - price) / price, "<=",
                 config.number("solve.price_tolerance", 2e-3));
    report.check("delta_error", std::abs(gradient(solution, t_start, spot)(0) - normal_cdf(d1)), "<=",
                 config.number("solve.delta_tolerance", 5e-3));
  } else if (oracle != "none") {
    throw ParseError("solve.oracle must be none, quadratic or bs_call");
  }
  if (config.flag("solve.maximum_principle", false)) {
    const auto mp = maximum_principle_check(model, terminal, t_start, t_end, grid);
    report.check("maximum_principle_min_value", mp.min_value, ">=", -mp.tolerance);
  }
}

void command_price(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  const auto spec = read_paths(config, model, overrides);
  const auto schedule = read_schedule(config, spec);
  const auto payoff = read_payoff(config.text("scheme.payoff"), config, model.dimension(), schedule.count());
  const auto scheme_config = read_scheme_config(config, model, spec.initial, schedule.horizon(), overrides.threads);
  const auto solution = build_scheme(model, schedule, payoff, Fixings{spec.initial}, scheme_config);
  const double v0 = solution.value(0.0, spec.initial);
  const Eigen::VectorXd delta = scheme_delta(solution, 0.0, spec.initial);

  auto out = report.open("price.csv");
  std::vector<std::string> header;
  for (int i = 1; i <= model.dimension(); ++i) header.push_back("S" + std::to_string(i));
  header.push_back("value");
  for (int i = 1; i <= model.dimension(); ++i) header.push_back("delta_" + std::to_string(i));
  out << join(header);
  std::vector<std::string> row;
  for (int i = 0; i < model.dimension(); ++i) row.push_back(csv_number(spec.initial(i)));
  row.push_back(csv_number(v0));
  for (int i = 0; i < model.dimension(); ++i) row.push_back(csv_number(delta(i)));
  out << join(row);
  report.close(out, "price.csv");

  if (!solution.terminal() && config.flag("price.write_grid", false)) {
    auto grid = report.open("price_grid.csv");
    solution.grid().write_csv(grid, static_cast<int>(config.integer("price.stride", 1)));
    report.close(grid, "price_grid.csv");
  }
  report.result("value", v0);
  report.result("delta", std::vector<double>(delta.data(), delta.data() + delta.size()));
  report.result("nested_solves", solution.nested_solves());
  if (config.has("price.reference")) {
    const double ref = config.number("price.reference");
    report.check("relative_price_error", std::abs(v0 - ref) / std::abs(ref), "<=",
                 config.number("price.tolerance", 2e-3));
  }
  if (config.has("price.reference_delta")) {
    report.check("delta_error", std::abs(delta(0) - config.number("price.reference_delta")), "<=",
                 config.number("price.delta_tolerance", 5e-3));
  }
}

void command_hedge(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  const auto spec = read_paths(config, model, overrides);
  report.seed("paths", spec.seed);
  const auto schedule = read_schedule(config, spec);
  const auto payoff = read_payoff(config.text("scheme.payoff"), config, model.dimension(), schedule.count());
  const auto scheme_config = read_scheme_config(config, model, spec.initial, schedule.horizon(), overrides.threads);
  const auto levels = levels_from(config, "hedge.levels", spec, overrides, {static_cast<double>(spec.level)});
  const double spot_scale = spec.initial.cwiseAbs().maxCoeff();

  auto summary = report.open("hedge_levels.csv");
  summary << "level,n_paths,median_abs_error,median_error,shortfall_freq,exited\n";
  auto per_path = report.open("hedge_paths.csv");
  per_path << "level,path,initial_capital,payoff,terminal_value,replication_error,min_grid_value,exited\n";
  std::vector<double> medians;
  for (int level : levels) {
    const auto batch = hedge_batch(spec, schedule, payoff, scheme_config, level, overrides.threads);
    summary << join({std::to_string(level), std::to_string(spec.count), csv_number(batch.median_abs_error),
                     csv_number(batch.median_error), csv_number(batch.shortfall_frequency),
                     std::to_string(batch.exited)});
    for (std::size_t p = 0; p < batch.reports.size(); ++p) {
      const auto& r = batch.reports[p];
      per_path << join({std::to_string(level), std::to_string(p), csv_number(r.initial_capital),
                        csv_number(r.payoff), csv_number(r.terminal_value), csv_number(r.replication_error),
                        csv_number(r.min_grid_value), r.exited_grid ? "1" : "0"});
    }
    medians.push_back(batch.median_abs_error);
    report.check("exited_paths_level_" + std::to_string(level), static_cast<double>(batch.exited), "==", 0.0);
  }
  report.close(summary, "hedge_levels.csv");
  report.close(per_path, "hedge_paths.csv");

  const long traces = std::min<long>(config.integer("hedge.trace_paths", 1), static_cast<long>(spec.count));
  for (long p = 0; p < traces; ++p) {
    const auto path = generate_path(spec, static_cast<std::uint64_t>(p));
    const auto r = run_hedge(path, schedule, payoff, model, scheme_config, levels.back());
    const std::string name = "hedge_path_" + std::to_string(p) + ".csv";
    auto out = report.open(name);
    write_hedge_csv(out, r);
    report.close(out, name);
  }

  if (config.has("hedge.max_median_abs_error")) {
    report.check("median_abs_error_over_spot", medians.back() / spot_scale, "<=",
                 config.number("hedge.max_median_abs_error"));
  }
  if (config.flag("hedge.require_decreasing", false)) {
    for (std::size_t i = 1; i < medians.size(); ++i)
      report.check("median_decrease_" + std::to_string(levels[i - 1]) + "_" + std::to_string(levels[i]),
                   medians[i], "<", medians[i - 1]);
  }
}

void command_robust(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  const auto spec = read_paths(config, model, overrides);
  report.seed("paths", spec.seed);
  const auto schedule = read_schedule(config, spec);
  const auto scheme_config = read_scheme_config(config, model, spec.initial, schedule.horizon(), overrides.threads);
  const int level = read_level(config, "robust.level", spec, overrides);
  auto kappas = config.numbers("robust.kappas", {0.64, 1.0, 1.44});
  std::sort(kappas.begin(), kappas.end());

  std::vector<SweepPayoff> payoffs;
  auto listed = config.section("robust_payoffs");
  if (listed.empty()) listed.emplace_back("payoff", config.text("scheme.payoff"));
  for (const auto& [name, text] : listed)
    payoffs.push_back(SweepPayoff{name, read_payoff(text, config, model.dimension(), schedule.count()), schedule});

  const auto rows = robustness_sweep(payoffs, kappas, spec, scheme_config, level, overrides.threads);
  auto out = report.open("robust.csv");
  write_sweep_csv(out, rows);
  report.close(out, "robust.csv");

  // Dominated covariation (kappa < 1) must superhedge; the shortfall
  // frequency of the largest kappa must exceed that of the smallest.
  const double limit = config.number("robust.max_dominated_shortfall", 0.01);
  std::map<std::string, std::vector<const SweepRow*>> by_payoff;
  for (const auto& row : rows) by_payoff[row.payoff].push_back(&row);
  for (const auto& [name, list] : by_payoff) {
    for (const auto* row : list)
      if (row->kappa < 1.0)
        report.check(name + "_shortfall_kappa_" + short_number(row->kappa), row->shortfall_freq, "<=", limit);
    if (list.size() > 1 && list.back()->kappa > 1.0 && list.front()->kappa < 1.0)
      report.check(name + "_shortfall_grows_with_kappa", list.back()->shortfall_freq, ">",
                   list.front()->shortfall_freq);
  }
}

void command_noarb(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  auto spec = read_paths(config, model, overrides);
  if (config.has("noarb.paths")) spec.count = config.unsigned_integer("noarb.paths", spec.count);
  report.seed("paths", spec.seed);
  const auto schedule = read_schedule(config, spec);
  const auto scheme_config = read_scheme_config(config, model, spec.initial, schedule.horizon(), overrides.threads);
  const int level = read_level(config, "noarb.level", spec, overrides);
  const double scale = config.number("noarb.scale", spec.initial.cwiseAbs().maxCoeff());
  const double v0_threshold = config.number("noarb.v0_threshold", 1e-8);
  const double zero_tolerance = config.number("noarb.zero_tolerance", 1e-10);

  std::vector<std::pair<std::string, std::string>> probes{{"zero", "0"}};
  for (const auto& item : config.section("noarb_probes")) probes.push_back(item);

  auto out = report.open("noarb.csv");
  out << "probe,verdict,initial_value,sup_value,min_value,admissibility_floor,value_tolerance,paths,exited\n";
  for (const auto& [name, text] : probes) {
    const auto payoff = read_payoff(text, config, model.dimension(), schedule.count());
    const auto r = no_arbitrage_probe(spec, schedule, payoff, scheme_config, level, overrides.threads, scale,
                                      v0_threshold);
    out << join({name, to_string(r.verdict), csv_number(r.initial_value), csv_number(r.sup_value),
                 csv_number(r.min_value), csv_number(r.admissibility_floor), csv_number(r.value_tolerance),
                 std::to_string(r.paths), std::to_string(r.exited)});
    report.result(name, {{"verdict", to_string(r.verdict)}, {"note", r.note}});
    report.check(name + "_not_failed", r.verdict == ProbeVerdict::fail ? 0.0 : 1.0, "==", 1.0);
    if (name == "zero")
      report.check("zero_payoff_max_abs_value", std::max(std::abs(r.sup_value), std::abs(r.min_value)), "<=",
                   zero_tolerance);
  }
  report.close(out, "noarb.csv");
}

void command_ftvp(const Config& config, const Overrides& overrides, Report& report) {
  const auto model = read_model(config);
  if (model.dimension() != 1 || !model.is_constant() || model.flavor() != Flavor::positive)
    throw ValidationError("ftvp needs a constant positive 1D model");
  const double sigma = std::sqrt(model.covariance(0.0, Eigen::VectorXd::Ones(1))(0, 0));
  auto spec = read_paths(config, model, overrides);
  report.seed("paths", spec.seed);
  const std::string kind = config.text("ftvp.functional", "asian_call");
  const int nodes = static_cast<int>(config.integer("ftvp.nodes", 801));
  const int steps = static_cast<int>(config.integer("ftvp.time_steps", 400));
  BuiltFunctional built;
  if (kind == "asian_call") {
    built = asian_call_functional(sigma, config.number("ftvp.strike"), spec.horizon, nodes, steps,
                                  config.number("ftvp.z_max", 4.0), config.number("ftvp.stretch", 0.05));
  } else if (kind == "lookback_put") {
    built = lookback_put_functional(sigma, spec.horizon, nodes, steps, config.number("ftvp.w_max", 2.0));
  } else {
    throw ParseError("ftvp.functional must be asian_call or lookback_put");
  }
  const auto& f = built.functional;
  const double scale = config.number("ftvp.scale", spec.initial(0));
  const double factor = config.number("ftvp.tolerance_factor", 20.0);

  PathGeneratorSpec sample_spec = spec;
  sample_spec.count = config.unsigned_integer("ftvp.sample_paths", 25);
  const auto paths = generate_paths(sample_spec, overrides.threads);
  FtvpOptions options;
  for (double t : config.numbers("ftvp.sample_times", {0.1875, 0.375, 0.5625, 0.75})) options.sample_times.push_back(t * spec.horizon);
  options.tolerance = factor * (built.grid_step * built.grid_step + built.time_step * built.time_step) * scale;
  const auto residual = ftvp_residual(f, model, paths, options);
  auto out = report.open("ftvp.csv");
  write_ftvp_csv(out, residual);
  report.close(out, "ftvp.csv");
  const double f0 = f.value(0.0, spec.initial(0), f.initial_state(spec.initial(0)));
  report.result("initial_value", f0);
  report.result("grid_step", built.grid_step);
  report.result("time_step", built.time_step);
  report.check("sup_residual", residual.sup_residual, "<=", options.tolerance);
  report.check("terminal_mismatch", residual.terminal_mismatch, "<=", 0.0);

  PathGeneratorSpec hedge_spec = spec;
  hedge_spec.count = config.unsigned_integer("ftvp.hedge_paths", 20);
  const auto levels = levels_from(config, "ftvp.levels", hedge_spec, overrides, {10, 12, 14});
  const auto hedge_paths = generate_paths(hedge_spec, overrides.threads);
  std::vector<std::vector<double>> discrepancies(levels.size(), std::vector<double>(hedge_paths.size()));
  parallel_for(hedge_paths.size(), overrides.threads, [&](std::size_t p) {
    for (std::size_t l = 0; l < levels.size(); ++l)
      discrepancies[l][p] = functional_hedge_check(f, hedge_paths[p], levels[l]).max_discrepancy;
  });
  auto hedge_out = report.open("ftvp_hedge.csv");
  hedge_out << "level,n_paths,median_discrepancy,max_discrepancy\n";
  std::vector<double> medians;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    medians.push_back(median(discrepancies[l]));
    hedge_out << join({std::to_string(levels[l]), std::to_string(hedge_paths.size()), csv_number(medians.back()),
                       csv_number(*std::max_element(discrepancies[l].begin(), discrepancies[l].end()))});
  }
  report.close(hedge_out, "ftvp_hedge.csv");
  report.check("self_financing_median_over_f0", medians.back() / f0, "<=",
               config.number("ftvp.max_discrepancy", 0.01));
  for (std::size_t i = 1; i < medians.size(); ++i)
    report.check("discrepancy_decrease_" + std::to_string(levels[i - 1]) + "_" + std::to_string(levels[i]),
                 medians[i], "<", medians[i - 1]);
}

}  // namespace pathhedge::cli
