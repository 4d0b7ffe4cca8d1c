// Acceptance run: one PASS/FAIL line per criterion with its runtime.
// Usage: acceptance [criterion ...]   (default: all of 1..10)

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pathhedge/functional.hpp"
#include "pathhedge/hedge.hpp"
#include "pathhedge/lattice.hpp"
#include "pathhedge/pathcalc.hpp"
#include "pathhedge/paths.hpp"
#include "pathhedge/scheme.hpp"

using namespace pathhedge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.4g", v);
  return buffer;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Eigen::VectorXd spot(double s) { return Eigen::VectorXd::Constant(1, s); }

LocalVolModel bs(double var = 0.04) {
  return LocalVolModel::constant(Flavor::positive, Eigen::MatrixXd::Constant(1, 1, var));
}

std::map<std::string, double> read_fixture(const std::string& name) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + name);
  if (!in) throw IoError("missing fixture " + name);
  std::map<std::string, double> out;
  std::string key;
  double value;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    if (row >> key >> value) out[key] = value;
  }
  return out;
}

// 1. Discrete Ito identity for every basic strategy.
Outcome ito_identity() {
  Eigen::Matrix2d cov;
  cov << 0.04, 0.03, 0.03, 0.09;
  const auto model = LocalVolModel::constant(Flavor::positive, cov);
  const auto paths = generate_paths(PathGeneratorSpec{model, 14, 1.0, 42, 100, 1.0, Eigen::Vector2d(100, 50)});
  double worst = 0.0;
  for (const auto& path : paths)
    for (int n : {10, 12, 14})
      for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j)
          for (double k : {0.0, 100.0, 150.0}) worst = std::max(worst, ito_identity_check(path, n, i, j, k).max_relative_error);
  return {worst <= 1e-10, "max relative error " + fmt(worst) + " <= 1e-10 (100 paths, levels 10 12 14, K 0 100 150)"};
}

// 2. Quadratic oracle and second-order convergence of the lattice.
Outcome lattice_accuracy() {
  const auto model = LocalVolModel::constant(Flavor::whole_space, Eigen::MatrixXd::Constant(1, 1, 2.0));
  auto grid = [](int nodes, int steps) {
    GridSpec g;
    g.axes = {Axis{-10.0, 10.0, nodes}};
    g.time_steps = steps;
    return g;
  };
  const auto quad = solve_tvp(model, [](const Eigen::VectorXd& x) { return x(0) * x(0); }, 0.0, 0.5, grid(801, 400));
  double worst = 0.0;
  for (int m = 0; m <= quad.time_steps(); ++m)
    for (Eigen::Index k = 0; k < quad.node_count(); ++k) {
      const double x = quad.node_state(k)(0);
      worst = std::max(worst, std::abs(quad.slice(m)(k) - (x * x + 2.0 * (0.5 - quad.time(m)))));
    }
  // exp(-x^2) evolves to (1 + 4 tau)^(-1/2) exp(-x^2 / (1 + 4 tau)).
  auto gaussian_error = [&](int nodes, int steps) {
    const auto sol = solve_tvp(model, [](const Eigen::VectorXd& x) { return std::exp(-x(0) * x(0)); }, 0.0, 0.5,
                               grid(nodes, steps));
    double e = 0.0;
    for (Eigen::Index k = 0; k < sol.node_count(); ++k) {
      const double x = sol.node_state(k)(0);
      e = std::max(e, std::abs(sol.slice(0)(k) - std::exp(-x * x / 3.0) / std::sqrt(3.0)));
    }
    return e;
  };
  const double order = std::log2(gaussian_error(401, 200) / gaussian_error(801, 400));
  return {worst <= 1e-3 && order >= 1.8 && order <= 2.2,
          "quadratic max error " + fmt(worst) + " <= 1e-3, Richardson order " + fmt(order) + " in [1.8, 2.2]"};
}

// 3. Black-Scholes call through the scheme.
Outcome black_scholes() {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 14));
  const auto sol = build_scheme(model, schedule, PayoffSpec::parse("(call x1 100)", 1, 1), Fixings{spot(100)},
                                default_scheme_config(model, spot(100), 1.0, 801, 400));
  const double ref = 100 * (normal_cdf(0.1) - normal_cdf(-0.1));
  const double price_error = std::abs(sol.value(0.0, spot(100)) - ref) / ref;
  const double delta_error = std::abs(scheme_delta(sol, 0.0, spot(100))(0) - normal_cdf(0.1));
  return {price_error <= 2e-3 && delta_error <= 5e-3,
          "price relative error " + fmt(price_error) + " <= 0.002, |Delta - N(d1)| " + fmt(delta_error) + " <= 0.005"};
}

// 4. Two-fixing scheme: forward and Asian against Monte Carlo.
Outcome two_fixings() {
  const auto fixture = read_fixture("asian_n2_mc.txt");
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.5, 1.0}, PartitionHierarchy(1.0, 14));
  const auto config = default_scheme_config(model, spot(100), 1.0);
  const auto forward = build_scheme(model, schedule, PayoffSpec::parse("x2", 1, 2), Fixings{spot(100)}, config);
  const double forward_error = std::abs(forward.value(0.0, spot(100)) - 100.0) / 100.0;
  const auto asian =
      build_scheme(model, schedule, PayoffSpec::parse("(call (avg x1 x2) 100)", 1, 2), Fixings{spot(100)}, config);
  const double price = fixture.at("price");
  const double asian_error = std::abs(asian.value(0.0, spot(100)) - price);
  const double limit = 3 * fixture.at("standard_error") + 3e-3 * price;
  return {forward_error <= 2e-3 && asian_error <= limit, "h = x2 relative error " + fmt(forward_error) +
                                                             " <= 0.002, Asian |v0 - MC| " + fmt(asian_error) +
                                                             " <= 3 SE + 0.3% = " + fmt(limit)};
}

// 5. Delta hedge of the call at levels 10, 12, 14.
Outcome hedge_convergence() {
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 14));
  const PathGeneratorSpec paths{bs(), 14, 1.0, 42, 200, 1.0, spot(100)};
  const auto config = default_scheme_config(bs(), spot(100), 1.0);
  std::vector<double> medians;
  std::size_t exited = 0;
  for (int level : {10, 12, 14}) {
    const auto batch = hedge_batch(paths, schedule, PayoffSpec::parse("(call x1 100)", 1, 1), config, level, 1);
    medians.push_back(batch.median_abs_error);
    exited += batch.exited;
  }
  const bool decreasing = medians[0] > medians[1] && medians[1] > medians[2];
  return {exited == 0 && medians[2] <= 1.0 && decreasing,
          "median |err| " + fmt(medians[0]) + " > " + fmt(medians[1]) + " > " + fmt(medians[2]) +
              ", level 14 <= 1 (1% of spot), exited " + std::to_string(exited)};
}

// 6. Robustness to misspecified covariation.
Outcome robustness() {
  const PartitionHierarchy h(1.0, 14);
  const std::vector<SweepPayoff> payoffs{{"call", PayoffSpec::parse("(call x1 100)", 1, 1), FixingSchedule({0.0, 1.0}, h)}};
  const auto rows = robustness_sweep(payoffs, {0.64, 1.44}, PathGeneratorSpec{bs(), 14, 1.0, 42, 200, 1.0, spot(100)},
                                     default_scheme_config(bs(), spot(100), 1.0), 14, 1);
  return {rows[0].shortfall_freq <= 0.01 && rows[1].shortfall_freq > rows[0].shortfall_freq,
          "shortfall frequency kappa 0.64: " + fmt(rows[0].shortfall_freq) + " <= 0.01, kappa 1.44: " +
              fmt(rows[1].shortfall_freq) + " > kappa 0.64"};
}

// 7. Discrete maximum principle and strict positivity.
Outcome maximum_principle() {
  const auto model = bs();
  const auto grid = centered_grid(model, spot(100), 1.0, 401, 200);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double worst_ratio = 0.0;
  bool all = true;
  for (int trial = 0; trial < 50; ++trial) {
    struct Piece {
      int kind;
      double centre, width, height;
    };
    std::vector<Piece> pieces;
    const int count = 1 + static_cast<int>(3 * uniform(rng));
    for (int p = 0; p < count; ++p)
      pieces.push_back(Piece{static_cast<int>(4 * uniform(rng)), 40 + 160 * uniform(rng), 0.5 + 30 * uniform(rng),
                             0.1 + 10 * uniform(rng)});
    const TerminalFn f = [pieces](const Eigen::VectorXd& x) {
      double v = 0.0;
      for (const auto& p : pieces) {
        const double s = x(0);
        switch (p.kind) {
          case 0: v += p.height * std::max(0.0, 1.0 - std::abs(s - p.centre) / p.width); break;
          case 1: v += p.height * std::max(0.0, s - p.centre) / p.width; break;
          case 2: v += p.height * std::max(0.0, p.centre - s) / p.width; break;
          default: v += p.height * (std::abs(s - p.centre) < p.width ? 1.0 : 0.0); break;
        }
      }
      return v;
    };
    const auto r = maximum_principle_check(model, f, 0.0, 1.0, grid);
    all = all && r.passed;
    if (r.tolerance > 0.0) worst_ratio = std::max(worst_ratio, -r.min_value / (r.tolerance / 1e-8));
  }
  const auto bump = maximum_principle_check(
      model, [](const Eigen::VectorXd& x) { return std::pow(std::max(0.0, 1.0 - std::pow((x(0) - 100.0) / 5.0, 2)), 2); },
      0.0, 1.0, grid);
  const bool positive = bump.positivity_checked && bump.positivity_held;
  return {all && positive, "50 random terminals: worst -min v / ||f|| " + fmt(worst_ratio) +
                               " <= 1e-8; bump terminal min interior v(0) " + fmt(bump.min_interior_start) + " > 0"};
}

// 8. No-arbitrage probe.
Outcome no_arbitrage() {
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 14));
  const PathGeneratorSpec paths{bs(), 14, 1.0, 7, 500, 1.0, spot(100)};
  const auto config = default_scheme_config(bs(), spot(100), 1.0);
  const auto tent = no_arbitrage_probe(paths, schedule,
                                       PayoffSpec::parse("(max 0 (- 5 (max (- x1 325) (- 325 x1))))", 1, 1), config,
                                       14, 1, 100.0);
  const auto zero = no_arbitrage_probe(paths, schedule, PayoffSpec::parse("0", 1, 1), config, 14, 1, 100.0);
  const double zero_sup = std::max(std::abs(zero.sup_value), std::abs(zero.min_value));
  const bool ok = tent.verdict == ProbeVerdict::pass && tent.sup_value <= 1e-6 * 100.0 && zero_sup <= 1e-10 &&
                  zero.verdict == ProbeVerdict::pass;
  return {ok, "tent v0 " + fmt(tent.initial_value) + " <= 1e-8, sup V " + fmt(tent.sup_value) +
                  " <= 1e-4 over 500 paths (" + tent.note + "); h = 0 sup |V| " + fmt(zero_sup) + " <= 1e-10"};
}

// 9. Path-dependent PDE for the continuous Asian call.
Outcome functional_tvp() {
  const auto model = bs();
  const auto built = asian_call_functional(0.2, 100.0, 1.0, 801, 400);
  const auto& f = built.functional;
  const double scale = 100.0;
  const PathGeneratorSpec spec{model, 14, 1.0, 11, 25, 1.0, spot(100)};
  const auto paths = generate_paths(spec);
  FtvpOptions options;
  options.sample_times = {0.1875, 0.375, 0.5625, 0.75};
  options.tolerance = 20 * (built.grid_step * built.grid_step + built.time_step * built.time_step) * scale;
  const auto residual = ftvp_residual(f, model, paths, options);
  FtvpOptions full = options;
  full.sample_times.clear();
  for (int k = 1; k < 32; ++k) full.sample_times.push_back(k / 32.0);
  const auto full_residual = ftvp_residual(f, model, paths, full);

  PathGeneratorSpec hedge_spec = spec;
  hedge_spec.count = 20;
  const auto hedge_paths = generate_paths(hedge_spec);
  const double f0 = f.value(0.0, 100.0, f.initial_state(100.0));
  std::vector<double> medians;
  for (int level : {10, 12, 14}) {
    std::vector<double> d;
    for (const auto& path : hedge_paths) d.push_back(functional_hedge_check(f, path, level).max_discrepancy);
    medians.push_back(median(d));
  }
  const bool decreasing = medians[0] > medians[1] && medians[1] > medians[2];
  const bool ok = residual.sup_residual <= options.tolerance && residual.terminal_mismatch == 0.0 &&
                  medians[2] / f0 <= 0.01 && decreasing;
  return {ok, "sup|DF + AF| on t <= 3T/4 " + fmt(residual.sup_residual) + " <= " + fmt(options.tolerance) +
                  " (info: t <= 31T/32 gives " + fmt(full_residual.sup_residual) + "); self-financing median/F0 " +
                  fmt(medians[2] / f0) + " <= 0.01, medians " + fmt(medians[0]) + " > " + fmt(medians[1]) + " > " +
                  fmt(medians[2])};
}

int run_cli(const std::string& args) {
  const std::string command = std::string(CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// 10. Byte-identical CSV outputs at 1, 2 and 8 threads.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("pathhedge_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  for (const std::string command : {"integrate", "hedge", "robust", "price"}) {
    const std::map<std::string, std::string> config{{"integrate", "integrate_2d.ini"},
                                                    {"hedge", "hedge_bs_call.ini"},
                                                    {"robust", "robust_call.ini"},
                                                    {"price", "price_asian2.ini"}};
    std::map<int, fs::path> dirs;
    for (int threads : {1, 2, 8}) {
      dirs[threads] = root / (command + "_" + std::to_string(threads));
      const int code = run_cli(command + " --config " + std::string(CONFIG_DIR) + "/" + config.at(command) +
                               " --threads " + std::to_string(threads) + " --out " + dirs[threads].string());
      if (code != 0 && code != 1) mismatched.push_back(command + " exit " + std::to_string(code));
    }
    for (const auto& entry : fs::directory_iterator(dirs[1])) {
      if (entry.path().extension() != ".csv") continue;
      const std::string reference = read_file(entry.path());
      for (int threads : {2, 8}) {
        ++compared;
        if (read_file(dirs[threads] / entry.path().filename()) != reference)
          mismatched.push_back(command + "/" + entry.path().filename().string() + " @" + std::to_string(threads));
      }
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(compared) + " CSV comparisons against 1 thread";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty() && compared > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  double max_seconds;  // <= 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "discrete Ito identity", 10.0, ito_identity},
      {2, "lattice oracle and order", 5.0, lattice_accuracy},
      {3, "Black-Scholes price and Delta", 5.0, black_scholes},
      {4, "two-fixing scheme", 120.0, two_fixings},
      {5, "Delta hedge convergence", 0.0, hedge_convergence},
      {6, "covariation robustness", 0.0, robustness},
      {7, "maximum principle", 30.0, maximum_principle},
      {8, "no-arbitrage probe", 0.0, no_arbitrage},
      {9, "path-dependent PDE", 0.0, functional_tvp},
      {10, "thread determinism", 0.0, determinism},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.max_seconds <= 0.0 || seconds <= c.max_seconds;
    const bool passed = outcome.passed && in_time;
    if (!passed) ++failures;
    char timing[64];
    if (c.max_seconds > 0.0)
      std::snprintf(timing, sizeof timing, "%.2f s (limit %.0f s)", seconds, c.max_seconds);
    else
      std::snprintf(timing, sizeof timing, "%.2f s", seconds);
    std::cout << (passed ? "PASS" : "FAIL") << " criterion " << c.id << " [" << c.name << "] " << timing << ": "
              << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
