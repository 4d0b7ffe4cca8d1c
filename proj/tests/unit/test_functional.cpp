#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pathhedge/functional.hpp"
#include "pathhedge/paths.hpp"

using namespace pathhedge;

namespace {

LocalVolModel bs(double var = 0.04) {
  return LocalVolModel::constant(Flavor::positive, Eigen::MatrixXd::Constant(1, 1, var));
}

std::map<std::string, double> read_fixture(const std::string& name) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + name);
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

std::vector<SampledPath> bs_paths(int level, std::uint64_t count, std::uint64_t seed = 5) {
  PathGeneratorSpec spec{bs(), level, 1.0, seed, count, 1.0, Eigen::VectorXd::Constant(1, 100.0)};
  return generate_paths(spec);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST(Spline, ReproducesLinearAndInterpolatesSmoothFunctions) {
  const Axis axis{0.0, 2.0, 41};
  Eigen::VectorXd linear(41), smooth(41);
  for (int i = 0; i < 41; ++i) {
    linear(i) = 3.0 * axis.coordinate(i) - 1.0;
    smooth(i) = std::sin(axis.coordinate(i));
  }
  EXPECT_NEAR(NaturalSpline(axis, linear)(0.737), 3.0 * 0.737 - 1.0, 1e-13);
  EXPECT_NEAR(NaturalSpline(axis, smooth)(1.013), std::sin(1.013), 1e-6);
}

TEST(Functional, SpotIsSelfFinancingToRounding) {
  const auto f = spot_functional(1.0);
  for (const auto& path : bs_paths(10, 3)) {
    const auto check = functional_hedge_check(f, path, 10);
    // The bumped difference quotient is 1 up to rounding of order eps x / bump.
    EXPECT_LE(check.max_discrepancy, 1e-10 * check.initial_value);
  }
}

TEST(Functional, IntegralHasHorizontalDerivativeX) {
  const auto f = integral_functional(1.0);
  EXPECT_NEAR(horizontal_derivative(f, 0.3, 104.0, 17.0, 1e-3), 104.0, 1e-9);
  const auto v = vertical_derivative(f, 0.3, 104.0, 17.0, 1e-2);
  EXPECT_NEAR(v.first, 0.0, 1e-12);
  EXPECT_NEAR(v.second, 0.0, 1e-12);
  // Left sums: the state equals the Foellmer-style sum of X dt.
  const auto path = bs_paths(8, 1).front();
  const auto state = running_state(f, path);
  const auto on = path.on_level(8);
  double sum = 0.0;
  for (Eigen::Index k = 0; k + 1 < on.rows(); ++k) sum += on(k, 0) / 256.0;
  EXPECT_NEAR(state(state.size() - 1), sum, 1e-12 * sum);
  // Constant vertical derivative zero: F_t - F_0 is not a Foellmer integral of 0.
  EXPECT_GT(functional_hedge_check(f, path, 8).max_discrepancy, 1.0);
}

TEST(Functional, MarkovFunctionalMatchesLattice) {
  const auto model = bs();
  const auto grid = centered_grid(model, Eigen::VectorXd::Constant(1, 100.0), 1.0, 801, 400);
  const auto solution = solve_tvp(model, [](const Eigen::VectorXd& x) { return std::max(x(0) - 100, 0.0); }, 0.0,
                                  1.0, grid);
  const auto built = markov_functional(solution, model);
  const double ref = 100 * (normal_cdf(0.1) - normal_cdf(-0.1));
  EXPECT_NEAR(built.functional.value(0.0, 100.0, 100.0), solution.value(0.0, Eigen::VectorXd::Constant(1, 100.0)),
              1e-6 * ref);
  EXPECT_LE(std::abs(built.functional.value(0.0, 100.0, 100.0) - ref) / ref, 2e-3);
  const auto v = vertical_derivative(built.functional, 0.0, 100.0, 100.0, 1e-2);
  EXPECT_NEAR(v.first, normal_cdf(0.1), 5e-3);
  const auto report = derivative_report(built.functional, model, 0.25, 100.0, 100.0, 1e-2, 1.0 / 1024);
  EXPECT_LE(std::abs(report.residual), 0.05);
}

TEST(Functional, LookbackInitialValueMatchesQuadrature) {
  const auto fixture = read_fixture("functional_f0.txt");
  const auto built = lookback_put_functional(0.2, 1.0);
  const auto& f = built.functional;
  const double f0 = f.value(0.0, 100.0, f.initial_state(100.0));
  EXPECT_LE(std::abs(f0 - fixture.at("lookback")) / fixture.at("lookback"), 1e-3);
}

TEST(Functional, AsianInitialValueMatchesMonteCarlo) {
  const auto fixture = read_fixture("functional_f0.txt");
  const auto built = asian_call_functional(0.2, 100.0, 1.0);
  const auto& f = built.functional;
  const double f0 = f.value(0.0, 100.0, f.initial_state(100.0));
  const double price = fixture.at("asian");
  EXPECT_NEAR(f0, price, 3 * fixture.at("asian_standard_error") + 3e-3 * price);
}

TEST(Functional, AsianTerminalMatchesPayoff) {
  const auto built = asian_call_functional(0.2, 100.0, 1.0, 201, 100);
  const auto& f = built.functional;
  EXPECT_DOUBLE_EQ(f.value(1.0, 97.0, 105.0), 5.0);
  EXPECT_DOUBLE_EQ(f.value(1.0, 97.0, 95.0), 0.0);
}

TEST(Functional, FtvpRejectsSampleTimesOffTheNodes) {
  const auto built = asian_call_functional(0.2, 100.0, 1.0, 201, 100);
  FtvpOptions options;
  options.sample_times = {1.0 / 3.0};
  EXPECT_THROW(ftvp_residual(built.functional, bs(), bs_paths(6, 2), options), ValidationError);
}

TEST(Functional, FtvpReportsResidualAndTerminal) {
  const auto built = asian_call_functional(0.2, 100.0, 1.0);
  FtvpOptions options;
  options.sample_times = {0.25, 0.5};
  options.tolerance = 1.0;
  const auto report = ftvp_residual(built.functional, bs(), bs_paths(10, 4), options);
  EXPECT_EQ(report.samples.size(), 8u);
  EXPECT_EQ(report.terminal_mismatch, 0.0);
  EXPECT_TRUE(report.passed);
  std::ostringstream csv;
  write_ftvp_csv(csv, report);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "t,x,state,DF,A_F,residual");
}

TEST(Functional, AsianHedgeDiscrepancyShrinksWithLevel) {
  const auto built = asian_call_functional(0.2, 100.0, 1.0);
  const auto paths = bs_paths(14, 5);
  double previous = 1e300;
  for (int level : {10, 12, 14}) {
    double worst = 0.0;
    for (const auto& path : paths) worst = std::max(worst, functional_hedge_check(built.functional, path, level).max_discrepancy);
    EXPECT_LT(worst, previous);
    previous = worst;
  }
}
