#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pathhedge/scheme.hpp"

using namespace pathhedge;

namespace {

LocalVolModel bs(double var = 0.04) {
  return LocalVolModel::constant(Flavor::positive, Eigen::MatrixXd::Constant(1, 1, var));
}

Eigen::VectorXd spot(double s) { return Eigen::VectorXd::Constant(1, s); }

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

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST(Payoff, ParsesAndEvaluates) {
  const auto p = PayoffSpec::parse("(call (avg x1 x2) 100)", 1, 2);
  EXPECT_DOUBLE_EQ(p(Fixings{spot(100), spot(110), spot(120)}), 15.0);
  EXPECT_EQ(p.dependencies(), (std::set<int>{1, 2}));
  EXPECT_FALSE(p.discontinuous());
  const auto q = PayoffSpec::parse("(- (* 2 (max x1_1 x1_2)) (min 3 x0_2) (put x1_1 4) (- 1))", 2, 1);
  Fixings f{Eigen::Vector2d(1, 2), Eigen::Vector2d(5, 7)};
  EXPECT_DOUBLE_EQ(q(f), 14.0 - 2.0 - 0.0 + 1.0);
  EXPECT_TRUE(PayoffSpec::parse("(digital x1 100)", 1, 1).discontinuous());
  EXPECT_DOUBLE_EQ(PayoffSpec::parse("(digital x1 100)", 1, 1)(Fixings{spot(1), spot(101)}), 1.0);
}

TEST(Payoff, Errors) {
  EXPECT_THROW(PayoffSpec::parse("(call x1 100", 1, 1), ParseError);
  EXPECT_THROW(PayoffSpec::parse("(frobnicate x1)", 1, 1), ParseError);
  EXPECT_THROW(PayoffSpec::parse("(call x1)", 1, 1), ParseError);
  EXPECT_THROW(PayoffSpec::parse("x1 x2", 1, 2), ParseError);
  EXPECT_THROW(PayoffSpec::parse("x1", 2, 1), ParseError);
  EXPECT_THROW(PayoffSpec::parse("x3", 1, 2), ValidationError);
  EXPECT_THROW(PayoffSpec::parse("x1_3", 2, 1), ValidationError);
}

TEST(Payoff, LipschitzProbe) {
  auto call = PayoffSpec::parse("(call x1 100)", 1, 1);
  call.lipschitz_constant = 1.0;
  EXPECT_TRUE(lipschitz_probe(call, spot(100), 0.2, 1).passed);
  auto steep = PayoffSpec::parse("(* 5 x1)", 1, 1);
  EXPECT_FALSE(lipschitz_probe(steep, spot(100), 0.2, 1).passed);
  EXPECT_FALSE(lipschitz_probe(PayoffSpec::parse("(digital x1 100)", 1, 1), spot(100), 0.2, 1).applicable);
}

TEST(FixingSchedule, Validation) {
  const PartitionHierarchy h(1.0, 10);
  EXPECT_NO_THROW(FixingSchedule({0.0, 0.5, 1.0}, h));
  EXPECT_THROW(FixingSchedule({0.0, 0.3, 1.0}, h), ValidationError);
  EXPECT_THROW(FixingSchedule({0.0, 0.5, 0.5, 1.0}, h), ValidationError);
  EXPECT_THROW(FixingSchedule({0.25, 1.0}, h), ValidationError);
  const FixingSchedule s({0.0, 0.5, 1.0}, h);
  EXPECT_EQ(s.interval_of(0.25), 0);
  EXPECT_EQ(s.interval_of(0.5), 1);
  EXPECT_EQ(s.interval_of(1.0), 1);
}

TEST(Scheme, SingleFixingMatchesBlackScholes) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 14));
  const auto payoff = PayoffSpec::parse("(call x1 100)", 1, 1);
  const auto config = default_scheme_config(model, spot(100), 1.0, 801, 400);
  const auto sol = build_scheme(model, schedule, payoff, Fixings{spot(100)}, config);
  const double d1 = 0.1;
  const double ref = 100 * (normal_cdf(d1) - normal_cdf(d1 - 0.2));
  EXPECT_LE(std::abs(sol.value(0.0, spot(100)) - ref) / ref, 2e-3);
  EXPECT_LE(std::abs(scheme_delta(sol, 0.0, spot(100))(0) - normal_cdf(d1)), 5e-3);
  const auto tvp = solve_tvp(model, [](const Eigen::VectorXd& x) { return std::max(x(0) - 100, 0.0); }, 0.0, 1.0,
                             config.grid);
  EXPECT_EQ((tvp.slice(0) - sol.grid().slice(0)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Scheme, ForwardOnSecondFixing) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.5, 1.0}, PartitionHierarchy(1.0, 14));
  const auto payoff = PayoffSpec::parse("x2", 1, 2);
  const auto sol = build_scheme(model, schedule, payoff, Fixings{spot(100)}, default_scheme_config(model, spot(100), 1.0));
  EXPECT_LE(std::abs(sol.value(0.0, spot(100)) - 100) / 100, 2e-3);
  // h ignores x1, so v_0 reuses the start slice of v_1: one nested solve plus the top-level one.
  EXPECT_EQ(sol.nested_solves(), 2u);
}

TEST(Scheme, TwoFixingAsianAgainstMonteCarlo) {
  const auto fixture = read_fixture("asian_n2_mc.txt");
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.5, 1.0}, PartitionHierarchy(1.0, 14));
  const auto payoff = PayoffSpec::parse("(call (avg x1 x2) 100)", 1, 2);
  const auto sol = build_scheme(model, schedule, payoff, Fixings{spot(100)}, default_scheme_config(model, spot(100), 1.0));
  const double price = fixture.at("price");
  const double tolerance = 3 * fixture.at("standard_error") + 3e-3 * price;
  EXPECT_NEAR(sol.value(0.0, spot(100)), price, tolerance);
}

TEST(Scheme, MemoizationIsPureCaching) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.25, 0.5, 1.0}, PartitionHierarchy(1.0, 10));
  // h ignores x1, so after rolling different x1 the nested solves keyed on x2 are shared.
  const auto payoff = PayoffSpec::parse("(call (avg x2 x3) 100)", 1, 3);
  auto config = default_scheme_config(model, spot(100), 1.0, 201, 100);
  config.fixing_nodes = 9;
  auto run = [&](const SchemeConfig& c, std::vector<Eigen::VectorXd>& slices) {
    const auto v0 = build_scheme(model, schedule, payoff, Fixings{spot(100)}, c);
    slices.push_back(v0.grid().slice(0));
    for (double x1 : {95.0, 105.0}) slices.push_back(roll_fixing(v0, spot(x1)).grid().slice(0));
    return v0.nested_solves();
  };
  std::vector<Eigen::VectorXd> with, without, threaded;
  const auto solves_with = run(config, with);
  config.memoize = false;
  const auto solves_without = run(config, without);
  config.memoize = true;
  config.threads = 3;
  run(config, threaded);
  EXPECT_LT(solves_with, solves_without);
  for (std::size_t i = 0; i < with.size(); ++i) {
    EXPECT_EQ((with[i] - without[i]).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((with[i] - threaded[i]).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Scheme, BudgetExceeded) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.25, 0.5, 0.75, 1.0}, PartitionHierarchy(1.0, 10));
  const auto payoff = PayoffSpec::parse("(call (avg x1 x2 x3 x4) 100)", 1, 4);
  auto config = default_scheme_config(model, spot(100), 1.0, 201, 100);
  config.budget = 100;
  EXPECT_THROW(build_scheme(model, schedule, payoff, Fixings{spot(100)}, config), BudgetError);
}

TEST(Scheme, RollFixingAndTowerProperty) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.5, 1.0}, PartitionHierarchy(1.0, 10));
  const auto payoff = PayoffSpec::parse("(call (avg x1 x2) 100)", 1, 2);
  const auto config = default_scheme_config(model, spot(100), 1.0, 401, 200);
  const auto v0 = build_scheme(model, schedule, payoff, Fixings{spot(100)}, config);
  const auto v1 = roll_fixing(v0, spot(104));
  EXPECT_EQ(v1.interval(), 1);
  // Terminal of v_0 at x equals v_1(t_1, prefix + x, x).
  const auto direct = build_scheme(model, schedule, payoff, Fixings{spot(100), spot(104)}, config);
  EXPECT_NEAR(v1.value(0.5, spot(104)), direct.value(0.5, spot(104)), 1e-12);
  // Off the fixing nodes v_0 sees a cubic interpolant of that terminal (2.2e-3 measured at 104).
  EXPECT_NEAR(v0.value(0.5, spot(104)), v1.value(0.5, spot(104)), 5e-3);
  const auto done = roll_fixing(v1, spot(110));
  EXPECT_TRUE(done.terminal());
  EXPECT_DOUBLE_EQ(done.terminal_value(), 7.0);
  EXPECT_THROW(roll_fixing(done, spot(110)), ValidationError);
  EXPECT_THROW(scheme_delta(v1, 0.25, spot(100)), DomainError);
}

TEST(Scheme, LinearityInPayoff) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.5, 1.0}, PartitionHierarchy(1.0, 10));
  const auto config = default_scheme_config(model, spot(100), 1.0, 201, 100);
  const auto a = build_scheme(model, schedule, PayoffSpec::parse("(call (avg x1 x2) 100)", 1, 2), Fixings{spot(100)}, config);
  const auto b = build_scheme(model, schedule, PayoffSpec::parse("(* 3 (call (avg x1 x2) 100))", 1, 2),
                              Fixings{spot(100)}, config);
  EXPECT_LE((b.grid().slice(0) - 3 * a.grid().slice(0)).cwiseAbs().maxCoeff(), 1e-10 * b.grid().max_abs_value());
}

TEST(Scheme, CubicWeightsReproduceCubics) {
  const Axis axis{0.0, 1.0, 11};
  int first = 0;
  double w[4];
  cubic_weights(axis, 0.437, first, w);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) acc += w[a] * std::pow(axis.coordinate(first + a), 3);
  EXPECT_NEAR(acc, std::pow(0.437, 3), 1e-14);
}
