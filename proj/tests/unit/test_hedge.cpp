#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pathhedge/hedge.hpp"

using namespace pathhedge;

namespace {

LocalVolModel bs(double var = 0.04) {
  return LocalVolModel::constant(Flavor::positive, Eigen::MatrixXd::Constant(1, 1, var));
}

Eigen::VectorXd spot(double s) { return Eigen::VectorXd::Constant(1, s); }

PathGeneratorSpec bs_paths(int level, std::uint64_t count, double kappa = 1.0, std::uint64_t seed = 11) {
  PathGeneratorSpec spec{bs(), level, 1.0, seed, count, kappa, spot(100)};
  return spec;
}

}  // namespace

TEST(Hedge, ForwardIsReplicatedExactlyInWholeSpace) {
  const auto model = LocalVolModel::constant(Flavor::whole_space, Eigen::MatrixXd::Constant(1, 1, 4.0));
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 10));
  const auto payoff = PayoffSpec::parse("x1", 1, 1);
  const auto config = default_scheme_config(model, spot(0.0), 1.0);
  PathGeneratorSpec spec{model, 10, 1.0, 3, 5, 1.0, spot(0.0)};
  for (std::uint64_t p = 0; p < spec.count; ++p) {
    const auto report = run_hedge(generate_path(spec, p), schedule, payoff, model, config, 10);
    ASSERT_FALSE(report.exited_grid);
    EXPECT_LE(std::abs(report.replication_error), 1e-6);
  }
}

TEST(Hedge, ValueIsInitialCapitalPlusFollmerIntegral) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.5, 1.0}, PartitionHierarchy(1.0, 10));
  const auto payoff = PayoffSpec::parse("(call (avg x1 x2) 100)", 1, 2);
  const auto config = default_scheme_config(model, spot(100), 1.0);
  const auto path = generate_path(bs_paths(10, 1));
  const auto r = run_hedge(path, schedule, payoff, model, config, 10);
  ASSERT_FALSE(r.exited_grid);
  const auto integral = follmer_integral(r.xi, path, 10);
  const double scale = r.value.cwiseAbs().maxCoeff();
  EXPECT_LE((r.value.array() - r.initial_capital - integral.values.array()).abs().maxCoeff(), 1e-12 * scale);
  const Eigen::VectorXd holdings = r.xi.col(0).cwiseProduct(r.spot.col(0));
  EXPECT_LE((r.eta - (r.value - holdings)).cwiseAbs().maxCoeff(), 1e-12 * scale);
  EXPECT_DOUBLE_EQ(r.replication_error, r.terminal_value - r.payoff);
  EXPECT_DOUBLE_EQ(r.payoff, std::max(0.5 * (path.at(0.5)(0) + path.at(1.0)(0)) - 100.0, 0.0));
}

TEST(Hedge, LinearInPayoff) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 10));
  const auto config = default_scheme_config(model, spot(100), 1.0);
  const auto path = generate_path(bs_paths(10, 1));
  const auto a = run_hedge(path, schedule, PayoffSpec::parse("(call x1 100)", 1, 1), model, config, 10);
  const auto b = run_hedge(path, schedule, PayoffSpec::parse("(* 3 (call x1 100))", 1, 1), model, config, 10);
  EXPECT_LE((b.value - 3 * a.value).cwiseAbs().maxCoeff(), 1e-10 * b.value.cwiseAbs().maxCoeff());
  EXPECT_LE((b.xi - 3 * a.xi).cwiseAbs().maxCoeff(), 1e-10 * b.xi.cwiseAbs().maxCoeff());
}

TEST(Hedge, BlackScholesErrorsShrinkWithLevel) {
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 14));
  const auto payoff = PayoffSpec::parse("(call x1 100)", 1, 1);
  const auto config = default_scheme_config(bs(), spot(100), 1.0, 801, 400);
  double previous = 1e300;
  for (int level : {10, 12, 14}) {
    const auto batch = hedge_batch(bs_paths(14, 100), schedule, payoff, config, level, 1);
    EXPECT_EQ(batch.exited, 0u);
    EXPECT_LT(batch.median_abs_error, previous);
    previous = batch.median_abs_error;
  }
  EXPECT_LE(previous, 1.0);
}

TEST(Hedge, ZeroPayoffGivesZeroWealth) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 10));
  const auto r = run_hedge(generate_path(bs_paths(10, 1)), schedule, PayoffSpec::parse("0", 1, 1), model,
                           default_scheme_config(model, spot(100), 1.0), 10);
  EXPECT_LE(r.value.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(r.xi.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Hedge, PathLeavingTheGridIsFlagged) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 10));
  auto config = default_scheme_config(model, spot(100), 1.0);
  config.grid.axes[0].lower = std::log(90.0);
  config.grid.axes[0].upper = std::log(110.0);
  Eigen::MatrixXd values(1025, 1);
  for (Eigen::Index k = 0; k < values.rows(); ++k) values(k, 0) = 100.0 + 20.0 * static_cast<double>(k) / 1024.0;
  const SampledPath path(PartitionHierarchy(1.0, 10), values, Flavor::positive);
  const auto r = run_hedge(path, schedule, PayoffSpec::parse("(call x1 100)", 1, 1), model, config, 10);
  EXPECT_TRUE(r.exited_grid);
  EXPECT_FALSE(r.exit_reason.empty());
  EXPECT_TRUE(std::isnan(r.replication_error));
  EXPECT_TRUE(std::isnan(r.value(r.value.size() - 1)));
}

TEST(Hedge, FixingTimeMustBeANode) {
  const auto model = bs();
  const FixingSchedule schedule({0.0, 0.5, 1.0}, PartitionHierarchy(1.0, 10));
  const auto payoff = PayoffSpec::parse("(call (avg x1 x2) 100)", 1, 2);
  const auto path = generate_path(bs_paths(10, 1));
  EXPECT_THROW(run_hedge(path, schedule, payoff, model, default_scheme_config(model, spot(100), 1.0), 0),
               ValidationError);
}

TEST(Robustness, SweepOrdersShortfallByKappa) {
  const PartitionHierarchy h(1.0, 12);
  const std::vector<SweepPayoff> payoffs{{"call", PayoffSpec::parse("(call x1 100)", 1, 1), FixingSchedule({0.0, 1.0}, h)}};
  const auto config = default_scheme_config(bs(), spot(100), 1.0);
  const auto rows = robustness_sweep(payoffs, {0.64, 1.44}, bs_paths(12, 100), config, 12, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LE(rows[0].shortfall_freq, 0.01);
  EXPECT_GT(rows[1].shortfall_freq, rows[0].shortfall_freq);
  EXPECT_GT(rows[0].median_error, 0.0);
  EXPECT_LT(rows[1].median_error, 0.0);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "payoff,kappa,n_paths,median_error,shortfall_freq");
}

TEST(Probe, ZeroPayoffPassesAndPositiveValueIsNotApplicable) {
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 10));
  const auto config = default_scheme_config(bs(), spot(100), 1.0);
  const auto zero = no_arbitrage_probe(bs_paths(10, 20), schedule, PayoffSpec::parse("0", 1, 1), config, 10, 1, 100.0);
  EXPECT_EQ(zero.verdict, ProbeVerdict::pass);
  EXPECT_LE(std::max(std::abs(zero.sup_value), std::abs(zero.min_value)), 1e-10);
  EXPECT_NE(zero.note.find("no arbitrage found at tolerance"), std::string::npos);
  const auto call =
      no_arbitrage_probe(bs_paths(10, 20), schedule, PayoffSpec::parse("(call x1 100)", 1, 1), config, 10, 1, 100.0);
  EXPECT_EQ(call.verdict, ProbeVerdict::not_applicable);
  EXPECT_STREQ(to_string(ProbeVerdict::not_applicable), "NOT_APPLICABLE");
}

TEST(Probe, NegativePayoffIsRejected) {
  const FixingSchedule schedule({0.0, 1.0}, PartitionHierarchy(1.0, 10));
  const auto config = default_scheme_config(bs(), spot(100), 1.0);
  EXPECT_THROW(no_arbitrage_probe(bs_paths(10, 5), schedule, PayoffSpec::parse("(- x1 200)", 1, 1), config, 10, 1,
                                  100.0),
               ValidationError);
}

TEST(Median, EvenAndOdd) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}
