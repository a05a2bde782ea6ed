#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support/synthetic.hpp"
#include "support/test_util.hpp"
#include "tokon/error.hpp"
#include "tokon/search.hpp"

using namespace tokon;

using test::flat_target_dataset;

TEST(GoldenRatio, Identities) {
  const double rho = golden_ratio_conjugate();
  EXPECT_DOUBLE_EQ(rho, 0.6180339887498949);
  EXPECT_NEAR(rho * rho + rho, 1.0, 1e-15);
  EXPECT_NEAR(1.0 / rho, 1.0 + rho, 1e-15);
}

TEST(GoldenSection, QuadraticMinimum) {
  BracketConfig cfg;
  int calls = 0;
  const auto r = golden_section_minimize(cfg, [&](double d) {
    ++calls;
    return (d - 300.0) * (d - 300.0);
  });
  EXPECT_LE(std::abs(r.sigma_t - 300.0), 1.0);
  // ceil(ln(999) / ln(1/rho)) = 15
  EXPECT_EQ(r.trace.iterations.size(), 15u);
  EXPECT_EQ(calls, 30);
  EXPECT_EQ(r.trace.cost_evaluations, 30u);
  EXPECT_LE(r.trace.final_hi - r.trace.final_lo, 1.0);
  EXPECT_GE(r.sigma_t, r.trace.final_lo);
  EXPECT_LE(r.sigma_t, r.trace.final_hi);
  EXPECT_FALSE(r.trace.hit_max_iterations);
}

TEST(GoldenSection, ImmediateConvergence) {
  BracketConfig cfg;
  cfg.epsilon = 999.0;
  int calls = 0;
  const auto r = golden_section_minimize(cfg, [&](double) { return ++calls, 0.0; });
  EXPECT_DOUBLE_EQ(r.sigma_t, 499.5);
  EXPECT_TRUE(r.trace.iterations.empty());
  EXPECT_EQ(calls, 0);
}

TEST(GoldenSection, WidthShrinksByRho) {
  BracketConfig cfg;
  cfg.epsilon = 1e-3;
  const auto r = golden_section_minimize(cfg, [](double d) { return std::abs(d - 123.4); });
  const double rho = golden_ratio_conjugate();
  const auto& its = r.trace.iterations;
  for (std::size_t k = 0; k < its.size(); ++k) {
    const double width = its[k].hi - its[k].lo;
    EXPECT_NEAR(width, 999.0 * std::pow(rho, double(k)), 1e-9 * 999.0);
    EXPECT_LT(its[k].lo, its[k].probe_lower);
    EXPECT_LT(its[k].probe_lower, its[k].probe_upper);
    EXPECT_LT(its[k].probe_upper, its[k].hi);
  }
}

TEST(GoldenSection, UnimodalMinimizerStaysBracketed) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> where(0.0, 999.0), scale(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double star = where(rng);
    const double a = scale(rng);
    BracketConfig cfg;
    const auto r = golden_section_minimize(cfg, [&](double d) { return a * (d - star) * (d - star); });
    EXPECT_LE(r.trace.final_lo, star + 1e-9);
    EXPECT_GE(r.trace.final_hi, star - 1e-9);
  }
}

TEST(GoldenSection, VerbatimRuleDiscardsBetterProbe) {
  BracketConfig cfg;
  cfg.rule = UpdateRule::Verbatim;
  const auto r = golden_section_minimize(cfg, [](double d) { return (d - 300.0) * (d - 300.0); });
  ASSERT_FALSE(r.trace.iterations.empty());
  const auto& first = r.trace.iterations.front();
  // C(upper = 617.4) > C(lower = 381.6) so the verbatim rule sets lo = upper probe.
  EXPECT_GT(first.cost_upper, first.cost_lower);
  ASSERT_GE(r.trace.iterations.size(), 2u);
  EXPECT_DOUBLE_EQ(r.trace.iterations[1].lo, first.probe_upper);
  EXPECT_GT(r.trace.final_lo, 300.0);
}

TEST(GoldenSection, MaxIterationsFlagged) {
  BracketConfig cfg;
  cfg.epsilon = 1e-9;
  cfg.max_iterations = 5;
  const auto r = golden_section_minimize(cfg, [](double d) { return d; });
  EXPECT_TRUE(r.trace.hit_max_iterations);
  EXPECT_EQ(r.trace.iterations.size(), 5u);
  EXPECT_DOUBLE_EQ(r.sigma_t, 0.5 * (r.trace.final_lo + r.trace.final_hi));
}

TEST(GoldenSection, ConfigValidation) {
  BracketConfig cfg;
  cfg.epsilon = 0.0;
  EXPECT_THROW(golden_section_minimize(cfg, [](double) { return 0.0; }), Error);
  cfg = {};
  cfg.lo = 5.0;
  cfg.hi = 5.0;
  EXPECT_THROW(golden_section_minimize(cfg, [](double) { return 0.0; }), Error);
  SearchConfig sc;
  EXPECT_THROW(sc.validate(), Error);  // empty calibration set
}

TEST(ProbeCost, OracleCostDecreasesWithDelta) {
  DomainStats stats;
  const auto ds = flat_target_dataset(20, 1e-4, stats);
  BackendConfig bc;
  bc.kind = BackendKind::QuantizingOracle;
  auto oracle = make_forecaster(bc);
  SearchConfig cfg;
  for (const auto& r : ds.records) cfg.calibration_ids.push_back(r.id);
  double previous = INFINITY;
  for (double delta = 5.0; delta <= 999.0; delta += 7.0) {
    const double c = evaluate_probe_cost(delta, ds.records, stats, *oracle, cfg);
    // Targets at the mean: every element contributes at most 0.25 (sigma_s / delta)^2.
    EXPECT_LE(c, 0.25 * std::pow(stats.std_dev / delta, 2) * 6 * 20 * (1 + 1e-9));
    EXPECT_LT(c, previous);
    previous = c;
  }
}

TEST(ProbeCost, FailedForecastsUseNaiveCostAndAllFailedThrows) {
  DomainStats stats;
  const auto ds = flat_target_dataset(3, 1e-4, stats);
  test::TempDir dir("probe");
  test::write_file(dir / "r.replay", "s0\t1, 2, 3, 4, 5, 6\ns1\tno idea\n");
  BackendConfig bc;
  bc.kind = BackendKind::Replay;
  bc.replay_path = dir / "r.replay";
  auto replay = make_forecaster(bc);
  SearchConfig cfg;
  cfg.calibration_ids = {"s0", "s1", "s2"};
  const double delta = 100.0;
  const double c = evaluate_probe_cost(delta, ds.records, stats, *replay, cfg);

  const TargetParams t(499.5, delta, 0, 999);
  double expected = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    const double e = denormalize_value(double(k + 1), stats, t) - ds.records[0].target[k];
    expected += e * e;
  }
  for (std::size_t i = 1; i < 3; ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      const double e = ds.records[i].context.back() - ds.records[i].target[k];
      expected += e * e;
    }
  }
  EXPECT_NEAR(c, expected, 1e-9 * expected);

  std::vector<DatasetRecord> failing{ds.records[1], ds.records[2]};
  try {
    evaluate_probe_cost(delta, failing, stats, *replay, cfg);
    FAIL() << "expected AllForecastsFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AllForecastsFailed);
  }
}

TEST(Search, OracleConvergesToUpperBound) {
  DomainStats stats;
  const auto ds = flat_target_dataset(20, 1e-4, stats);
  BackendConfig bc;
  bc.kind = BackendKind::QuantizingOracle;
  auto oracle = make_forecaster(bc);
  SearchConfig cfg;
  for (const auto& r : ds.records) cfg.calibration_ids.push_back(r.id);
  const auto r = golden_section_search(cfg, ds, stats, *oracle);
  EXPECT_GE(r.sigma_t, 998.0);
  EXPECT_LE(r.sigma_t, 999.0);
  EXPECT_DOUBLE_EQ(cfg.target_mean(), 499.5);
  EXPECT_GE(r.trace.best_probe, r.trace.iterations.back().probe_lower);
}

TEST(Search, UnknownCalibrationIdRejected) {
  DomainStats stats;
  const auto ds = flat_target_dataset(2, 1e-4, stats);
  BackendConfig bc;
  auto naive = make_forecaster(bc);
  SearchConfig cfg;
  cfg.calibration_ids = {"nope"};
  EXPECT_THROW(golden_section_search(cfg, ds, stats, *naive), Error);
}

TEST(Search, TraceTableHasOneRowPerIteration) {
  BracketConfig cfg;
  const auto r = golden_section_minimize(cfg, [](double d) { return std::abs(d - 10.0); });
  std::ostringstream out;
  write_trace(out, r.trace);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("iteration\tlo\thi\tprobe_lower\tprobe_upper\tcost_lower\tcost_upper\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.trace.iterations.size() + 1);
}

TEST(MakeRequest, EmbedsTokensWhenNormalized) {
  DatasetRecord rec;
  rec.id = "x";
  rec.granularity = Granularity::Hourly;
  rec.start = {2007, 1, 1, 0};
  rec.context = TimeSeries({4.98, 9.97, 0.2, 4.98});
  rec.target = TimeSeries({1.0, 2.0});
  const NormalizationParams p{DomainStats(4.98, 4.99, 100), TargetParams(499.5, 24.57, 0, 999)};
  const auto req = make_request(rec, PromptKind::Baseline, p);
  EXPECT_EQ(req.prompt.text, test::read_file(test::data_path("golden/hourly_tokens_baseline.txt")));
  EXPECT_EQ(req.context, (std::vector<double>{500, 524, 476, 500}));
  EXPECT_EQ(req.horizon, 2u);
}
