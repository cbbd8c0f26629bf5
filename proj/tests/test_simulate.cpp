#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "anonmech/instances.hpp"
#include "anonmech/simulate.hpp"

using namespace anonmech;

namespace {

const AuctionInstance kIntro({PointMass{2.0}, PointMass{1.0}});

double harmonic_sum(std::size_t n) {
  double h = 0.0;
  for (std::size_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

}  // namespace

TEST(EstimateRevenue, DeterministicInstanceHasNoSpread) {
  const auto s = estimate_revenue(mechanisms::posted_monopoly(kIntro), kIntro, 1000, 1);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.stddev, 0.0);
  EXPECT_EQ(s.std_error, 0.0);
  EXPECT_EQ(s.trials, 1000u);
  EXPECT_EQ(s.ci95_lo, 3.0);
}

TEST(EstimateRevenue, SinglePriceOnTwoUniforms) {
  const AuctionInstance inst({UniformInterval{0, 1}, UniformInterval{0, 1}});
  const auto s = estimate_revenue(mechanisms::single_price(0.5, 2), inst, 100000, 3);
  EXPECT_NEAR(s.mean, 0.5, 3.0 * s.std_error);
  EXPECT_NEAR(s.std_error, s.stddev / std::sqrt(100000.0), 1e-15);
  EXPECT_NEAR(s.ci95_hi - s.mean, 1.96 * s.std_error, 1e-15);
}

TEST(EstimateRevenue, MixedK1WithinFactorFive) {
  const auto inst = instances::random_k_ambiguous(20, 1, 77);
  const auto s = estimate_revenue(mechanisms::mixed_dpm(inst, 1), inst, 50000, 5);
  EXPECT_GE(s.mean, opt_digital(inst) / 5.0 - 3.0 * s.std_error);
}

TEST(EstimateRevenue, IndependentOfWorkerCount) {
  const auto inst = instances::random_k_ambiguous(12, 2, 4);
  const auto mech = mechanisms::mixed_dpm(inst, 2);
  const auto one = estimate_revenue(mech, inst, 5000, 42, 1);
  const auto four = estimate_revenue(mech, inst, 5000, 42, 4);
  const auto seven = estimate_revenue(mech, inst, 5000, 42, 7);
  EXPECT_EQ(one.mean, four.mean);
  EXPECT_EQ(one.stddev, four.stddev);
  EXPECT_EQ(one.mean, seven.mean);
  EXPECT_NE(one.mean, estimate_revenue(mech, inst, 5000, 43, 1).mean);
}

TEST(EstimateRevenue, MismatchAndZeroTrialsFail) {
  const AuctionInstance three({PointMass{3.0}, PointMass{2.0}, PointMass{1.0}});
  EXPECT_THROW(estimate_revenue(mechanisms::posted({2.0, 1.0}), three, 10, 1), InputError);
  EXPECT_THROW(estimate_revenue(mechanisms::posted_monopoly(kIntro), kIntro, 0, 1), InputError);
}

TEST(PayerTail, PointMassesPayOwnThreshold) {
  const auto inst = instances::harmonic(8);
  std::vector<double> values;
  for (std::size_t i = 0; i < inst.size(); ++i) values.push_back(inst.low(i));
  const PricingScheme own(values);
  const auto tail = payer_tail([own](Rng&) { return own; }, inst, 1, 200, 9);
  ASSERT_EQ(tail.counts.size(), 8u);
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_EQ(tail.counts[t], static_cast<double>(t + 1));
    EXPECT_EQ(tail.std_errors[t], 0.0);
    EXPECT_EQ(tail.thresholds[t], inst.low(t));
  }
}

TEST(PayerTail, K1ConstructionMeetsThirdBound) {
  for (std::uint64_t seed : {1ull, 2ull}) {
    const auto inst = instances::random_k_ambiguous(20, 1, seed);
    const auto tail = payer_tail(mechanisms::k1_sampler(inst), inst, 1, 20000, seed);
    for (std::size_t t = 0; t < tail.counts.size(); ++t) {
      EXPECT_EQ(tail.bound[t], (t + 1) / 3.0);
      EXPECT_GE(tail.counts[t], tail.bound[t] - 3.0 * tail.std_errors[t]) << "t = " << t + 1;
      if (t > 0) { EXPECT_GE(tail.counts[t], tail.counts[t - 1]); }
    }
  }
}

TEST(PayerTail, BlockConstructionMeetsBound) {
  const auto inst = instances::random_k_ambiguous(30, 2, 6);
  const auto tail = payer_tail(mechanisms::block_sampler(inst, 2), inst, 2, 20000, 6);
  ASSERT_EQ(tail.counts.size(), 15u);
  const double e2 = std::numbers::e * std::numbers::e;
  for (std::size_t t = 0; t < tail.counts.size(); ++t) {
    EXPECT_NEAR(tail.bound[t], (t + 1) / (3.0 * e2 * 2.0), 1e-15);
    EXPECT_GE(tail.counts[t], tail.bound[t] - 3.0 * tail.std_errors[t]);
  }
}

TEST(OptDigital, Examples) {
  EXPECT_NEAR(opt_digital(instances::harmonic(100)), harmonic_sum(100), 1e-12);
  EXPECT_EQ(opt_digital(kIntro), 3.0);
  const AuctionInstance unif(std::vector<ValueDistribution>(7, ValueDistribution(UniformInterval{0, 1})));
  EXPECT_EQ(opt_digital(unif), 7.0 / 4.0);
}

TEST(Benchmarks, HarmonicBestSinglePriceIsOne) {
  const auto inst = instances::harmonic(100);
  std::vector<double> candidates;
  for (std::size_t i = 0; i < inst.size(); ++i) candidates.push_back(inst.low(i));
  const auto best = best_price_among(inst, candidates);
  EXPECT_EQ(best.revenue, 1.0);
  for (double p : candidates) EXPECT_LE(single_price_revenue(inst, p), 1.0);
}

TEST(Benchmarks, GeometricGap) {
  const auto inst = instances::geometric(0.5, 10);
  EXPECT_EQ(opt_digital(inst), 10.0);
  std::vector<double> candidates;
  for (int i = 1; i <= 10; ++i) candidates.push_back(std::ldexp(1.0, i));
  const auto best = best_price_among(inst, candidates);
  EXPECT_LE(best.revenue, 2.0);
  for (double p : candidates) EXPECT_LE(single_price_revenue(inst, p), 1.0 / (1.0 - 0.5));
}

TEST(Benchmarks, HarmonicMixtureCoversMedianSum) {
  const auto inst = instances::nested_uniform(3, 2);  // 14 uniform bidders
  double medians = 0.0;
  for (const auto& d : inst.bidders()) medians += median(d);
  const auto s = estimate_revenue(mechanisms::harmonic_mixture(inst), inst, 30000, 8);
  EXPECT_GE(s.mean, medians / (2.0 * harmonic_number(inst.size())) - 3.0 * s.std_error);
}

TEST(Benchmarks, PositionUpperBoundExamples) {
  const AuctionInstance pts({PointMass{4.0}, PointMass{3.0}, PointMass{1.0}}, 3, std::vector<double>{1, 1, 1});
  EXPECT_EQ(position_upper_bound(pts, 0), 4.0 + 4.0 + 3.0);
  EXPECT_GE(position_upper_bound(pts, 0), 8.0);

  const AuctionInstance overlap({UniformInterval{2, 4}, UniformInterval{1, 3}, UniformInterval{0.5, 2}}, 3,
                                std::vector<double>{1, 0.5, 0.25});
  double revs = 0.0;
  for (const auto& d : overlap.bidders()) revs += monopoly(d).revenue;
  EXPECT_EQ(position_upper_bound(overlap, 2), revs);

  const AuctionInstance unif({UniformInterval{0, 1}, UniformInterval{0, 1}}, 2, std::vector<double>{1, 0.5});
  EXPECT_EQ(position_upper_bound(unif, 1), 0.5);
  EXPECT_THROW(position_upper_bound(kIntro, 1), InputError);
  EXPECT_THROW(position_upper_bound(unif, 0), InputError);
}

TEST(Benchmarks, ExactExpectationOfPosted) {
  const AuctionInstance inst({DiscretePmf{{1.0, 2.0}, {0.5, 0.5}}, DiscretePmf{{0.5, 1.5}, {0.25, 0.75}}});
  const auto prices = mechanisms::monopoly_prices(inst);
  const double exact =
      exact_expectation(inst, [&](std::span<const double> v) { return run_posted_prices(prices, v).total_revenue; });
  EXPECT_NEAR(exact, opt_digital(inst), 1e-15);
}

TEST(Benchmarks, DeltaScaledGeometricRatioShrinks) {
  // Revenue of the posterior-optimal anonymous auction per unit of delta n
  // falls as delta does, while the non-anonymous optimum stays at delta n.
  const std::size_t n = 4;
  double previous = INFINITY;
  for (double delta : {1.0, 0.1, 0.01, 0.001}) {
    const auto inst = instances::geometric_delta(0.5, delta, n);
    EXPECT_NEAR(opt_digital(inst), delta * n, 1e-12);
    const double revenue = exact_expectation(
        inst, [&](std::span<const double> v) { return run_optimal_anonymous_digital(inst, v).total_revenue; });
    const double normalized = revenue / (delta * n);
    EXPECT_LT(normalized, previous + 1e-12);
    EXPECT_LE(normalized, 1.0 + 1e-12);
    previous = normalized;
  }
  EXPECT_LT(previous, 0.5);
}

TEST(Experiment, ApproxRowsPass) {
  const auto inst = instances::random_k_ambiguous(20, 1, 12);
  const auto row = approx_experiment(inst, 1, 20000, 7, "r1");
  EXPECT_EQ(row.experiment, "k1-approx");
  EXPECT_EQ(row.bound, 5.0);
  EXPECT_TRUE(row.pass);
  EXPECT_EQ(row.ratio, row.benchmark / row.mean);

  const auto k2 = instances::random_k_ambiguous(30, 2, 12);
  const auto row2 = approx_experiment(k2, 2, 20000, 7, "r2");
  EXPECT_NEAR(row2.bound, 48.33, 0.01);
  EXPECT_TRUE(row2.pass);
}

TEST(Experiment, OptimalOnZeroAmbiguousHasRatioOne) {
  const auto inst = instances::random_k_ambiguous(5, 0, 3);
  const double optimal = exact_expectation(
      inst, [&](std::span<const double> v) { return run_optimal_anonymous_digital(inst, v).total_revenue; });
  EXPECT_NEAR(opt_digital(inst) / optimal, 1.0, 1e-12);
}

TEST(Experiment, CsvFormat) {
  ExperimentRow r;
  r.experiment = "harmonic";
  r.instance_id = "h";
  r.mechanism = "m";
  r.trials = 1;
  r.seed = 7;
  r.mean = 0.1;
  r.std_error = 0.0;
  r.benchmark = 1.0 / 3.0;
  r.ratio = 2.5;
  r.bound = 5;
  r.pass = true;
  EXPECT_EQ(csv_header(), "experiment,instance_id,mechanism,trials,seed,mean,stderr,benchmark,ratio,bound,pass");
  EXPECT_EQ(to_csv(r), "harmonic,h,m,1,7,0.1,0,0.3333333333333333,2.5,5,true");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
