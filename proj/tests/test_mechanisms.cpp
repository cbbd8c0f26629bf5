#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "anonmech/instances.hpp"
#include "anonmech/mechanisms.hpp"
#include "anonmech/simulate.hpp"

using namespace anonmech;

namespace {

std::vector<double> payments(const Outcome& out) {
  std::vector<double> p;
  for (const auto& b : out.bidders) p.push_back(b.payment);
  return p;
}

// DPM read straight off its definition with 1-based ranks: rank i pays p_j for
// the least j >= i at which exactly j bids meet p_j.
std::vector<double> dpm_by_definition(const std::vector<double>& prices, const std::vector<double>& bids,
                                      const std::vector<std::size_t>& ranked) {
  const std::size_t n = bids.size();
  std::vector<double> pay(n, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    if (bids[ranked[i - 1]] < prices[i - 1]) break;
    for (std::size_t j = i; j <= n; ++j) {
      std::size_t count = 0;
      for (double b : bids) count += b >= prices[j - 1];
      if (count == j) {
        pay[ranked[i - 1]] = prices[j - 1];
        break;
      }
    }
  }
  return pay;
}

struct RandomCase {
  std::vector<double> prices;
  std::vector<double> bids;
};

// Small integer grids so ties and chains are frequent.
RandomCase random_case(Rng& rng, std::size_t n) {
  RandomCase c;
  for (std::size_t i = 0; i < n; ++i) {
    c.prices.push_back(static_cast<double>(uniform_index(rng, 6)));
    c.bids.push_back(static_cast<double>(uniform_index(rng, 7)));
  }
  std::sort(c.prices.begin(), c.prices.end(), std::greater<>());
  return c;
}

const AuctionInstance kTwoPoints({PointMass{2.0}, PointMass{1.0}});

}  // namespace

TEST(Dpm, Examples) {
  const PricingScheme s({2.0, 1.0});
  Rng rng(1);
  auto out = run_dpm(s, std::vector<double>{2.0, 1.0}, rng);
  EXPECT_EQ(payments(out), (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(out.total_revenue, 3.0);
  for (int seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    out = run_dpm(s, std::vector<double>{2.0, 2.0}, r);
    EXPECT_EQ(payments(out), (std::vector<double>{1.0, 1.0}));
    EXPECT_EQ(out[0].allocation, 1.0);
    EXPECT_EQ(out[1].allocation, 1.0);
  }
  out = run_dpm(s, std::vector<double>{1.5, 1.0}, rng);
  EXPECT_EQ(out.total_revenue, 0.0);
  EXPECT_EQ(out[0].allocation, 0.0);
}

TEST(Dpm, LengthMismatchIsInputError) {
  Rng rng(1);
  EXPECT_THROW(run_dpm(PricingScheme({2.0, 1.0}), std::vector<double>{1.0}, rng), InputError);
  EXPECT_THROW(PricingScheme({1.0, 2.0}), InputError);
}

TEST(Dpm, MatchesDefinitionOnRandomProfiles) {
  Rng rng(2024);
  for (int trial = 0; trial < 100000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    const auto c = random_case(rng, n);
    const auto priority = random_priority(n, rng);
    const PricingScheme scheme(c.prices);
    const auto out = run_dpm(scheme, c.bids, priority);  // throws if no exact index exists
    const auto ranked = rank_bidders(c.bids, priority);
    ASSERT_EQ(payments(out), dpm_by_definition(c.prices, c.bids, ranked));
    for (std::size_t i = 0; i < n; ++i) {
      if (out[i].allocation == 0.0) {
        EXPECT_EQ(out[i].payment, 0.0);
        continue;
      }
      EXPECT_LE(out[i].payment, c.bids[i]);
      EXPECT_NE(std::find(c.prices.begin(), c.prices.end(), out[i].payment), c.prices.end());
    }
  }
}

TEST(Dpm, TiedBiddersPayTheSame) {
  Rng rng(8);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 5);
    const auto c = random_case(rng, n);
    const auto a = run_dpm(PricingScheme(c.prices), c.bids, random_priority(n, rng));
    const auto b = run_dpm(PricingScheme(c.prices), c.bids, random_priority(n, rng));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(a[i].payment, b[i].payment);
      EXPECT_EQ(a[i].allocation, b[i].allocation);
    }
  }
}

TEST(Dpm, ConstantSchemeEqualsSinglePrice) {
  Rng rng(3);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    const auto c = random_case(rng, n);
    const double p = c.prices[0];
    const auto priority = random_priority(n, rng);
    const auto a = run_dpm(PricingScheme::constant(p, n), c.bids, priority);
    const auto b = run_single_price(p, n, c.bids, priority);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(a[i].allocation, b[i].allocation);
      EXPECT_EQ(a[i].payment, b[i].payment);
    }
  }
}

TEST(Dpm, MonotoneAndAnonymousOnDistinctBids) {
  Rng rng(4);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 5);
    auto c = random_case(rng, n);
    for (std::size_t i = 0; i < n; ++i) c.bids[i] += 0.001 * static_cast<double>(i);  // distinct
    const PricingScheme scheme(c.prices);
    const auto out = run_dpm(scheme, c.bids, rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (c.bids[i] > c.bids[j]) { EXPECT_GE(out[i].allocation, out[j].allocation); }
    auto perm = identity_priority(n);
    shuffle(std::span<std::size_t>(perm), rng);
    std::vector<double> permuted(n);
    for (std::size_t i = 0; i < n; ++i) permuted[i] = c.bids[perm[i]];
    const auto alt = run_dpm(scheme, permuted, rng);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(alt[i].allocation, out[perm[i]].allocation);
      EXPECT_EQ(alt[i].payment, out[perm[i]].payment);
    }
  }
}

TEST(DpmNonDsic, Examples) {
  const PricingScheme s({2.0, 1.0});
  Rng rng(1);
  EXPECT_EQ(payments(run_dpm_nondsic(s, std::vector<double>{2.0, 1.0}, rng)), (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(payments(run_dpm_nondsic(s, std::vector<double>{1.0, 2.0}, rng)), (std::vector<double>{1.0, 2.0}));
}

TEST(DpmNonDsic, UnderbiddingLowersPayment) {
  const PricingScheme s({2.0, 1.0});
  const std::vector<double> truthful{2.0, 2.0};
  const auto out = run_dpm_nondsic(s, truthful, identity_priority(2));
  ASSERT_EQ(out[0].payment, 2.0);  // rank 0 under the identity priority
  const auto dev = run_dpm_nondsic(s, std::vector<double>{1.0, 2.0}, identity_priority(2));
  EXPECT_EQ(dev[0].allocation, 1.0);
  EXPECT_EQ(dev[0].payment, 1.0);
  EXPECT_GT(2.0 - dev[0].payment, 2.0 - out[0].payment);
}

TEST(SinglePrice, Examples) {
  Rng rng(1);
  auto out = run_single_price(1.0, 1, std::vector<double>{2.0, 1.5}, rng);
  EXPECT_EQ(out[0].payment, 1.5);
  EXPECT_EQ(out[1].allocation, 0.0);
  out = run_single_price(1.0, 2, std::vector<double>{2.0, 1.0}, rng);
  EXPECT_EQ(out.total_revenue, 2.0);
  EXPECT_EQ(payments(out), (std::vector<double>{1.0, 1.0}));
  out = run_single_price(3.0, 2, std::vector<double>{2.0, 1.5}, rng);
  EXPECT_EQ(out.total_revenue, 0.0);
}

TEST(PostedPrices, Examples) {
  EXPECT_EQ(run_posted_prices(std::vector<double>{2.0, 1.0}, std::vector<double>{2.0, 1.0}).total_revenue, 3.0);
  const auto out = run_posted_prices(std::vector<double>{2.0, 1.0}, std::vector<double>{1.0, 1.0});
  EXPECT_EQ(out.total_revenue, 1.0);
  EXPECT_EQ(out[0].allocation, 0.0);
  EXPECT_EQ(out[1].allocation, 1.0);
  EXPECT_THROW(run_posted_prices(std::vector<double>{2.0}, std::vector<double>{1.0, 1.0}), InputError);
}

TEST(PostedPrices, MonopolyPricesEarnSumOfMonopolyRevenues) {
  const AuctionInstance inst({UniformInterval{0.0, 1.0}, DiscretePmf{{1.0, 2.0}, {0.5, 0.5}},
                              DiscretePmf{{0.2, 0.9, 1.4}, {0.3, 0.3, 0.4}}, UniformInterval{0.5, 0.8}});
  double expected = 0.0;
  for (const auto& d : inst.bidders()) expected += monopoly(d).revenue;
  const auto stats = estimate_revenue(mechanisms::posted_monopoly(inst), inst, 100000, 17);
  EXPECT_NEAR(stats.mean, expected, 3.0 * stats.std_error);
}

TEST(VcgMedian, Examples) {
  Rng rng(1);
  auto out = run_vcg_median_reserve(kTwoPoints, std::vector<double>{2.0, 1.0}, rng);
  EXPECT_EQ(payments(out), (std::vector<double>{2.0, 1.0}));
  const AuctionInstance unif({UniformInterval{0.0, 1.0}, UniformInterval{0.0, 1.0}}, 1);
  out = run_vcg_median_reserve(unif, std::vector<double>{0.9, 0.6}, rng);
  EXPECT_EQ(out[0].payment, 0.6);
  EXPECT_EQ(out[1].allocation, 0.0);
  out = run_vcg_median_reserve(unif, std::vector<double>{0.4, 0.3}, rng);
  EXPECT_EQ(out.total_revenue, 0.0);
}

TEST(ScaledDpm, NoSharingNoLottery) {
  const AuctionInstance inst({PointMass{2.0}, PointMass{1.0}}, 2, std::vector<double>{1.0, 0.5});
  Rng rng(3);
  const auto out = run_scaled_dpm(PricingScheme({2.0, 1.0}), inst, std::vector<double>{2.0, 1.0}, rng);
  EXPECT_EQ(payments(out), (std::vector<double>{2.0, 0.5}));
  EXPECT_EQ(out[0].allocation, 1.0);
  EXPECT_EQ(out[1].allocation, 0.5);
  EXPECT_EQ(out[0].item, 0u);
  EXPECT_EQ(out[1].item, 1u);
}

TEST(ScaledDpm, SharedIndexUpgradeLottery) {
  const AuctionInstance inst({PointMass{2.0}, PointMass{2.0}}, 2, std::vector<double>{1.0, 0.5});
  const PricingScheme scheme({2.0, 1.0});
  int upgrades = 0;
  const int runs = 100000;
  for (int seed = 0; seed < runs; ++seed) {
    Rng rng(derive_seed(99, seed));
    const auto out = run_scaled_dpm(scheme, inst, std::vector<double>{2.0, 2.0}, rng);
    ASSERT_EQ(payments(out), (std::vector<double>{0.5, 0.5}));
    const bool first_lower = out[0].item == 1u;
    const auto& other = first_lower ? out[1] : out[0];
    ASSERT_EQ(first_lower ? out[0].allocation : out[1].allocation, 0.5);
    if (other.item) {
      ASSERT_EQ(*other.item, 0u);
      ASSERT_EQ(other.allocation, 1.0);
      ++upgrades;
    } else {
      ASSERT_EQ(other.allocation, 0.0);
    }
  }
  const double rate = static_cast<double>(upgrades) / runs;
  EXPECT_NEAR(rate, 0.5, 3.0 * std::sqrt(0.25 / runs));
}

TEST(ScaledDpm, UnitScalesMatchPlainDpm) {
  Rng rng(6);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 5);
    const auto c = random_case(rng, n);
    std::vector<ValueDistribution> ds(n, ValueDistribution(PointMass{1.0}));
    const AuctionInstance inst(ds, n, std::vector<double>(n, 1.0));
    const auto priority = random_priority(n, rng);
    const auto a = expected_scaled_dpm(PricingScheme(c.prices), inst, c.bids, priority);
    const auto b = run_dpm(PricingScheme(c.prices), c.bids, priority);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(a[i].allocation, b[i].allocation);
      EXPECT_EQ(a[i].payment, b[i].payment);
    }
  }
}

TEST(ScaledDpm, ExpectedScaleMatchesChargedIndex) {
  // Four equal bids all charged at the last index: three of them draw upgrade lotteries.
  const std::vector<double> scales{1.0, 0.6, 0.3, 0.2};
  const AuctionInstance inst(std::vector<ValueDistribution>(4, ValueDistribution(PointMass{1.0})), 4, scales);
  const PricingScheme scheme({3.0, 1.0, 1.0, 1.0});
  const std::vector<double> bids{3.0, 1.0, 1.0, 1.0};
  const auto trace = trace_dpm(scheme, bids, identity_priority(4));
  const int runs = 100000;
  std::vector<double> sum(4, 0.0), sum_sq(4, 0.0);
  for (int seed = 0; seed < runs; ++seed) {
    Rng rng(derive_seed(5, seed));
    const auto out = run_scaled_dpm(scheme, inst, bids, rng);
    for (std::size_t i = 0; i < 4; ++i) {
      sum[i] += out[i].allocation;
      sum_sq[i] += out[i].allocation * out[i].allocation;
    }
  }
  for (std::size_t r = 0; r < trace.winners; ++r) {
    const std::size_t who = trace.ranked[r];
    const double target = scales[trace.price_index[r]];
    const double mean = sum[who] / runs;
    const double var = sum_sq[who] / runs - mean * mean;
    EXPECT_NEAR(mean, target, 3.0 * std::sqrt(std::max(var, 1e-12) / runs) + 1e-12) << "bidder " << who;
  }
}

TEST(ScaledDpm, RequiresScales) {
  Rng rng(1);
  EXPECT_THROW(run_scaled_dpm(PricingScheme({2.0, 1.0}), kTwoPoints, std::vector<double>{2.0, 1.0}, rng),
               InputError);
}

TEST(TopItem, ExpectedRevenueOverReserveDraws) {
  const AuctionInstance inst({PointMass{4.0}, PointMass{2.0}}, 2, std::vector<double>{1.0, 0.5});
  const auto reserves = top_item_reserves(inst, 1);
  double expected = 0.0;
  for (const auto& r : reserves)
    expected += r.weight * run_top_item_at_reserve(r.price, inst, std::vector<double>{4.0, 2.0},
                                                   identity_priority(2))
                               .total_revenue;
  EXPECT_EQ(expected, 3.0);
  const auto stats = estimate_revenue(mechanisms::top_item(inst, 1), inst, 20000, 3);
  EXPECT_NEAR(stats.mean, 3.0, 3.0 * stats.std_error);
}

TEST(TopItem, BidsBelowReservesEarnNothing) {
  const AuctionInstance inst({PointMass{4.0}, PointMass{2.0}}, 2, std::vector<double>{1.0, 0.5});
  Rng rng(1);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(run_top_item_second_price(inst, 1, std::vector<double>{1.0, 0.5}, rng).total_revenue, 0.0);
}

TEST(TopItem, ReserveWeights) {
  const AuctionInstance inst({PointMass{4.0}, PointMass{3.0}, PointMass{2.0}, PointMass{1.0}});
  const auto r = top_item_reserves(inst, 2);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].weight, 0.5);
  EXPECT_EQ(r[1].weight, 0.25);
  EXPECT_EQ(r[2].weight, 0.25);
  EXPECT_EQ(r[0].weight + r[1].weight + r[2].weight, 1.0);
  EXPECT_EQ(r[2].price, 2.0);
  EXPECT_THROW(top_item_reserves(inst, 4), InputError);
}

TEST(Outcome, RevenueEqualsSumAndItemsWithinSupply) {
  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    const auto c = random_case(rng, n);
    const std::size_t m = 1 + uniform_index(rng, n);
    for (const auto& out : {run_dpm(PricingScheme(c.prices), c.bids, rng),
                            run_single_price(c.prices[0], m, c.bids, rng)}) {
      double total = 0.0;
      std::size_t items = 0;
      for (const auto& b : out.bidders) {
        total += b.payment;
        items += b.item.has_value();
      }
      EXPECT_NEAR(out.total_revenue, total, 1e-12);
      EXPECT_LE(items, n);
    }
    const auto single = run_single_price(c.prices[0], m, c.bids, rng);
    std::size_t items = 0;
    for (const auto& b : single.bidders) items += b.item.has_value();
    EXPECT_LE(items, m);
  }
}
