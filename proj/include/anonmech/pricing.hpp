#pragma once

// Randomized pricing constructions for the decreasing price mechanism.
//
// Bidders and blocks are 0-based here. Block b holds bidders
// [b*k, min((b+1)*k, n)); its lower boundary is the support low of its last
// member and its upper boundary is the lower boundary of block b-1. Drop
// budgets use the 1-based block number, rho_b = (k*(b+1))^-(1+1/k).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "anonmech/distributions.hpp"
#include "anonmech/errors.hpp"
#include "anonmech/mechanisms.hpp"
#include "anonmech/random.hpp"

namespace anonmech {

inline constexpr double kBoundSlack = 1e-12;

// Per-bidder rates of the k = 1 construction: q_i = Pr[v_i >= a_{i-1}],
// r_i = Pr[p_i = a_{i-1}], chain c_i = (1 - r_i) q_i and drop d_i = r_i (1 - q_i).
struct K1Rates {
  std::vector<double> q;
  std::vector<double> r;
  std::vector<double> c;
  std::vector<double> d;
};

inline void require_ambiguity(const AuctionInstance& inst, std::size_t k) {
  const std::size_t actual = ambiguity(inst);
  if (actual > k)
    throw InputError("instance is " + std::to_string(actual) + "-ambiguous, construction needs at most " +
                     std::to_string(k));
}

inline K1Rates k1_rates(const AuctionInstance& inst) {
  require_ambiguity(inst, 1);
  const std::size_t n = inst.size();
  K1Rates rates{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                std::vector<double>(n, 0.0)};
  for (std::size_t i = 1; i < n; ++i) {
    const double rank = static_cast<double>(i + 1);
    const double rho = 1.0 / (rank * rank);
    const double q = prob_at_least(inst.bidder(i), inst.low(i - 1));
    const double r = q >= 1.0 ? 1.0 : std::min(rho / (1.0 - q), 1.0);
    rates.q[i] = q;
    rates.r[i] = r;
    rates.c[i] = (1.0 - r) * q;
    rates.d[i] = r * (1.0 - q);
  }
  return rates;
}

// p_0 = a_0; p_i = a_{i-1} with probability r_i, else a_i.
inline PricingScheme k1_sample_scheme(const K1Rates& rates, const AuctionInstance& inst, Rng& rng) {
  const std::size_t n = inst.size();
  if (rates.r.size() != n) throw InputError("rates do not match the instance");
  std::vector<double> prices(n);
  prices[0] = inst.low(0);
  for (std::size_t i = 1; i < n; ++i)
    prices[i] = uniform01(rng) < rates.r[i] ? inst.low(i - 1) : inst.low(i);
  return PricingScheme(std::move(prices));
}

inline std::size_t block_count(std::size_t n, std::size_t k) { return (n + k - 1) / k; }

// Lowest support low in block b.
inline double block_floor(const AuctionInstance& inst, std::size_t k, std::size_t block) {
  return inst.low(std::min((block + 1) * k, inst.size()) - 1);
}

// Poisson-binomial law of how many members of the block have value at least
// the block's upper boundary; indexed 0..k. Block 0 is pinned to (1, 0, ..., 0).
inline std::vector<double> block_exceed_pmf(const AuctionInstance& inst, std::size_t k, std::size_t block) {
  if (k == 0) throw InputError("block size must be positive");
  if (block >= block_count(inst.size(), k)) throw InputError("block index out of range");
  std::vector<double> pmf(k + 1, 0.0);
  pmf[0] = 1.0;
  if (block == 0) return pmf;
  const double boundary = block_floor(inst, k, block - 1);
  const std::size_t end = std::min((block + 1) * k, inst.size());
  std::size_t seen = 0;
  for (std::size_t i = block * k; i < end; ++i, ++seen) {
    const double p = prob_at_least(inst.bidder(i), boundary);
    for (std::size_t j = seen + 1; j-- > 0;) {
      pmf[j + 1] += pmf[j] * p;
      pmf[j] *= 1.0 - p;
    }
  }
  return pmf;
}

struct ChainDrop {
  double chain = 0.0;
  double drop = 0.0;
};

// C = sum_{j<j'} R_j Q_j'  (more bidders clear the high price than were asked)
// D = sum_{j<j'} Q_j R_j'  (fewer bidders clear it than were asked)
inline ChainDrop chain_drop(std::span<const double> R, std::span<const double> Q) {
  if (R.size() != Q.size()) throw InputError("chain_drop: rows differ in length");
  ChainDrop out;
  for (std::size_t j = 0; j + 1 < R.size(); ++j)
    for (std::size_t jp = j + 1; jp < R.size(); ++jp) {
      out.chain += R[j] * Q[jp];
      out.drop += Q[j] * R[jp];
    }
  return out;
}

struct BlockRates {
  std::vector<double> Q;
  std::vector<double> R;
  double C = 0.0;
  double D = 0.0;
  double rho = 0.0;
};

inline double chain_bound(double rho, std::size_t k) {
  return 1.0 - std::pow(rho, static_cast<double>(k) / static_cast<double>(k + 1));
}

// Searches the two-point family R = (1 - R_s, .., R_s, ..) with
// R_s = min(1, rho / Qhat_{s-1}) over every s and keeps the smallest chain
// rate. The drop rate Qhat_{s-1} R_s never exceeds rho by construction.
inline BlockRates make_block_rates(std::span<const double> Q, double rho, std::size_t k) {
  if (Q.size() != k + 1) throw InputError("exceedance row must have k+1 entries");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InputError("rho must lie in [0, 1]");
  double total = 0.0;
  for (double q : Q) {
    if (!(q >= -kMassTolerance)) throw InputError("exceedance row has a negative entry");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("exceedance row does not sum to 1");

  std::vector<double> prefix(k + 1);
  double running = 0.0;
  for (std::size_t j = 0; j <= k; ++j) prefix[j] = running += Q[j];

  BlockRates best;
  best.Q.assign(Q.begin(), Q.end());
  best.rho = rho;
  bool found = false;
  for (std::size_t s = 0; s <= k; ++s) {
    std::vector<double> R(k + 1, 0.0);
    double rs = 1.0;
    if (s > 0 && prefix[s - 1] > 0.0) rs = std::min(1.0, rho / prefix[s - 1]);
    R[s] = rs;
    R[0] += 1.0 - rs;
    const auto cd = chain_drop(R, Q);
    if (cd.drop > rho + kBoundSlack) continue;
    if (!found || cd.chain < best.C) {
      found = true;
      best.R = std::move(R);
      best.C = cd.chain;
      best.D = cd.drop;
    }
  }
  if (!found || best.C > chain_bound(rho, k) + kBoundSlack)
    throw InvariantError("block rates: no two-point distribution meets the chain bound");
  return best;
}

inline std::vector<double> block_rates(std::span<const double> Q, double rho, std::size_t k) {
  return make_block_rates(Q, rho, k).R;
}

inline double block_rho(std::size_t k, std::size_t block) {
  const double kk = static_cast<double>(k);
  return std::pow(kk * static_cast<double>(block + 1), -(1.0 + 1.0 / kk));
}

struct PricedBlock {
  std::size_t begin = 0;
  std::size_t end = 0;
  double high = 0.0;  // upper boundary price
  double low = 0.0;   // lower boundary price
  BlockRates rates;
};

struct BlockPlan {
  std::size_t k = 1;
  std::size_t n = 0;
  std::vector<PricedBlock> blocks;
};

inline BlockPlan block_plan(const AuctionInstance& inst, std::size_t k) {
  if (k == 0) throw InputError("block size must be positive");
  require_ambiguity(inst, k);
  BlockPlan plan{k, inst.size(), {}};
  const std::size_t count = block_count(inst.size(), k);
  for (std::size_t b = 0; b < count; ++b) {
    PricedBlock pb;
    pb.begin = b * k;
    pb.end = std::min((b + 1) * k, inst.size());
    pb.low = block_floor(inst, k, b);
    if (b == 0) {
      pb.high = pb.low;
      pb.rates.Q.assign(k + 1, 0.0);
      pb.rates.Q[0] = 1.0;
      pb.rates.R = pb.rates.Q;
      pb.rates.rho = 0.0;
    } else {
      pb.high = block_floor(inst, k, b - 1);
      const auto Q = block_exceed_pmf(inst, k, b);
      pb.rates = make_block_rates(Q, block_rho(k, b), k);
    }
    plan.blocks.push_back(std::move(pb));
  }
  return plan;
}

// One draw per block: the number of high-priced slots j ~ R, then the first j
// members are priced at the upper boundary and the rest at the lower one.
inline PricingScheme sample_scheme(const BlockPlan& plan, Rng& rng) {
  std::vector<double> prices(plan.n);
  for (const auto& b : plan.blocks) {
    const double u = uniform01(rng);
    std::size_t high = 0;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < b.rates.R.size(); ++j) {
      cumulative += b.rates.R[j];
      high = j;
      if (u < cumulative) break;
    }
    for (std::size_t i = b.begin; i < b.end; ++i) prices[i] = (i - b.begin) < high ? b.high : b.low;
  }
  return PricingScheme(std::move(prices));
}

inline PricingScheme sample_block_scheme(const AuctionInstance& inst, std::size_t k, Rng& rng) {
  return sample_scheme(block_plan(inst, k), rng);
}

struct SinglePriceChoice {
  double price = 0.0;
  double guaranteed_revenue = 0.0;
};

// Monopoly price of the strongest member of the subset; its revenue over the
// subset is at least the average member's monopoly revenue.
inline SinglePriceChoice best_single_price(const AuctionInstance& inst, std::span<const std::size_t> subset) {
  if (subset.empty()) throw InputError("best_single_price needs a nonempty subset");
  SinglePriceChoice out;
  double best_revenue = -1.0;
  double total = 0.0;
  for (std::size_t i : subset) {
    const auto m = monopoly(inst.bidder(i));
    total += m.revenue;
    if (m.revenue > best_revenue) {
      best_revenue = m.revenue;
      out.price = m.price;
    }
  }
  out.guaranteed_revenue = total / static_cast<double>(subset.size());
  return out;
}

inline double harmonic_number(std::size_t m) {
  double h = 0.0;
  for (std::size_t i = m; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

// Price p_i (1-based i) drawn with probability 1 / (i H_m).
inline std::vector<WeightedPrice> harmonic_reserve_mixture(std::span<const double> medians) {
  if (medians.empty()) throw InputError("harmonic mixture needs at least one price");
  for (std::size_t i = 1; i < medians.size(); ++i)
    if (medians[i] > medians[i - 1]) throw InputError("harmonic mixture prices must be nonincreasing");
  const double h = harmonic_number(medians.size());
  std::vector<WeightedPrice> out(medians.size());
  for (std::size_t i = 0; i < medians.size(); ++i)
    out[i] = {medians[i], 1.0 / (static_cast<double>(i + 1) * h)};
  return out;
}

inline double k1_single_price_weight() { return 2.0 / 5.0; }

inline double general_single_price_weight() {
  constexpr double e2 = std::numbers::e * std::numbers::e;
  return 2.0 / (3.0 * e2 + 2.0);
}

inline double approximation_factor(std::size_t k) {
  constexpr double e2 = std::numbers::e * std::numbers::e;
  return k <= 1 ? 5.0 : (3.0 * e2 + 2.0) * static_cast<double>(k);
}

// Two-branch randomized DPM: a constant scheme at the best single price for
// the top 2k bidders, or the k = 1 / block construction.
class MixedScheme {
 public:
  MixedScheme(const AuctionInstance& inst, std::size_t k) : inst_(inst), k_(std::max<std::size_t>(k, 1)) {
    require_ambiguity(inst, k_);
    std::vector<std::size_t> top(std::min(2 * k_, inst.size()));
    for (std::size_t i = 0; i < top.size(); ++i) top[i] = i;
    single_ = best_single_price(inst, top);
    if (k_ == 1) {
      single_weight_ = k1_single_price_weight();
      construction_ = k1_rates(inst);
    } else {
      single_weight_ = general_single_price_weight();
      construction_ = block_plan(inst, k_);
    }
  }

  std::size_t k() const noexcept { return k_; }
  double single_price() const noexcept { return single_.price; }
  double single_price_weight() const noexcept { return single_weight_; }
  double construction_weight() const noexcept { return 1.0 - single_weight_; }
  const std::variant<K1Rates, BlockPlan>& construction() const noexcept { return construction_; }

  PricingScheme sample_construction(Rng& rng) const {
    if (const auto* rates = std::get_if<K1Rates>(&construction_)) return k1_sample_scheme(*rates, inst_, rng);
    return sample_scheme(std::get<BlockPlan>(construction_), rng);
  }

  PricingScheme sample(Rng& rng) const {
    if (uniform01(rng) < single_weight_) return PricingScheme::constant(single_.price, inst_.size());
    return sample_construction(rng);
  }

 private:
  AuctionInstance inst_;
  std::size_t k_;
  SinglePriceChoice single_;
  double single_weight_ = 0.0;
  std::variant<K1Rates, BlockPlan> construction_;
};

inline MixedScheme mixed_mechanism(const AuctionInstance& inst, std::size_t k) { return MixedScheme(inst, k); }

}  // namespace anonmech
