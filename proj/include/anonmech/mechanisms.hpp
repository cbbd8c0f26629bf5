#pragma once

// Executable auction mechanisms. Every function takes bids indexed by bidder
// identity and returns per-bidder outcomes in the same indexing.
//
// Randomized tie-breaking is expressed as a priority permutation: among equal
// bids, the bidder with the smaller priority value ranks higher. The Rng
// overloads draw a uniformly random priority so tie-breaking stays anonymous
// in distribution; the priority overloads let the verifier enumerate every
// tie-break order exactly.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anonmech/distributions.hpp"
#include "anonmech/errors.hpp"
#include "anonmech/random.hpp"

namespace anonmech {

using BidProfile = std::vector<double>;

// Nonincreasing price vector p_1 >= ... >= p_n.
class PricingScheme {
 public:
  PricingScheme() = default;
  explicit PricingScheme(std::vector<double> prices) : prices_(std::move(prices)) {
    for (std::size_t i = 0; i < prices_.size(); ++i) {
      if (!(prices_[i] >= 0.0)) throw InputError("prices must be nonnegative");
      if (i > 0 && prices_[i] > prices_[i - 1]) throw InputError("prices must be nonincreasing");
    }
  }

  static PricingScheme constant(double price, std::size_t n) {
    return PricingScheme(std::vector<double>(n, price));
  }

  std::size_t size() const noexcept { return prices_.size(); }
  double operator[](std::size_t i) const { return prices_[i]; }
  const std::vector<double>& prices() const noexcept { return prices_; }

  friend bool operator==(const PricingScheme&, const PricingScheme&) = default;

 private:
  std::vector<double> prices_;
};

struct BidderOutcome {
  double allocation = 0.0;  // scale received; 1 is a full item
  std::optional<std::size_t> item;
  double payment = 0.0;
};

struct Outcome {
  std::vector<BidderOutcome> bidders;
  double total_revenue = 0.0;

  explicit Outcome(std::size_t n = 0) : bidders(n) {}

  std::size_t size() const noexcept { return bidders.size(); }
  const BidderOutcome& operator[](std::size_t i) const { return bidders[i]; }

  void finalize() {
    total_revenue = 0.0;
    for (const auto& b : bidders) total_revenue += b.payment;
  }
};

namespace detail {

inline void check_bids(std::span<const double> bids) {
  for (double b : bids)
    if (!(b >= 0.0)) throw InputError("bids must be nonnegative");
}

}  // namespace detail

inline std::vector<std::size_t> identity_priority(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

inline std::vector<std::size_t> random_priority(std::size_t n, Rng& rng) {
  auto p = identity_priority(n);
  shuffle(std::span<std::size_t>(p), rng);
  return p;
}

// Bidder identities in decreasing bid order.
inline std::vector<std::size_t> rank_bidders(std::span<const double> bids,
                                             std::span<const std::size_t> priority) {
  if (priority.size() != bids.size()) throw InputError("priority length must equal bid count");
  auto ranked = identity_priority(bids.size());
  std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    if (bids[a] != bids[b]) return bids[a] > bids[b];
    return priority[a] < priority[b];
  });
  return ranked;
}

// Rank-level trace of one decreasing price mechanism run.
struct DpmTrace {
  std::vector<std::size_t> ranked;       // identities by rank
  std::size_t winners = 0;               // ranks [0, winners) are allocated
  std::vector<std::size_t> price_index;  // per winning rank: the charged price index
};

// Winners are the longest prefix of ranks meeting their own price; rank i pays
// p_j for the smallest j >= i at which exactly j+1 bids (0-based) meet p_j.
inline DpmTrace trace_dpm(const PricingScheme& scheme, std::span<const double> bids,
                          std::span<const std::size_t> priority) {
  const std::size_t n = bids.size();
  if (scheme.size() != n) throw InputError("pricing scheme length must equal bid count");
  detail::check_bids(bids);

  DpmTrace t;
  t.ranked = rank_bidders(bids, priority);
  while (t.winners < n && bids[t.ranked[t.winners]] >= scheme[t.winners]) ++t.winners;
  if (t.winners == 0) return t;

  // meeting[j] = #{l : b_l >= p_j}; nondecreasing in j because prices fall.
  std::vector<std::size_t> meeting(n);
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    while (count < n && bids[t.ranked[count]] >= scheme[j]) ++count;
    meeting[j] = count;
  }
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> next_exact(n + 1, kNone);
  for (std::size_t j = n; j-- > 0;) next_exact[j] = meeting[j] == j + 1 ? j : next_exact[j + 1];

  t.price_index.resize(t.winners);
  for (std::size_t i = 0; i < t.winners; ++i) {
    if (next_exact[i] == kNone) throw InvariantError("decreasing price mechanism: no exact price index");
    t.price_index[i] = next_exact[i];
  }
  return t;
}

inline Outcome run_dpm(const PricingScheme& scheme, std::span<const double> bids,
                       std::span<const std::size_t> priority) {
  const auto t = trace_dpm(scheme, bids, priority);
  Outcome out(bids.size());
  for (std::size_t i = 0; i < t.winners; ++i) {
    auto& b = out.bidders[t.ranked[i]];
    b.allocation = 1.0;
    b.item = i;
    b.payment = scheme[t.price_index[i]];
  }
  out.finalize();
  return out;
}

inline Outcome run_dpm(const PricingScheme& scheme, std::span<const double> bids, Rng& rng) {
  return run_dpm(scheme, bids, random_priority(bids.size(), rng));
}

// Rank i is offered an item at p_i with no drop and no chain correction. Not DSIC.
inline Outcome run_dpm_nondsic(const PricingScheme& scheme, std::span<const double> bids,
                               std::span<const std::size_t> priority) {
  if (scheme.size() != bids.size()) throw InputError("pricing scheme length must equal bid count");
  detail::check_bids(bids);
  const auto ranked = rank_bidders(bids, priority);
  Outcome out(bids.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (bids[ranked[i]] < scheme[i]) continue;
    auto& b = out.bidders[ranked[i]];
    b.allocation = 1.0;
    b.item = i;
    b.payment = scheme[i];
  }
  out.finalize();
  return out;
}

inline Outcome run_dpm_nondsic(const PricingScheme& scheme, std::span<const double> bids, Rng& rng) {
  return run_dpm_nondsic(scheme, bids, random_priority(bids.size(), rng));
}

// VCG with a single reserve: the top min(m, #{b >= p}) bids win and pay
// max(p, (m+1)-st highest bid), the latter 0 when absent.
inline Outcome run_single_price(double price, std::size_t units, std::span<const double> bids,
                                std::span<const std::size_t> priority) {
  if (!(price >= 0.0)) throw InputError("single price must be nonnegative");
  if (units == 0) throw InputError("units must be positive");
  detail::check_bids(bids);
  const auto ranked = rank_bidders(bids, priority);
  const double competing = units < ranked.size() ? bids[ranked[units]] : 0.0;
  const double charge = std::max(price, competing);
  Outcome out(bids.size());
  for (std::size_t i = 0; i < std::min(units, ranked.size()); ++i) {
    if (bids[ranked[i]] < price) break;
    auto& b = out.bidders[ranked[i]];
    b.allocation = 1.0;
    b.item = i;
    b.payment = charge;
  }
  out.finalize();
  return out;
}

inline Outcome run_single_price(double price, std::size_t units, std::span<const double> bids, Rng& rng) {
  return run_single_price(price, units, bids, random_priority(bids.size(), rng));
}

// Non-anonymous benchmark: bidder i faces prices[i] regardless of rank.
inline Outcome run_posted_prices(std::span<const double> prices, std::span<const double> bids) {
  if (prices.size() != bids.size()) throw InputError("posted prices length must equal bid count");
  detail::check_bids(bids);
  Outcome out(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (bids[i] < prices[i]) continue;
    out.bidders[i].allocation = 1.0;
    out.bidders[i].item = i;
    out.bidders[i].payment = prices[i];
  }
  out.finalize();
  return out;
}

// VCG with each bidder's median as a personalized reserve.
inline Outcome run_vcg_median_reserve(const AuctionInstance& inst, std::span<const double> bids,
                                      std::span<const std::size_t> priority) {
  if (bids.size() != inst.size()) throw InputError("bid count must equal instance size");
  detail::check_bids(bids);
  std::vector<double> reserve(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) reserve[i] = median(inst.bidder(i));

  std::vector<std::size_t> eligible;
  for (std::size_t i : rank_bidders(bids, priority))
    if (bids[i] >= reserve[i]) eligible.push_back(i);
  const std::size_t m = inst.units();
  const double competing = m < eligible.size() ? bids[eligible[m]] : 0.0;

  Outcome out(bids.size());
  for (std::size_t r = 0; r < std::min(m, eligible.size()); ++r) {
    auto& b = out.bidders[eligible[r]];
    b.allocation = 1.0;
    b.item = r;
    b.payment = std::max(reserve[eligible[r]], competing);
  }
  out.finalize();
  return out;
}

inline Outcome run_vcg_median_reserve(const AuctionInstance& inst, std::span<const double> bids, Rng& rng) {
  return run_vcg_median_reserve(inst, bids, random_priority(bids.size(), rng));
}

namespace detail {

// Physical item assignment for the scaled DPM. Winners sharing price index j:
// the first takes item j, each further one reserves the lowest unused item
// j' < j. `offer` decides whether a reserved upgrade is actually delivered.
template <typename Offer>
Outcome scaled_dpm_impl(const PricingScheme& scheme, const AuctionInstance& inst,
                        std::span<const double> bids, std::span<const std::size_t> priority,
                        Offer&& offer) {
  if (!inst.has_scales()) throw InputError("scaled DPM requires position scales");
  if (bids.size() != inst.size()) throw InputError("bid count must equal instance size");
  const auto t = trace_dpm(scheme, bids, priority);
  const std::size_t n = bids.size();
  std::vector<bool> used(n, false);
  Outcome out(n);
  for (std::size_t i = 0; i < t.winners; ++i) {
    const std::size_t j = t.price_index[i];
    const double sj = inst.scale(j);
    auto& b = out.bidders[t.ranked[i]];
    b.payment = sj * scheme[j];
    if (!used[j]) {
      used[j] = true;
      b.item = j;
      b.allocation = sj;
      continue;
    }
    std::size_t up = 0;
    while (up < j && used[up]) ++up;
    if (up == j) throw InvariantError("scaled DPM: no free item above the charged index");
    used[up] = true;
    const double s_up = inst.scale(up);
    const double probability = s_up > 0.0 ? sj / s_up : 0.0;
    const auto [delivered, allocation] = offer(probability, s_up);
    if (delivered) b.item = up;
    b.allocation = allocation;
  }
  out.finalize();
  return out;
}

}  // namespace detail

// DPM for position auctions: a winner charged index j pays s_j * p_j and
// receives scale s_j in expectation.
inline Outcome run_scaled_dpm(const PricingScheme& scheme, const AuctionInstance& inst,
                              std::span<const double> bids, Rng& rng) {
  const auto priority = random_priority(bids.size(), rng);
  return detail::scaled_dpm_impl(scheme, inst, bids, priority, [&rng](double prob, double s_up) {
    const bool hit = uniform01(rng) < prob;
    return std::pair{hit, hit ? s_up : 0.0};
  });
}

// Same assignment with every downgrade lottery replaced by its expectation.
inline Outcome expected_scaled_dpm(const PricingScheme& scheme, const AuctionInstance& inst,
                                   std::span<const double> bids,
                                   std::span<const std::size_t> priority) {
  return detail::scaled_dpm_impl(scheme, inst, bids, priority, [](double prob, double s_up) {
    return std::pair{true, prob * s_up};
  });
}

struct WeightedPrice {
  double price = 0.0;
  double weight = 0.0;
};

// Reserve lottery for the top item: bidder 0's monopoly price with
// probability 1/2, bidders 1..k's with probability 1/(2k) each.
inline std::vector<WeightedPrice> top_item_reserves(const AuctionInstance& inst, std::size_t k) {
  if (inst.size() < k + 1) throw InputError("top-item second price needs at least k+1 bidders");
  std::vector<WeightedPrice> out;
  out.push_back({monopoly(inst.bidder(0)).price, k == 0 ? 1.0 : 0.5});
  for (std::size_t i = 1; i <= k; ++i)
    out.push_back({monopoly(inst.bidder(i)).price, 0.5 / static_cast<double>(k)});
  return out;
}

// Sells item 0 to the highest bidder if she meets the reserve, at
// s_1 * max(reserve, second-highest bid).
inline Outcome run_top_item_at_reserve(double reserve, const AuctionInstance& inst,
                                       std::span<const double> bids,
                                       std::span<const std::size_t> priority) {
  if (bids.size() != inst.size()) throw InputError("bid count must equal instance size");
  detail::check_bids(bids);
  const auto ranked = rank_bidders(bids, priority);
  Outcome out(bids.size());
  if (bids[ranked[0]] >= reserve) {
    const double second = ranked.size() > 1 ? bids[ranked[1]] : 0.0;
    const double s1 = inst.scale(0);
    auto& b = out.bidders[ranked[0]];
    b.allocation = s1;
    b.item = 0;
    b.payment = s1 * std::max(reserve, second);
  }
  out.finalize();
  return out;
}

inline Outcome run_top_item_second_price(const AuctionInstance& inst, std::size_t k,
                                         std::span<const double> bids, Rng& rng) {
  const auto reserves = top_item_reserves(inst, k);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  double reserve = reserves.back().price;
  for (const auto& r : reserves) {
    cumulative += r.weight;
    if (u < cumulative) {
      reserve = r.price;
      break;
    }
  }
  return run_top_item_at_reserve(reserve, inst, bids, random_priority(bids.size(), rng));
}

}  // namespace anonmech
