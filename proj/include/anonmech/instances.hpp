#pragma once

// Named instance families used by the benchmarks and the CLI generator.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "anonmech/distributions.hpp"
#include "anonmech/errors.hpp"
#include "anonmech/random.hpp"

namespace anonmech::instances {

// Bidder i (1-based) has the known value 1/i.
inline AuctionInstance harmonic(std::size_t n) {
  if (n == 0) throw InputError("harmonic instance needs n >= 1");
  std::vector<ValueDistribution> bidders;
  for (std::size_t i = 1; i <= n; ++i) bidders.emplace_back(PointMass{1.0 / static_cast<double>(i)});
  return AuctionInstance(std::move(bidders));
}

// Bidder i (1-based) values 1/eps^i with probability delta * eps^i, else 0.
inline AuctionInstance geometric_delta(double eps, double delta, std::size_t n) {
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta <= 1.0)) throw InputError("delta must lie in (0, 1]");
  if (n == 0) throw InputError("geometric instance needs n >= 1");
  std::vector<ValueDistribution> bidders;
  for (std::size_t i = 1; i <= n; ++i) {
    const double p = delta * std::pow(eps, static_cast<double>(i));
    bidders.emplace_back(DiscretePmf{{0.0, std::pow(1.0 / eps, static_cast<double>(i))}, {1.0 - p, p}});
  }
  return AuctionInstance(std::move(bidders));
}

inline AuctionInstance geometric(double eps, std::size_t n) { return geometric_delta(eps, 1.0, n); }

// 2^i L agents with U[0, 2^-i] for i = 0..levels-1.
inline AuctionInstance nested_uniform(std::size_t levels, std::size_t L) {
  if (levels == 0 || L == 0) throw InputError("nested-uniform instance needs levels >= 1 and L >= 1");
  std::vector<ValueDistribution> bidders;
  for (std::size_t i = 0; i < levels; ++i) {
    const double hi = std::ldexp(1.0, -static_cast<int>(i));
    for (std::size_t c = 0; c < (std::size_t{1} << i) * L; ++c) bidders.emplace_back(UniformInterval{0.0, hi});
  }
  return AuctionInstance(std::move(bidders));
}

// Supports [a_i, b_i] with a_i falling geometrically and b_i uniform in
// (a_i, a_{i-1-k}), so the result is at most k-ambiguous. Each bidder puts
// mass 1/3 on a_i, on a uniform point inside the support, and on b_i.
inline AuctionInstance random_k_ambiguous(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (n == 0) throw InputError("random instance needs n >= 1");
  Rng rng(derive_seed(seed, 0xa11b));
  auto open_unit = [&rng] {
    double u = 0.0;
    while (u == 0.0) u = uniform01(rng);
    return u;
  };
  std::vector<double> lows(n);
  lows[0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) lows[i] = lows[i - 1] * (0.5 + 0.4 * open_unit());
  std::vector<ValueDistribution> bidders;
  constexpr double third = 1.0 / 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cap = i >= k + 1 ? lows[i - 1 - k] : 2.0 * lows[0];
    const double hi = lows[i] + open_unit() * (cap - lows[i]);
    const double mid = lows[i] + open_unit() * (hi - lows[i]);
    bidders.emplace_back(DiscretePmf{{lows[i], mid, hi}, {third, third, 1.0 - 2.0 * third}});
  }
  return AuctionInstance(std::move(bidders));
}

// s_j = 2^{-j} for 0-based j.
inline std::vector<double> geometric_scales(std::size_t m) {
  std::vector<double> s(m);
  for (std::size_t j = 0; j < m; ++j) s[j] = std::ldexp(1.0, -static_cast<int>(j));
  return s;
}

inline AuctionInstance with_scales(const AuctionInstance& inst, std::vector<double> scales) {
  const std::size_t m = scales.size();
  return AuctionInstance(inst.bidders(), m, std::move(scales));
}

}  // namespace anonmech::instances
