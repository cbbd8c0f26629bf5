#pragma once

// Optimal anonymous digital-goods auction. The seller relabels bidders at
// random, so the other bids only reveal a posterior over which prior the
// remaining bidder was drawn from; that posterior is a ratio of matrix
// permanents over prior likelihoods. Each bidder is offered the
// revenue-maximizing price for her posterior, which never depends on her own
// bid.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "anonmech/distributions.hpp"
#include "anonmech/errors.hpp"
#include "anonmech/mechanisms.hpp"

namespace anonmech {

inline constexpr std::size_t kMaxPermanentSize = 20;

class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  SquareMatrix(std::size_t n, std::vector<double> row_major) : n_(n), data_(std::move(row_major)) {
    if (data_.size() != n * n) throw InputError("matrix data does not match its dimension");
  }

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

namespace detail {

// Kuhn's augmenting paths over the nonzero pattern.
inline bool has_perfect_matching(const SquareMatrix& m) {
  const std::size_t n = m.size();
  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(n, kFree);
  std::vector<bool> seen;
  std::function<bool(std::size_t)> augment = [&](std::size_t row) {
    for (std::size_t c = 0; c < n; ++c) {
      if (m(row, c) == 0.0 || seen[c]) continue;
      seen[c] = true;
      if (owner[c] == kFree || augment(owner[c])) {
        owner[c] = row;
        return true;
      }
    }
    return false;
  };
  for (std::size_t r = 0; r < n; ++r) {
    seen.assign(n, false);
    if (!augment(r)) return false;
  }
  return true;
}

}  // namespace detail

// Ryser inclusion-exclusion over column subsets visited in Gray-code order,
// so each step adds or removes one column from the running row sums.
// Nonnegative matrices without a perfect matching on their support return an
// exact 0 instead of cancellation noise.
inline double permanent(const SquareMatrix& m) {
  const std::size_t n = m.size();
  if (n > kMaxPermanentSize)
    throw SizeError("permanent: dimension " + std::to_string(n) + " exceeds " +
                    std::to_string(kMaxPermanentSize));
  if (n == 0) return 1.0;

  bool nonnegative = true;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) nonnegative = nonnegative && m(r, c) >= 0.0;
  if (nonnegative && !detail::has_perfect_matching(m)) return 0.0;

  std::vector<double> row_sum(n, 0.0);
  double total = 0.0;
  std::uint64_t gray = 0;
  const std::uint64_t steps = std::uint64_t{1} << n;
  for (std::uint64_t g = 1; g < steps; ++g) {
    const auto col = static_cast<std::size_t>(std::countr_zero(g));
    const std::uint64_t bit = std::uint64_t{1} << col;
    gray ^= bit;
    const double sign_col = (gray & bit) ? 1.0 : -1.0;
    double product = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      row_sum[r] += sign_col * m(r, col);
      product *= row_sum[r];
    }
    total += (std::popcount(gray) & 1) ? -product : product;
  }
  const double result = (n & 1) ? -total : total;
  return nonnegative ? std::max(result, 0.0) : result;
}

struct PosteriorPmf {
  std::vector<double> support;  // increasing
  std::vector<double> masses;

  std::size_t size() const noexcept { return support.size(); }
};

inline std::vector<double> union_support(const AuctionInstance& inst) {
  std::vector<double> atoms;
  for (const auto& d : inst.bidders()) {
    const auto a = d.atoms();
    atoms.insert(atoms.end(), a.begin(), a.end());
  }
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return atoms;
}

// Posterior over the missing bidder's value given the other n-1 values: the
// mass at x is proportional to perm[f_l(value_j)] with x appended as the last row.
inline PosteriorPmf posterior_pmf(const AuctionInstance& inst, std::span<const double> observed,
                                  std::span<const double> candidate_support) {
  const std::size_t n = inst.size();
  if (observed.size() + 1 != n) throw InputError("posterior needs exactly n-1 observed values");
  if (n > kMaxPermanentSize) throw SizeError("posterior: instance too large for the permanent");
  for (const auto& d : inst.bidders())
    if (!d.is_discrete()) throw InputError("posterior requires discrete priors");

  PosteriorPmf h;
  h.support.assign(candidate_support.begin(), candidate_support.end());
  std::sort(h.support.begin(), h.support.end());
  h.support.erase(std::unique(h.support.begin(), h.support.end()), h.support.end());
  if (h.support.empty()) throw InputError("posterior needs a nonempty candidate support");

  SquareMatrix m(n);
  for (std::size_t j = 0; j + 1 < n; ++j)
    for (std::size_t l = 0; l < n; ++l) m(j, l) = inst.bidder(l).mass_at(observed[j]);

  h.masses.resize(h.support.size());
  double total = 0.0;
  for (std::size_t s = 0; s < h.support.size(); ++s) {
    for (std::size_t l = 0; l < n; ++l) m(n - 1, l) = inst.bidder(l).mass_at(h.support[s]);
    h.masses[s] = permanent(m);
    total += h.masses[s];
  }
  if (!(total > 0.0)) throw InconsistentEvidence("observed values have zero likelihood under every matching");
  for (double& x : h.masses) x /= total;
  return h;
}

inline MonopolyPrice optimal_price_from_pmf(const PosteriorPmf& h) {
  if (h.support.empty()) throw InputError("optimal price of an empty posterior");
  std::vector<double> revenue(h.size());
  double tail = 0.0;
  double best = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    tail += h.masses[i];
    revenue[i] = h.support[i] * std::min(tail, 1.0);
    best = std::max(best, revenue[i]);
  }
  const double slack = kTieTolerance * std::max(1.0, best);
  for (std::size_t i = 0; i < h.size(); ++i)
    if (revenue[i] >= best - slack) return {h.support[i], revenue[i]};
  return {h.support.front(), revenue.front()};
}

// Discrete analog v_j - (1 - H(v_j)) (v_{j+1} - v_j) / h_j; equals v at the top atom.
inline double virtual_value(const PosteriorPmf& h, double v) {
  auto it = std::lower_bound(h.support.begin(), h.support.end(), v);
  if (it == h.support.end() || *it != v) throw InputError("virtual value: v is not a support atom");
  const auto j = static_cast<std::size_t>(it - h.support.begin());
  double cdf = 0.0;
  for (std::size_t i = 0; i <= j; ++i) cdf += h.masses[i];
  if (j + 1 == h.size()) return v;
  if (!(h.masses[j] > 0.0)) throw InputError("virtual value: atom has zero mass");
  return v - std::max(0.0, 1.0 - cdf) * (h.support[j + 1] - v) / h.masses[j];
}

// phi(v) = v - (1 - H(v)) / h(v) = 2v - hi for a uniform prior.
inline double virtual_value(const UniformInterval& u, double v) {
  if (v < u.lo || v > u.hi) throw InputError("virtual value: v outside the support");
  return 2.0 * v - u.hi;
}

inline double virtual_value(const PointMass& p, double v) {
  if (v != p.value) throw InputError("virtual value: v outside the support");
  return v;
}

// Posts to each bidder the optimal price for her posterior given the others'
// bids. Profiles with zero likelihood leave that bidder unserved.
inline Outcome run_optimal_anonymous_digital(const AuctionInstance& inst, std::span<const double> bids) {
  const std::size_t n = inst.size();
  if (bids.size() != n) throw InputError("bid count must equal instance size");
  if (inst.units() != n) throw InputError("optimal anonymous auction is implemented for digital goods only");
  detail::check_bids(bids);
  const auto support = union_support(inst);
  Outcome out(n);
  std::vector<double> others;
  others.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(bids[j]);
    PosteriorPmf h;
    try {
      h = posterior_pmf(inst, others, support);
    } catch (const InconsistentEvidence&) {
      continue;
    }
    const double price = optimal_price_from_pmf(h).price;
    if (bids[i] >= price) {
      out.bidders[i].allocation = 1.0;
      out.bidders[i].item = i;
      out.bidders[i].payment = price;
    }
  }
  out.finalize();
  return out;
}

// ---------------------------------------------------------------------------
// Nested-uniform family: 2^i L agents with U[0, 2^-i], i = 0..n-1.

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// a (a-1) ... (a-b+1); zero once a factor is nonpositive.
inline BigInt falling_factorial(std::int64_t a, std::int64_t b) {
  if (b < 0) throw InputError("falling factorial with negative length");
  if (b == 0) return 1;
  if (a - b + 1 <= 0) return 0;
  BigInt out = 1;
  for (std::int64_t f = a; f > a - b; --f) out *= f;
  return out;
}

inline std::int64_t nested_population(std::int64_t levels, std::int64_t L) {
  return ((std::int64_t{1} << levels) - 1) * L;
}

// Number of ways to match agents to priors given cumulative counts
// b'_i = #{values > 2^-i}, i = 0..n, with b'_0 = 0 and b'_n = N.
inline BigInt nested_match_count(std::span<const std::int64_t> b_prime, std::int64_t L, std::int64_t levels) {
  if (levels < 1 || L < 1) throw InputError("nested instance needs positive levels and L");
  if (b_prime.size() != static_cast<std::size_t>(levels) + 1)
    throw InputError("nested match count needs n+1 cumulative counts");
  if (b_prime.front() != 0) throw InputError("cumulative counts must start at 0");
  if (b_prime.back() != nested_population(levels, L)) throw InputError("cumulative counts must end at N");
  for (std::size_t i = 1; i < b_prime.size(); ++i)
    if (b_prime[i] < b_prime[i - 1]) throw InputError("cumulative counts must be nondecreasing");
  BigInt count = 1;
  for (std::int64_t i = 0; i < levels; ++i) {
    const std::int64_t slots = ((std::int64_t{2} << i) - 1) * L - b_prime[i];
    count *= falling_factorial(slots, b_prime[i + 1] - b_prime[i]);
    if (count == 0) break;
  }
  return count;
}

// Posterior density ratio between a value one level above and one level below
// 2^-t: ((2^t - 1) L - b) / ((2^{t+1} - 1) L - b).
inline Rational nested_density_ratio(std::int64_t L, std::int64_t levels, std::int64_t t, std::int64_t b_t) {
  if (t < 1 || t > levels - 1) throw InputError("level t must lie in [1, n-1]");
  if (b_t < 0) throw InputError("count must be nonnegative");
  const std::int64_t num = ((std::int64_t{1} << t) - 1) * L - b_t;
  const std::int64_t den = ((std::int64_t{2} << t) - 1) * L - b_t;
  if (den == 0) throw InputError("density ratio has a zero denominator");
  return Rational(num, den);
}

}  // namespace anonmech
