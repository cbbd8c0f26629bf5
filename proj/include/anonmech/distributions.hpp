#pragma once

// Bidder value priors and the auction instance they live in.
//
// "Value meets price" is the weak inequality v >= p everywhere in this
// library: atoms sitting exactly at a price count as meeting it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "anonmech/errors.hpp"
#include "anonmech/random.hpp"

namespace anonmech {

inline constexpr double kMassTolerance = 1e-12;

// Relative slack used when comparing revenues for ties.
inline constexpr double kTieTolerance = 1e-12;

struct PointMass {
  double value = 0.0;
};

struct DiscretePmf {
  std::vector<double> values;  // strictly increasing
  std::vector<double> masses;  // positive, sum to 1
};

struct UniformInterval {
  double lo = 0.0;
  double hi = 1.0;
};

class ValueDistribution {
 public:
  using Variant = std::variant<PointMass, DiscretePmf, UniformInterval>;

  ValueDistribution(PointMass p) : dist_(p) {
    if (!(p.value >= 0.0) || !std::isfinite(p.value))
      throw InputError("point mass value must be a finite nonnegative real");
  }

  ValueDistribution(DiscretePmf d) {
    if (d.values.empty()) throw InputError("discrete pmf needs at least one atom");
    if (d.values.size() != d.masses.size())
      throw InputError("discrete pmf: values and masses differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      if (!(d.values[i] >= 0.0) || !std::isfinite(d.values[i]))
        throw InputError("discrete pmf: values must be finite and nonnegative");
      if (i > 0 && !(d.values[i] > d.values[i - 1]))
        throw InputError("discrete pmf: values must be strictly increasing");
      if (!(d.masses[i] > 0.0)) throw InputError("discrete pmf: masses must be positive");
      total += d.masses[i];
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      throw InputError("discrete pmf: masses sum to " + std::to_string(total) + ", not 1");
    // Upper tails summed from the top so prob_at_least and monopoly agree bit for bit.
    tail_.assign(d.values.size() + 1, 0.0);
    for (std::size_t i = d.values.size(); i-- > 0;)
      tail_[i] = std::min(1.0, tail_[i + 1] + d.masses[i]);
    dist_ = std::move(d);
  }

  ValueDistribution(UniformInterval u) : dist_(u) {
    if (!(u.lo >= 0.0) || !std::isfinite(u.hi) || !(u.lo < u.hi))
      throw InputError("uniform interval needs 0 <= lo < hi");
  }

  const Variant& variant() const noexcept { return dist_; }
  bool is_discrete() const noexcept { return !std::holds_alternative<UniformInterval>(dist_); }

  double support_low() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PointMass>) return d.value;
          else if constexpr (std::is_same_v<T, DiscretePmf>) return d.values.front();
          else return d.lo;
        },
        dist_);
  }

  double support_high() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PointMass>) return d.value;
          else if constexpr (std::is_same_v<T, DiscretePmf>) return d.values.back();
          else return d.hi;
        },
        dist_);
  }

  // Atoms of a discrete prior (a point mass is a single atom).
  std::vector<double> atoms() const {
    if (const auto* p = std::get_if<PointMass>(&dist_)) return {p->value};
    if (const auto* d = std::get_if<DiscretePmf>(&dist_)) return d->values;
    return {};
  }

  // Probability mass at exactly v; zero for continuous priors.
  double mass_at(double v) const {
    if (const auto* p = std::get_if<PointMass>(&dist_)) return p->value == v ? 1.0 : 0.0;
    if (const auto* d = std::get_if<DiscretePmf>(&dist_)) {
      auto it = std::lower_bound(d->values.begin(), d->values.end(), v);
      if (it != d->values.end() && *it == v) return d->masses[it - d->values.begin()];
    }
    return 0.0;
  }

  // Density of a continuous prior; zero for discrete ones.
  double density(double v) const {
    if (const auto* u = std::get_if<UniformInterval>(&dist_))
      return (v >= u->lo && v <= u->hi) ? 1.0 / (u->hi - u->lo) : 0.0;
    return 0.0;
  }

  // Pr[v >= p].
  double prob_at_least(double p) const {
    if (const auto* pm = std::get_if<PointMass>(&dist_)) return pm->value >= p ? 1.0 : 0.0;
    if (const auto* d = std::get_if<DiscretePmf>(&dist_)) {
      auto it = std::lower_bound(d->values.begin(), d->values.end(), p);
      return tail_[static_cast<std::size_t>(it - d->values.begin())];
    }
    const auto& u = std::get<UniformInterval>(dist_);
    if (p <= u.lo) return 1.0;
    if (p >= u.hi) return 0.0;
    return (u.hi - p) / (u.hi - u.lo);
  }

  // Pr[v <= x].
  double cdf(double x) const {
    if (const auto* pm = std::get_if<PointMass>(&dist_)) return x >= pm->value ? 1.0 : 0.0;
    if (const auto* d = std::get_if<DiscretePmf>(&dist_)) {
      auto it = std::upper_bound(d->values.begin(), d->values.end(), x);
      return 1.0 - tail_[static_cast<std::size_t>(it - d->values.begin())];
    }
    const auto& u = std::get<UniformInterval>(dist_);
    if (x <= u.lo) return 0.0;
    if (x >= u.hi) return 1.0;
    return (x - u.lo) / (u.hi - u.lo);
  }

 private:
  Variant dist_;
  std::vector<double> tail_;
};

struct MonopolyPrice {
  double price = 0.0;
  double revenue = 0.0;
};

inline double prob_at_least(const ValueDistribution& d, double p) { return d.prob_at_least(p); }

// Revenue-maximizing take-it-or-leave-it price. Ties go to the lowest price.
inline MonopolyPrice monopoly(const ValueDistribution& d) {
  if (const auto* u = std::get_if<UniformInterval>(&d.variant())) {
    const double price = std::max(u->lo, u->hi / 2.0);
    return {price, price * d.prob_at_least(price)};
  }
  const auto atoms = d.atoms();
  std::vector<double> revenue(atoms.size());
  double best = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    revenue[i] = atoms[i] * d.prob_at_least(atoms[i]);
    best = std::max(best, revenue[i]);
  }
  const double slack = kTieTolerance * std::max(1.0, best);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (revenue[i] >= best - slack) return {atoms[i], revenue[i]};
  return {atoms.front(), revenue.front()};
}

// Smallest v with CDF(v) >= 1/2.
inline double median(const ValueDistribution& d) {
  if (const auto* u = std::get_if<UniformInterval>(&d.variant())) return 0.5 * (u->lo + u->hi);
  for (double v : d.atoms())
    if (d.cdf(v) >= 0.5 - kMassTolerance) return v;
  return d.support_high();
}

// Inverse-CDF draw. Consumes exactly one uniform from the stream for every variant.
inline double sample(const ValueDistribution& d, Rng& rng) {
  const double u = uniform01(rng);
  return std::visit(
      [u](const auto& dist) -> double {
        using T = std::decay_t<decltype(dist)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return dist.value;
        } else if constexpr (std::is_same_v<T, DiscretePmf>) {
          double cumulative = 0.0;
          for (std::size_t i = 0; i < dist.values.size(); ++i) {
            cumulative += dist.masses[i];
            if (u < cumulative) return dist.values[i];
          }
          return dist.values.back();
        } else {
          return dist.lo + u * (dist.hi - dist.lo);
        }
      },
      d.variant());
}

// Bidders sorted so support lows are nonincreasing, plus supply and optional
// position scales. Indices are 0-based throughout the library: bidder 0 is the
// one with the highest support low.
class AuctionInstance {
 public:
  AuctionInstance(std::vector<ValueDistribution> bidders,
                  std::optional<std::size_t> units = std::nullopt,
                  std::optional<std::vector<double>> scales = std::nullopt) {
    if (bidders.empty()) throw InputError("instance needs at least one bidder");
    order_.resize(bidders.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return bidders[a].support_low() > bidders[b].support_low();
    });
    bidders_.reserve(bidders.size());
    for (std::size_t i : order_) bidders_.push_back(bidders[i]);

    units_ = units.value_or(bidders_.size());
    if (units_ == 0) throw InputError("units must be positive");
    if (scales) {
      for (std::size_t j = 0; j < scales->size(); ++j) {
        const double s = (*scales)[j];
        if (!(s >= 0.0 && s <= 1.0)) throw InputError("scales must lie in [0, 1]");
        if (j > 0 && s > (*scales)[j - 1]) throw InputError("scales must be nonincreasing");
      }
    }
    scales_ = std::move(scales);
  }

  std::size_t size() const noexcept { return bidders_.size(); }
  const ValueDistribution& bidder(std::size_t i) const { return bidders_.at(i); }
  const std::vector<ValueDistribution>& bidders() const noexcept { return bidders_; }
  std::size_t units() const noexcept { return units_; }
  bool has_scales() const noexcept { return scales_.has_value(); }
  const std::optional<std::vector<double>>& scales() const noexcept { return scales_; }

  // Scale of item j (0-based): explicit scales, else 1 for the first `units` items.
  double scale(std::size_t j) const {
    if (scales_) return j < scales_->size() ? (*scales_)[j] : 0.0;
    return j < units_ ? 1.0 : 0.0;
  }

  // order()[i] is the caller-side position of sorted bidder i.
  const std::vector<std::size_t>& order() const noexcept { return order_; }

  double low(std::size_t i) const { return bidders_.at(i).support_low(); }
  double high(std::size_t i) const { return bidders_.at(i).support_high(); }

  std::vector<double> sample_values(Rng& rng) const {
    std::vector<double> values(bidders_.size());
    for (std::size_t i = 0; i < bidders_.size(); ++i) values[i] = sample(bidders_[i], rng);
    return values;
  }

 private:
  std::vector<ValueDistribution> bidders_;
  std::size_t units_ = 0;
  std::optional<std::vector<double>> scales_;
  std::vector<std::size_t> order_;
};

// Minimal k with b_i < a_{i-1-k} for all i; each bidder's overlap with the
// higher-ranked bidders is a contiguous run ending just above it.
inline std::size_t ambiguity(const AuctionInstance& inst) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < inst.size(); ++i) {
    std::size_t overlapping = 0;
    for (std::size_t j = 0; j < i; ++j)
      if (inst.low(j) <= inst.high(i)) ++overlapping;
    k = std::max(k, overlapping);
  }
  return k;
}

}  // namespace anonmech
