#pragma once

// Monte Carlo revenue estimation, payer-tail statistics, and exact benchmarks.
//
// Trial t always runs on the stream seeded by derive_seed(seed, t), so results
// are bit-identical for any worker count.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "anonmech/distributions.hpp"
#include "anonmech/errors.hpp"
#include "anonmech/mechanisms.hpp"
#include "anonmech/posterior.hpp"
#include "anonmech/pricing.hpp"
#include "anonmech/random.hpp"

namespace anonmech {

// Runs one auction on truthful values; the mechanism owns any randomized
// pricing and draws it from the supplied stream.
using Mechanism = std::function<Outcome(std::span<const double> values, Rng& rng)>;

using SchemeSampler = std::function<PricingScheme(Rng& rng)>;

inline std::size_t default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

template <typename Fn>
auto run_trials(std::size_t trials, std::uint64_t seed, Fn&& fn, std::size_t workers = default_workers())
    -> std::vector<decltype(fn(std::declval<Rng&>()))> {
  using Result = decltype(fn(std::declval<Rng&>()));
  std::vector<Result> results(trials);
  workers = std::max<std::size_t>(1, std::min(workers, trials));
  std::vector<std::exception_ptr> failure(workers);
  auto work = [&](std::size_t w, std::size_t begin, std::size_t end) {
    try {
      for (std::size_t t = begin; t < end; ++t) {
        Rng rng(derive_seed(seed, t));
        results[t] = fn(rng);
      }
    } catch (...) {
      failure[w] = std::current_exception();
    }
  };
  const std::size_t chunk = (trials + workers - 1) / workers;
  if (workers == 1) {
    work(0, 0, trials);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(trials, begin + chunk);
      if (begin < end) pool.emplace_back(work, w, begin, end);
    }
  }
  for (const auto& e : failure)
    if (e) std::rethrow_exception(e);
  return results;
}

struct RevenueStats {
  double mean = 0.0;
  double stddev = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
};

// Neumaier-compensated accumulation in trial order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline RevenueStats summarize(std::span<const double> samples) {
  RevenueStats s;
  s.trials = samples.size();
  if (samples.empty()) return s;
  CompensatedSum total;
  for (double x : samples) total.add(x);
  s.mean = total.value() / static_cast<double>(s.trials);
  CompensatedSum squares;
  for (double x : samples) squares.add((x - s.mean) * (x - s.mean));
  s.stddev = s.trials > 1 ? std::sqrt(squares.value() / static_cast<double>(s.trials - 1)) : 0.0;
  s.std_error = s.stddev / std::sqrt(static_cast<double>(s.trials));
  s.ci95_lo = s.mean - 1.96 * s.std_error;
  s.ci95_hi = s.mean + 1.96 * s.std_error;
  return s;
}

inline RevenueStats estimate_revenue(const Mechanism& mech, const AuctionInstance& inst, std::size_t trials,
                                     std::uint64_t seed, std::size_t workers = default_workers()) {
  if (trials == 0) throw InputError("estimate_revenue needs at least one trial");
  const auto revenue = run_trials(
      trials, seed,
      [&](Rng& rng) {
        const auto values = inst.sample_values(rng);
        const auto out = mech(values, rng);
        if (out.size() != inst.size()) throw InputError("mechanism outcome does not match the instance");
        return out.total_revenue;
      },
      workers);
  return summarize(revenue);
}

// ---------------------------------------------------------------------------
// Mechanism library.

namespace mechanisms {

inline Mechanism posted(std::vector<double> prices) {
  return [prices = std::move(prices)](std::span<const double> v, Rng&) { return run_posted_prices(prices, v); };
}

inline std::vector<double> monopoly_prices(const AuctionInstance& inst) {
  std::vector<double> prices(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) prices[i] = monopoly(inst.bidder(i)).price;
  return prices;
}

inline Mechanism posted_monopoly(const AuctionInstance& inst) { return posted(monopoly_prices(inst)); }

inline Mechanism single_price(double price, std::size_t units) {
  return [=](std::span<const double> v, Rng& rng) { return run_single_price(price, units, v, rng); };
}

inline Mechanism dpm(PricingScheme scheme) {
  return [scheme = std::move(scheme)](std::span<const double> v, Rng& rng) { return run_dpm(scheme, v, rng); };
}

inline Mechanism dpm_nondsic(PricingScheme scheme) {
  return [scheme = std::move(scheme)](std::span<const double> v, Rng& rng) {
    return run_dpm_nondsic(scheme, v, rng);
  };
}

inline Mechanism sampled_dpm(SchemeSampler sampler) {
  return [sampler = std::move(sampler)](std::span<const double> v, Rng& rng) {
    const auto scheme = sampler(rng);
    return run_dpm(scheme, v, rng);
  };
}

inline SchemeSampler k1_sampler(const AuctionInstance& inst) {
  auto state = std::make_shared<const std::pair<AuctionInstance, K1Rates>>(inst, k1_rates(inst));
  return [state](Rng& rng) { return k1_sample_scheme(state->second, state->first, rng); };
}

inline SchemeSampler block_sampler(const AuctionInstance& inst, std::size_t k) {
  auto plan = std::make_shared<const BlockPlan>(block_plan(inst, k));
  return [plan](Rng& rng) { return sample_scheme(*plan, rng); };
}

inline SchemeSampler mixed_sampler(const AuctionInstance& inst, std::size_t k) {
  auto mixed = std::make_shared<const MixedScheme>(inst, k);
  return [mixed](Rng& rng) { return mixed->sample(rng); };
}

inline Mechanism k1_dpm(const AuctionInstance& inst) { return sampled_dpm(k1_sampler(inst)); }
inline Mechanism block_dpm(const AuctionInstance& inst, std::size_t k) { return sampled_dpm(block_sampler(inst, k)); }
inline Mechanism mixed_dpm(const AuctionInstance& inst, std::size_t k) { return sampled_dpm(mixed_sampler(inst, k)); }

// Single price drawn from the harmonic mixture over the bidders' medians.
inline Mechanism harmonic_mixture(const AuctionInstance& inst) {
  std::vector<double> medians(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) medians[i] = median(inst.bidder(i));
  std::sort(medians.begin(), medians.end(), std::greater<>());
  const auto mixture = harmonic_reserve_mixture(medians);
  const std::size_t units = inst.units();
  return [mixture, units](std::span<const double> v, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    double price = mixture.back().price;
    for (const auto& wp : mixture) {
      cumulative += wp.weight;
      if (u < cumulative) {
        price = wp.price;
        break;
      }
    }
    return run_single_price(price, units, v, rng);
  };
}

inline Mechanism vcg_median(const AuctionInstance& inst) {
  return [inst](std::span<const double> v, Rng& rng) { return run_vcg_median_reserve(inst, v, rng); };
}

inline Mechanism scaled_dpm(const AuctionInstance& inst, std::size_t k) {
  auto sampler = k <= 1 ? k1_sampler(inst) : block_sampler(inst, k);
  return [inst, sampler](std::span<const double> v, Rng& rng) {
    const auto scheme = sampler(rng);
    return run_scaled_dpm(scheme, inst, v, rng);
  };
}

inline Mechanism top_item(const AuctionInstance& inst, std::size_t k) {
  top_item_reserves(inst, std::max<std::size_t>(k, 1));
  return [inst, k = std::max<std::size_t>(k, 1)](std::span<const double> v, Rng& rng) {
    return run_top_item_second_price(inst, k, v, rng);
  };
}

// Weight on the scaled DPM branch; the top-item auction takes the rest.
inline double position_dpm_weight() {
  constexpr double e2 = std::numbers::e * std::numbers::e;
  return 3.0 * e2 / (3.0 * e2 + 2.0);
}

inline Mechanism position_mixture(const AuctionInstance& inst, std::size_t k) {
  auto dpm_branch = scaled_dpm(inst, k);
  auto top_branch = top_item(inst, k);
  return [dpm_branch, top_branch](std::span<const double> v, Rng& rng) {
    return uniform01(rng) < position_dpm_weight() ? dpm_branch(v, rng) : top_branch(v, rng);
  };
}

inline Mechanism optimal_anonymous(const AuctionInstance& inst) {
  return [inst](std::span<const double> v, Rng&) { return run_optimal_anonymous_digital(inst, v); };
}

}  // namespace mechanisms

// ---------------------------------------------------------------------------
// Payer tails.

struct PayerTail {
  std::vector<double> thresholds;  // A_t, t = 1..T
  std::vector<double> counts;      // empirical Y_t
  std::vector<double> std_errors;
  std::vector<double> bound;       // t/3 (k = 1) or t/(3 e^2 k)
};

inline double payer_tail_bound(std::size_t t, std::size_t k) {
  constexpr double e2 = std::numbers::e * std::numbers::e;
  const double tt = static_cast<double>(t);
  return k <= 1 ? tt / 3.0 : tt / (3.0 * e2 * static_cast<double>(k));
}

// Y_t counts the full blocks (rank slots [b k, (b+1) k)) whose every slot is
// allocated and pays at least A_t. Short trailing blocks are ignored. With
// k = 1 this is the number of winners paying at least a_t.
inline PayerTail payer_tail(const SchemeSampler& sampler, const AuctionInstance& inst, std::size_t k,
                            std::size_t trials, std::uint64_t seed, std::size_t workers = default_workers()) {
  if (trials == 0) throw InputError("payer_tail needs at least one trial");
  k = std::max<std::size_t>(k, 1);
  const std::size_t full_blocks = inst.size() / k;
  PayerTail tail;
  for (std::size_t t = 0; t < full_blocks; ++t) {
    tail.thresholds.push_back(block_floor(inst, k, t));
    tail.bound.push_back(payer_tail_bound(t + 1, k));
  }
  const auto per_trial = run_trials(
      trials, seed,
      [&](Rng& rng) {
        const auto values = inst.sample_values(rng);
        const auto scheme = sampler(rng);
        const auto trace = trace_dpm(scheme, values, random_priority(values.size(), rng));
        std::vector<std::uint16_t> counts(full_blocks, 0);
        for (std::size_t b = 0; b < full_blocks; ++b) {
          const std::size_t last = (b + 1) * k - 1;
          if (last >= trace.winners) break;
          const double paid = scheme[trace.price_index[last]];
          for (std::size_t t = 0; t < full_blocks; ++t)
            if (paid >= tail.thresholds[t]) ++counts[t];
        }
        return counts;
      },
      workers);
  tail.counts.resize(full_blocks);
  tail.std_errors.resize(full_blocks);
  std::vector<double> column(trials);
  for (std::size_t t = 0; t < full_blocks; ++t) {
    for (std::size_t r = 0; r < trials; ++r) column[r] = per_trial[r][t];
    const auto s = summarize(column);
    tail.counts[t] = s.mean;
    tail.std_errors[t] = s.std_error;
  }
  return tail;
}

// ---------------------------------------------------------------------------
// Exact benchmarks.

// Non-anonymous digital-goods optimum: per-bidder monopoly pricing.
inline double opt_digital(const AuctionInstance& inst) {
  double total = 0.0;
  for (const auto& d : inst.bidders()) total += monopoly(d).revenue;
  return total;
}

// Expected digital-goods revenue of one posted price p for everyone.
inline double single_price_revenue(const AuctionInstance& inst, double price) {
  double buyers = 0.0;
  for (const auto& d : inst.bidders()) buyers += d.prob_at_least(price);
  return price * buyers;
}

struct BestSinglePrice {
  double price = 0.0;
  double revenue = 0.0;
};

// Exhaustive scan; ties go to the lowest price.
inline BestSinglePrice best_price_among(const AuctionInstance& inst, std::span<const double> candidates) {
  BestSinglePrice best{0.0, -1.0};
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  for (double p : sorted) {
    const double r = single_price_revenue(inst, p);
    if (r > best.revenue) best = {p, r};
  }
  return best;
}

// sum_{i<=k+1} s_1 Rev[F_i] + sum_{i<=n-k-1} s_i a_i, with 1-based indices.
inline double position_upper_bound(const AuctionInstance& inst, std::size_t k) {
  if (!inst.has_scales()) throw InputError("position upper bound requires scales");
  require_ambiguity(inst, k);
  const std::size_t n = inst.size();
  double total = 0.0;
  for (std::size_t i = 0; i < std::min(k + 1, n); ++i) total += inst.scale(0) * monopoly(inst.bidder(i)).revenue;
  for (std::size_t i = 0; i + k + 1 < n; ++i) total += inst.scale(i) * inst.low(i);
  return total;
}

// Exact expectation of f(values) over every support profile of a discrete instance.
template <typename Fn>
double exact_expectation(const AuctionInstance& inst, Fn&& f, std::size_t max_profiles = 5'000'000) {
  const std::size_t n = inst.size();
  std::vector<std::vector<double>> atoms(n);
  double profiles = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!inst.bidder(i).is_discrete()) throw InputError("exact expectation requires discrete priors");
    atoms[i] = inst.bidder(i).atoms();
    profiles *= static_cast<double>(atoms[i].size());
  }
  if (profiles > static_cast<double>(max_profiles)) throw SizeError("too many support profiles to enumerate");
  std::vector<std::size_t> digit(n, 0);
  std::vector<double> values(n);
  CompensatedSum total;
  while (true) {
    double weight = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = atoms[i][digit[i]];
      weight *= inst.bidder(i).mass_at(values[i]);
    }
    total.add(weight * f(std::span<const double>(values)));
    std::size_t i = 0;
    while (i < n && ++digit[i] == atoms[i].size()) digit[i++] = 0;
    if (i == n) break;
  }
  return total.value();
}

// ---------------------------------------------------------------------------
// Experiments and CSV.

struct ExperimentRow {
  std::string experiment;
  std::string instance_id;
  std::string mechanism;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double benchmark = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string csv_header() {
  return "experiment,instance_id,mechanism,trials,seed,mean,stderr,benchmark,ratio,bound,pass";
}

inline std::string to_csv(const ExperimentRow& r) {
  return r.experiment + "," + r.instance_id + "," + r.mechanism + "," + std::to_string(r.trials) + "," +
         std::to_string(r.seed) + "," + format_double(r.mean) + "," + format_double(r.std_error) + "," +
         format_double(r.benchmark) + "," + format_double(r.ratio) + "," + format_double(r.bound) + "," +
         (r.pass ? "true" : "false");
}

// (3e^2 + 2) k for every k >= 1, including k = 1.
inline double position_approximation_factor(std::size_t k) {
  constexpr double e2 = std::numbers::e * std::numbers::e;
  return (3.0 * e2 + 2.0) * static_cast<double>(std::max<std::size_t>(k, 1));
}

// Mixed DPM against opt_digital, or the position mixture against the
// position upper bound when the instance carries scales. Passes when
// mean >= benchmark / bound - 3 stderr.
inline ExperimentRow approx_experiment(const AuctionInstance& inst, std::size_t k, std::size_t trials,
                                       std::uint64_t seed, std::string instance_id = "instance") {
  ExperimentRow row;
  row.instance_id = std::move(instance_id);
  row.trials = trials;
  row.seed = seed;
  Mechanism mech;
  if (inst.has_scales()) {
    row.experiment = "position-approx";
    row.mechanism = "position-mixture";
    row.benchmark = position_upper_bound(inst, k);
    row.bound = position_approximation_factor(k);
    mech = mechanisms::position_mixture(inst, k);
  } else {
    row.experiment = k <= 1 ? "k1-approx" : "k-approx";
    row.mechanism = "mixed-dpm";
    row.benchmark = opt_digital(inst);
    row.bound = approximation_factor(k);
    mech = mechanisms::mixed_dpm(inst, k);
  }
  const auto stats = estimate_revenue(mech, inst, trials, seed);
  row.mean = stats.mean;
  row.std_error = stats.std_error;
  row.ratio = stats.mean > 0.0 ? row.benchmark / stats.mean : INFINITY;
  row.pass = stats.mean >= row.benchmark / row.bound - 3.0 * stats.std_error;
  return row;
}

struct Derandomized {
  PricingScheme scheme;
  double revenue = 0.0;
};

// Best of `candidates` schemes drawn from the sampler, each scored on the same
// `trials` value profiles.
inline Derandomized best_sampled_scheme(const SchemeSampler& sampler, const AuctionInstance& inst,
                                        std::size_t candidates, std::size_t trials, std::uint64_t seed) {
  if (candidates == 0 || trials == 0) throw InputError("derandomization needs candidates and trials");
  Rng draw(derive_seed(seed, 0xdea1));
  Derandomized best{PricingScheme{}, -1.0};
  for (std::size_t c = 0; c < candidates; ++c) {
    auto scheme = sampler(draw);
    const auto stats = estimate_revenue(mechanisms::dpm(scheme), inst, trials, seed);
    if (stats.mean > best.revenue) best = {std::move(scheme), stats.mean};
  }
  return best;
}

}  // namespace anonmech
