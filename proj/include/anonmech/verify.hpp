#pragma once

// Exhaustive grid checks of DSIC, ex-post IR, anonymity and monotonicity.
//
// Mechanisms are checked through their exact expected outcome at a bid
// profile: tie-break orders and lottery branches are enumerated and averaged,
// never sampled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "anonmech/errors.hpp"
#include "anonmech/mechanisms.hpp"
#include "anonmech/simulate.hpp"

namespace anonmech {

struct ExpectedOutcome {
  std::vector<double> allocation;
  std::vector<double> payment;
};

using ExactMechanism = std::function<ExpectedOutcome(std::span<const double> bids)>;

inline ExpectedOutcome expected_of(const Outcome& out) {
  ExpectedOutcome e;
  for (const auto& b : out.bidders) {
    e.allocation.push_back(b.allocation);
    e.payment.push_back(b.payment);
  }
  return e;
}

inline ExactMechanism deterministic(std::function<Outcome(std::span<const double>)> f) {
  return [f = std::move(f)](std::span<const double> bids) { return expected_of(f(bids)); };
}

// Averages over every tie-break priority when bids tie; a single run otherwise.
inline ExactMechanism over_tie_breaks(
    std::function<Outcome(std::span<const double>, std::span<const std::size_t>)> f) {
  return [f = std::move(f)](std::span<const double> bids) {
    const std::size_t n = bids.size();
    std::vector<double> sorted(bids.begin(), bids.end());
    std::sort(sorted.begin(), sorted.end());
    auto priority = identity_priority(n);
    if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) return expected_of(f(bids, priority));
    if (n > 8) throw SizeError("tie-break enumeration limited to 8 bidders");
    ExpectedOutcome e{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::size_t orders = 0;
    do {
      const auto out = f(bids, priority);
      for (std::size_t i = 0; i < n; ++i) {
        e.allocation[i] += out[i].allocation;
        e.payment[i] += out[i].payment;
      }
      ++orders;
    } while (std::next_permutation(priority.begin(), priority.end()));
    for (std::size_t i = 0; i < n; ++i) {
      e.allocation[i] /= static_cast<double>(orders);
      e.payment[i] /= static_cast<double>(orders);
    }
    return e;
  };
}

// Finite mixture with exact branch weights.
inline ExactMechanism mixture(std::vector<std::pair<double, ExactMechanism>> branches) {
  return [branches = std::move(branches)](std::span<const double> bids) {
    ExpectedOutcome e{std::vector<double>(bids.size(), 0.0), std::vector<double>(bids.size(), 0.0)};
    for (const auto& [w, mech] : branches) {
      const auto out = mech(bids);
      for (std::size_t i = 0; i < bids.size(); ++i) {
        e.allocation[i] += w * out.allocation[i];
        e.payment[i] += w * out.payment[i];
      }
    }
    return e;
  };
}

enum class Property { Dsic, Ir, Anonymity, Monotone };

inline std::string to_string(Property p) {
  switch (p) {
    case Property::Dsic: return "DSIC";
    case Property::Ir: return "IR";
    case Property::Anonymity: return "ANONYMITY";
    case Property::Monotone: return "MONOTONE";
  }
  return "?";
}

inline Property parse_property(const std::string& s) {
  if (s == "DSIC" || s == "dsic") return Property::Dsic;
  if (s == "IR" || s == "ir") return Property::Ir;
  if (s == "ANONYMITY" || s == "anonymity") return Property::Anonymity;
  if (s == "MONOTONE" || s == "monotone") return Property::Monotone;
  throw InputError("unknown property: " + s);
}

struct Violation {
  std::vector<double> profile;
  std::size_t bidder = 0;
  std::optional<double> deviation;
  std::vector<std::size_t> permutation;
  double gain = 0.0;  // utility gain, IR deficit or outcome discrepancy
};

struct PropertyReport {
  Property property = Property::Dsic;
  std::size_t profiles_checked = 0;
  std::size_t comparisons = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // first `max_recorded` only

  bool pass() const noexcept { return violation_count == 0; }
};

inline constexpr double kDefaultTolerance = 1e-9;
inline constexpr std::size_t kMaxGridProfiles = 1'000'000;

inline PropertyReport check_property(const ExactMechanism& mech, Property property, std::span<const double> grid,
                                     std::size_t n, double tol = kDefaultTolerance,
                                     std::size_t max_recorded = 10'000) {
  if (grid.empty() || n == 0) throw InputError("grid and bidder count must be nonempty");
  const std::size_t g = grid.size();
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(g);
  if (total > static_cast<double>(kMaxGridProfiles)) throw SizeError("grid^n exceeds 10^6 profiles");
  const auto profiles = static_cast<std::size_t>(total);

  auto decode = [&](std::size_t code) {
    std::vector<std::size_t> digits(n);
    for (std::size_t i = 0; i < n; ++i) {
      digits[i] = code % g;
      code /= g;
    }
    return digits;
  };
  auto encode = [&](std::span<const std::size_t> digits) {
    std::size_t code = 0;
    for (std::size_t i = n; i-- > 0;) code = code * g + digits[i];
    return code;
  };

  std::vector<ExpectedOutcome> outcome(profiles);
  for (std::size_t code = 0; code < profiles; ++code) {
    const auto d = decode(code);
    std::vector<double> bids(n);
    for (std::size_t i = 0; i < n; ++i) bids[i] = grid[d[i]];
    outcome[code] = mech(bids);
  }

  PropertyReport report;
  report.property = property;
  report.profiles_checked = profiles;
  auto record = [&](Violation v) {
    ++report.violation_count;
    if (report.violations.size() < max_recorded) report.violations.push_back(std::move(v));
  };

  for (std::size_t code = 0; code < profiles; ++code) {
    const auto d = decode(code);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = grid[d[i]];
    const auto& truthful = outcome[code];

    switch (property) {
      case Property::Dsic:
        for (std::size_t i = 0; i < n; ++i) {
          const double u_true = truthful.allocation[i] * values[i] - truthful.payment[i];
          auto dev = d;
          for (std::size_t x = 0; x < g; ++x) {
            if (x == d[i]) continue;
            dev[i] = x;
            const auto& alt = outcome[encode(dev)];
            const double gain = alt.allocation[i] * values[i] - alt.payment[i] - u_true;
            ++report.comparisons;
            if (gain > tol) record({values, i, grid[x], {}, gain});
          }
        }
        break;
      case Property::Ir:
        for (std::size_t i = 0; i < n; ++i) {
          const double u = truthful.allocation[i] * values[i] - truthful.payment[i];
          ++report.comparisons;
          if (u < -tol) record({values, i, std::nullopt, {}, -u});
        }
        break;
      case Property::Anonymity: {
        auto sorted = d;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) break;
        auto perm = identity_priority(n);
        while (std::next_permutation(perm.begin(), perm.end())) {
          std::vector<std::size_t> permuted(n);
          for (std::size_t i = 0; i < n; ++i) permuted[i] = d[perm[i]];
          const auto& alt = outcome[encode(permuted)];
          ++report.comparisons;
          double worst = 0.0;
          std::size_t who = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const double gap = std::max(std::abs(alt.allocation[i] - truthful.allocation[perm[i]]),
                                        std::abs(alt.payment[i] - truthful.payment[perm[i]]));
            if (gap > worst) worst = gap, who = i;
          }
          if (worst > tol) record({values, who, std::nullopt, perm, worst});
        }
        break;
      }
      case Property::Monotone:
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            if (!(values[i] > values[j])) continue;
            ++report.comparisons;
            const double gap = truthful.allocation[j] - truthful.allocation[i];
            if (gap > tol) record({values, i, std::nullopt, {}, gap});
          }
        break;
    }
  }
  return report;
}

inline std::string describe(const Violation& v) {
  std::ostringstream os;
  os << "profile (";
  for (std::size_t i = 0; i < v.profile.size(); ++i) os << (i ? "," : "") << v.profile[i];
  os << ") bidder " << v.bidder;
  if (v.deviation) os << " deviates to " << *v.deviation;
  if (!v.permutation.empty()) {
    os << " permutation (";
    for (std::size_t i = 0; i < v.permutation.size(); ++i) os << (i ? "," : "") << v.permutation[i];
    os << ")";
  }
  os << " gain " << v.gain;
  return os.str();
}

inline std::string format_report(const PropertyReport& r) {
  std::ostringstream os;
  os << to_string(r.property) << ": " << (r.pass() ? "PASS" : "FAIL") << " (" << r.profiles_checked
     << " profiles, " << r.comparisons << " comparisons, " << r.violation_count << " violations)\n";
  for (const auto& v : r.violations) os << "  " << describe(v) << "\n";
  return os.str();
}

inline std::string violations_csv(const PropertyReport& r) {
  std::ostringstream os;
  os << "property,profile,bidder,deviation,permutation,gain\n";
  for (const auto& v : r.violations) {
    os << to_string(r.property) << ",";
    for (std::size_t i = 0; i < v.profile.size(); ++i) os << (i ? " " : "") << format_double(v.profile[i]);
    os << "," << v.bidder << "," << (v.deviation ? format_double(*v.deviation) : "") << ",";
    for (std::size_t i = 0; i < v.permutation.size(); ++i) os << (i ? " " : "") << v.permutation[i];
    os << "," << format_double(v.gain) << "\n";
  }
  return os.str();
}

}  // namespace anonmech
