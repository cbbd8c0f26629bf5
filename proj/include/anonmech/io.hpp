#pragma once

// JSON instance files:
//   {"bidders": [{"kind": "point", "value": 2},
//                {"kind": "discrete", "values": [1, 2], "probs": [0.5, 0.5]},
//                {"kind": "uniform", "lo": 0, "hi": 1}],
//    "units": 2, "scales": [1, 0.5]}
// Bidders may appear in any order; parsing sorts them by support low.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "anonmech/distributions.hpp"
#include "anonmech/errors.hpp"

namespace anonmech {

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw InputError(where + ": missing field \"" + key + "\"");
  return obj.at(key);
}

inline double number_at(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw InputError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::vector<double> numbers_at(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_array()) throw InputError(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw InputError(where + "." + key + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

inline ValueDistribution parse_bidder(const nlohmann::json& b, const std::string& where) {
  const auto& kind_field = require(b, "kind", where);
  if (!kind_field.is_string()) throw InputError(where + ".kind: expected a string");
  const auto kind = kind_field.get<std::string>();
  try {
    if (kind == "point") return PointMass{number_at(b, "value", where)};
    if (kind == "discrete") {
      auto values = numbers_at(b, "values", where);
      auto probs = numbers_at(b, "probs", where);
      return DiscretePmf{std::move(values), std::move(probs)};
    }
    if (kind == "uniform") return UniformInterval{number_at(b, "lo", where), number_at(b, "hi", where)};
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(where, 0) == 0) throw;
    throw InputError(where + ": " + msg);
  }
  throw InputError(where + ".kind: unknown kind \"" + kind + "\"");
}

}  // namespace detail

inline AuctionInstance instance_from_json(const nlohmann::json& doc) {
  const auto& bidders = detail::require(doc, "bidders", "instance");
  if (!bidders.is_array() || bidders.empty()) throw InputError("instance.bidders: expected a nonempty array");
  std::vector<ValueDistribution> dists;
  for (std::size_t i = 0; i < bidders.size(); ++i)
    dists.push_back(detail::parse_bidder(bidders[i], "bidders[" + std::to_string(i) + "]"));

  std::optional<std::size_t> units;
  if (doc.contains("units")) {
    const auto& u = doc.at("units");
    if (!u.is_number_integer() || u.get<long long>() < 1) throw InputError("units: expected a positive integer");
    units = u.get<std::size_t>();
  }
  std::optional<std::vector<double>> scales;
  if (doc.contains("scales")) {
    scales = detail::numbers_at(doc, "scales", "instance");
    for (std::size_t j = 0; j < scales->size(); ++j) {
      if ((*scales)[j] < 0.0 || (*scales)[j] > 1.0)
        throw InputError("scales[" + std::to_string(j) + "]: must lie in [0, 1]");
      if (j > 0 && (*scales)[j] > (*scales)[j - 1])
        throw InputError("scales[" + std::to_string(j) + "]: scales must be nonincreasing");
    }
  }
  return AuctionInstance(std::move(dists), units, std::move(scales));
}

inline AuctionInstance parse_instance(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed instance: ") + e.what());
  }
  return instance_from_json(doc);
}

inline nlohmann::json to_json(const ValueDistribution& d) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, PointMass>) return {{"kind", "point"}, {"value", x.value}};
        else if constexpr (std::is_same_v<T, DiscretePmf>)
          return {{"kind", "discrete"}, {"values", x.values}, {"probs", x.masses}};
        else return {{"kind", "uniform"}, {"lo", x.lo}, {"hi", x.hi}};
      },
      d.variant());
}

// Writes bidders in sorted order; units and scales only when they differ from
// the digital-goods defaults.
inline nlohmann::json to_json(const AuctionInstance& inst) {
  nlohmann::json doc;
  doc["bidders"] = nlohmann::json::array();
  for (const auto& d : inst.bidders()) doc["bidders"].push_back(to_json(d));
  if (inst.units() != inst.size() || inst.has_scales()) doc["units"] = inst.units();
  if (inst.has_scales()) doc["scales"] = *inst.scales();
  return doc;
}

inline std::string serialize_instance(const AuctionInstance& inst) { return to_json(inst).dump(2) + "\n"; }

}  // namespace anonmech
