#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <variant>

#include "carrylab/addition.hpp"
#include "carrylab/carry.hpp"

namespace carrylab {

struct SingleValue {
  Digit unit;
  friend bool operator==(const SingleValue&, const SingleValue&) = default;
};
struct LowDimMultiValue {
  friend bool operator==(const LowDimMultiValue&, const LowDimMultiValue&) = default;
};
struct OtherMultiValue {
  friend bool operator==(const OtherMultiValue&, const OtherMultiValue&) = default;
};

using CarryClass = std::variant<SingleValue, LowDimMultiValue, OtherMultiValue>;

inline std::string class_name(const CarryClass& c) {
  if (std::holds_alternative<SingleValue>(c)) return "single";
  if (std::holds_alternative<LowDimMultiValue>(c)) return "lowdim";
  return "other";
}

inline bool is_single_value(const CarryClass& c) { return std::holds_alternative<SingleValue>(c); }

// Depths at which a Low Dimensional table must be fully associative.
inline constexpr std::size_t kLowDimDepth = 4;

inline CarryClass classify(const CarryTable& f) {
  if (!canonical_id(f)) throw domain_error("table is not in the enumeration for its base");

  std::set<int> carried;
  for (auto v : f.entries())
    if (v != 0) carried.insert(v);
  if (carried.size() == 1 && is_unit(f.base(), *carried.begin())) return SingleValue{Digit(f.base(), *carried.begin())};

  // Same triplet policy as associativity_fraction, stopping at the first failure.
  for (std::size_t depth = 1; depth <= kLowDimDepth; ++depth) {
    const std::size_t length = depth + 1;
    std::vector<std::uint8_t> s1(length), s2(length);
    bool all = true;
    detail::for_each_triplet(f.size(), length, kExhaustiveLimit, kAssociativitySamples, [&](auto n, auto m, auto p) {
      all = detail::associates(f, n, m, p, s1, s2);
      return all;
    });
    if (!all) return OtherMultiValue{};
  }
  return LowDimMultiValue{};
}

}  // namespace carrylab
