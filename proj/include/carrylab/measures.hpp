#pragma once

/**
 * Structure measures of a carry function, computed per depth k on F_k:
 *
 *  - box-counting dimension of the border between differently-valued regions,
 *    log(N) / log(b^k), where N counts border cells at resolution 1/b^k;
 *  - frequency of carrying, the fraction of nonzero entries of F_k;
 *  - associativity fraction (see addition.hpp).
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "carrylab/addition.hpp"
#include "carrylab/carry.hpp"
#include "carrylab/modnum.hpp"

namespace carrylab {

enum class BorderRule {
  // Differs from at least one existing left/upper neighbour (default).
  AnyNeighbor,
  // Differs from every existing left/upper neighbour.
  AllNeighbors,
};

// Row-major side x side mask of border cells: cells whose value differs from
// their left/upper neighbours (see BorderRule). Cell (0,0) has no neighbours
// and is never marked; first-row/first-column cells compare against their
// single neighbour.
inline std::vector<bool> border_mask(const DepthKTable& t, BorderRule rule = BorderRule::AnyNeighbor) {
  const std::uint64_t side = t.side();
  std::vector<bool> mask(side * side, false);
  for (std::uint64_t n = 0; n < side; ++n) {
    for (std::uint64_t m = 0; m < side; ++m) {
      const int v = t(n, m);
      const bool has_up = n > 0, has_left = m > 0;
      if (!has_up && !has_left) continue;
      const bool diff_up = has_up && t(n - 1, m) != v;
      const bool diff_left = has_left && t(n, m - 1) != v;
      bool marked = false;
      if (rule == BorderRule::AllNeighbors) {
        marked = (!has_up || diff_up) && (!has_left || diff_left);
      } else {
        marked = diff_up || diff_left;
      }
      mask[n * side + m] = marked;
    }
  }
  return mask;
}

inline std::uint64_t border_count(const DepthKTable& t, BorderRule rule = BorderRule::AnyNeighbor) {
  std::uint64_t count = 0;
  for (bool b : border_mask(t, rule)) count += b ? 1 : 0;
  return count;
}

// Relabels indices digit-wise by position in `order`: tuple (n_k..n_1) moves to
// row sum_j pos(n_j) b^{j-1}, then rows/columns are re-sorted lexicographically.
inline DepthKTable relabel(const DepthKTable& t, const Ordering& order) {
  detail::require_same_base(t.base(), order.base());
  const int b = t.base().value();
  const std::uint64_t side = t.side();
  std::vector<std::uint64_t> new_index(side);
  std::vector<std::uint8_t> digits(t.depth());
  for (std::uint64_t i = 0; i < side; ++i) {
    detail::integer_to_digits(i, b, digits);
    for (auto& d : digits) d = static_cast<std::uint8_t>(order.position(d));
    new_index[i] = detail::digits_to_integer(digits, b);
  }
  std::vector<std::uint8_t> out(side * side);
  for (std::uint64_t n = 0; n < side; ++n)
    for (std::uint64_t m = 0; m < side; ++m) out[new_index[n] * side + new_index[m]] = static_cast<std::uint8_t>(t(n, m));
  return DepthKTable(t.base(), t.depth(), std::move(out));
}

struct BoxDimension {
  double estimate = 0.0;
  std::uint64_t border_count = 0;
  std::optional<Digit> unit;  // ordering used; set when minimized
};

inline double box_dimension_of(std::uint64_t border, int b, std::size_t k) {
  if (border == 0) return 0.0;
  return std::log(static_cast<double>(border)) / (static_cast<double>(k) * std::log(static_cast<double>(b)));
}

inline BoxDimension box_dimension(const DepthKTable& t, bool minimize_over_orderings,
                                  BorderRule rule = BorderRule::AnyNeighbor) {
  const int b = t.base().value();
  if (!minimize_over_orderings) {
    const auto n = border_count(t, rule);
    return {box_dimension_of(n, b, t.depth()), n, std::nullopt};
  }
  BoxDimension best;
  best.estimate = std::numeric_limits<double>::infinity();
  // All units: relabeling by u and by b-u are different permutations of the
  // index tuples, so both have to be tried.
  for (const Digit& u : units(t.base())) {
    const Ordering order(t.base(), u);
    const auto n = border_count(relabel(t, order), rule);
    const double d = box_dimension_of(n, b, t.depth());
    if (d < best.estimate) best = {d, n, order.unit()};
  }
  return best;
}

inline BoxDimension box_dimension(const CarryTable& f, std::size_t k, bool minimize_over_orderings,
                                  BorderRule rule = BorderRule::AnyNeighbor) {
  return box_dimension(depth_k_table(f, k), minimize_over_orderings, rule);
}

inline double carry_frequency(const DepthKTable& t) {
  std::uint64_t nonzero = 0;
  for (auto v : t.entries()) nonzero += v != 0 ? 1 : 0;
  return static_cast<double>(nonzero) / static_cast<double>(t.entries().size());
}

inline double carry_frequency(const CarryTable& f, std::size_t k) { return carry_frequency(depth_k_table(f, k)); }

// Mean of the per-depth frequencies over depths 1..max_depth.
inline double overall_carry_frequency(const CarryTable& f, std::size_t max_depth) {
  if (max_depth == 0) throw domain_error("need at least one depth");
  double sum = 0.0;
  for (std::size_t k = 1; k <= max_depth; ++k) sum += carry_frequency(f, k);
  return sum / static_cast<double>(max_depth);
}

struct DepthMeasures {
  std::size_t depth = 0;
  std::uint64_t border_count = 0;
  double box_dim = 0.0;
  double box_dim_min_ordering = 0.0;
  int min_ordering_unit = 1;
  double carry_freq = 0.0;
  AssociativityResult associativity;
};

struct MeasureReport {
  int base = 0;
  std::optional<std::size_t> carry_id;  // empty for tables outside the enumeration
  std::vector<DepthMeasures> depths;  // depths 1..K
  double overall_carry_frequency = 0.0;
  int min_ordering_used = 1;  // unit minimizing box dimension at the deepest depth

  const DepthMeasures& deepest() const { return depths.back(); }
};

inline MeasureReport measure_report(const CarryTable& f, std::size_t max_depth,
                                    BorderRule rule = BorderRule::AnyNeighbor) {
  if (max_depth == 0) throw domain_error("report needs K >= 1");
  MeasureReport r;
  r.base = f.size();
  r.carry_id = canonical_id(f);
  double freq_sum = 0.0;
  for (std::size_t k = 1; k <= max_depth; ++k) {
    const DepthKTable t = depth_k_table(f, k);
    DepthMeasures d;
    d.depth = k;
    const auto plain = box_dimension(t, false, rule);
    const auto minimal = box_dimension(t, true, rule);
    d.border_count = plain.border_count;
    d.box_dim = plain.estimate;
    d.box_dim_min_ordering = minimal.estimate;
    d.min_ordering_unit = minimal.unit ? minimal.unit->value() : 1;
    d.carry_freq = carry_frequency(t);
    d.associativity = associativity_fraction(f, k);
    freq_sum += d.carry_freq;
    r.depths.push_back(d);
  }
  r.overall_carry_frequency = freq_sum / static_cast<double>(max_depth);
  r.min_ordering_used = r.depths.back().min_ordering_unit;
  return r;
}

}  // namespace carrylab
