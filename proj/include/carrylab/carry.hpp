#pragma once

/**
 * Carry tables over Z_b.
 *
 * A carry function f : Z_b x Z_b -> Z_b is stored as its b x b table,
 * entries[n * b + m] = f(n, m). Valid carry functions are normalized 2-cocycles;
 * the ones that give an addition equivalent to integer addition on two digits
 * are exactly the coboundary shifts f1 + dc of the conventional carry f1.
 */

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carrylab/error.hpp"
#include "carrylab/modnum.hpp"

namespace carrylab {

class CarryTable {
 public:
  CarryTable(Base base, std::vector<std::uint8_t> entries) : base_(base), entries_(std::move(entries)) {
    const auto b = static_cast<std::size_t>(base.value());
    if (entries_.size() != b * b) {
      throw domain_error("carry table for base " + std::to_string(b) + " needs " + std::to_string(b * b) +
                         " entries, got " + std::to_string(entries_.size()));
    }
    for (auto v : entries_) {
      if (v >= b) throw domain_error("carry table entry " + std::to_string(v) + " out of range");
    }
  }

  static CarryTable zeros(Base base) {
    const auto b = static_cast<std::size_t>(base.value());
    return CarryTable(base, std::vector<std::uint8_t>(b * b, 0));
  }

  Base base() const noexcept { return base_; }
  int size() const noexcept { return base_.value(); }

  // Unchecked lookup for hot loops; n, m in [0, b).
  int operator()(int n, int m) const noexcept { return entries_[static_cast<std::size_t>(n * base_.value() + m)]; }

  Digit at(Digit n, Digit m) const {
    detail::require_same_base(base_, n.base());
    detail::require_same_base(base_, m.base());
    return Digit(base_, (*this)(n.value(), m.value()));
  }

  void set(int n, int m, int value) {
    if (n < 0 || m < 0 || n >= size() || m >= size() || value < 0 || value >= size()) {
      throw domain_error("carry table index or value out of range");
    }
    entries_[static_cast<std::size_t>(n * size() + m)] = static_cast<std::uint8_t>(value);
  }

  std::span<const std::uint8_t> entries() const noexcept { return entries_; }

  friend bool operator==(const CarryTable&, const CarryTable&) = default;

  // Canonical order: base first, then row-major flattening compared lexicographically.
  friend std::strong_ordering operator<=>(const CarryTable& a, const CarryTable& b) {
    if (auto c = a.base_ <=> b.base_; c != 0) return c;
    return std::lexicographical_compare_three_way(a.entries_.begin(), a.entries_.end(), b.entries_.begin(),
                                                  b.entries_.end());
  }

 private:
  Base base_;
  std::vector<std::uint8_t> entries_;
};

// c : Z_b -> Z_b with c(0) = 0.
class CoboundaryMap {
 public:
  CoboundaryMap(Base base, std::vector<std::uint8_t> values) : base_(base), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(base.value())) throw domain_error("coboundary map needs b values");
    if (values_[0] != 0) throw domain_error("coboundary map must send 0 to 0");
    for (auto v : values_) {
      if (v >= base.value()) throw domain_error("coboundary map value out of range");
    }
  }

  Base base() const noexcept { return base_; }
  int operator()(int d) const noexcept { return values_[static_cast<std::size_t>(d)]; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }

 private:
  Base base_;
  std::vector<std::uint8_t> values_;
};

// f1(n, m) = 1 if n + m >= b else 0.
inline CarryTable one_carry(Base base) {
  auto table = CarryTable::zeros(base);
  const int b = base.value();
  for (int n = 0; n < b; ++n)
    for (int m = 0; m < b; ++m)
      if (n + m >= b) table.set(n, m, 1);
  return table;
}

// Single Value carry of a unit u: carry u exactly when the digits' positions in
// the u-ordering overflow.
inline CarryTable u_carry(Base base, Digit u) {
  const Ordering order(base, u);
  auto table = CarryTable::zeros(base);
  const int b = base.value();
  for (int n = 0; n < b; ++n)
    for (int m = 0; m < b; ++m)
      if (order.position(n) + order.position(m) >= b) table.set(n, m, u.value());
  return table;
}

inline bool is_normalized(const CarryTable& f) {
  for (int d = 0; d < f.size(); ++d) {
    if (f(d, 0) != 0 || f(0, d) != 0) return false;
  }
  return true;
}

// f(n,m) + f(n+m,p) = f(m,p) + f(n,m+p) (mod b) for every triple.
inline bool is_cocycle(const CarryTable& f) {
  const int b = f.size();
  for (int n = 0; n < b; ++n)
    for (int m = 0; m < b; ++m)
      for (int p = 0; p < b; ++p)
        if ((f(n, m) + f((n + m) % b, p)) % b != (f(m, p) + f(n, (m + p) % b)) % b) return false;
  return true;
}

// f'(n,m) = f(n,m) + c(n) + c(m) - c(n+m)  (mod b).
inline CarryTable coboundary_shift(const CarryTable& f, const CoboundaryMap& c) {
  detail::require_same_base(f.base(), c.base());
  const int b = f.size();
  auto out = CarryTable::zeros(f.base());
  for (int n = 0; n < b; ++n)
    for (int m = 0; m < b; ++m)
      out.set(n, m, detail::mod(f(n, m) + c(n) + c(m) - c((n + m) % b), b));
  return out;
}

inline constexpr int kMaxEnumerationBase = 6;
inline constexpr int kMaxBruteForceBase = 4;

// Every carry table equivalent to f1 on two digits, in canonical order. The
// position of a table in this list is its canonical id.
inline std::vector<CarryTable> enumerate_carry_tables(Base base) {
  const int b = base.value();
  if (b > kMaxEnumerationBase) {
    throw resource_limit_error("enumeration supports bases up to " + std::to_string(kMaxEnumerationBase));
  }
  const CarryTable f1 = one_carry(base);
  std::vector<CarryTable> out;
  // Iterate c(1..b-1) as a little-endian counter in base b.
  std::vector<std::uint8_t> c(static_cast<std::size_t>(b), 0);
  while (true) {
    out.push_back(coboundary_shift(f1, CoboundaryMap(base, c)));
    int i = 1;
    while (i < b && ++c[static_cast<std::size_t>(i)] == b) c[static_cast<std::size_t>(i++)] = 0;
    if (i == b) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::optional<std::size_t> canonical_id(const CarryTable& f) {
  if (f.size() > kMaxEnumerationBase) return std::nullopt;
  const auto all = enumerate_carry_tables(f.base());
  const auto it = std::lower_bound(all.begin(), all.end(), f);
  if (it == all.end() || *it != f) return std::nullopt;
  return static_cast<std::size_t>(it - all.begin());
}

inline CarryTable carry_table_by_id(Base base, std::size_t id) {
  auto all = enumerate_carry_tables(base);
  if (id >= all.size()) {
    throw config_error("carry id " + std::to_string(id) + " out of range for base " + std::to_string(base.value()) +
                       " (" + std::to_string(all.size()) + " tables)");
  }
  return std::move(all[id]);
}

// Independent of enumerate_carry_tables: scans every normalized table, keeps the
// cocycles, and solves d = f - f1 = dc for c directly (c(1) = 0 fixes the
// homomorphism ambiguity; c(n+1) = c(n) + c(1) - d(n, 1)).
inline std::vector<CarryTable> brute_force_equivalent_cocycles(Base base) {
  const int b = base.value();
  if (b > kMaxBruteForceBase) {
    throw resource_limit_error("brute-force search supports bases up to " + std::to_string(kMaxBruteForceBase));
  }
  const CarryTable f1 = one_carry(base);
  const int free_cells = (b - 1) * (b - 1);
  std::vector<int> digits(static_cast<std::size_t>(free_cells), 0);
  std::vector<CarryTable> out;
  auto candidate = CarryTable::zeros(base);
  while (true) {
    for (int i = 0; i < free_cells; ++i) candidate.set(1 + i / (b - 1), 1 + i % (b - 1), digits[static_cast<std::size_t>(i)]);

    if (is_cocycle(candidate)) {
      std::vector<int> c(static_cast<std::size_t>(b), 0);
      for (int n = 1; n + 1 < b; ++n) {
        c[static_cast<std::size_t>(n + 1)] =
            detail::mod(c[static_cast<std::size_t>(n)] + c[1] - (candidate(n, 1) - f1(n, 1)), b);
      }
      bool solved = true;
      for (int n = 0; n < b && solved; ++n)
        for (int m = 0; m < b && solved; ++m)
          solved = detail::mod(candidate(n, m) - f1(n, m), b) ==
                   detail::mod(c[static_cast<std::size_t>(n)] + c[static_cast<std::size_t>(m)] -
                                   c[static_cast<std::size_t>((n + m) % b)],
                               b);
      if (solved) out.push_back(candidate);
    }

    int i = 0;
    while (i < free_cells && ++digits[static_cast<std::size_t>(i)] == b) digits[static_cast<std::size_t>(i++)] = 0;
    if (i == free_cells) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace carrylab
