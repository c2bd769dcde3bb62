#pragma once

/**
 * Arithmetic in the cyclic group Z_b.
 *
 * A Base is a modulus b >= 2. Digits remember the base they belong to so that
 * a sweep over several bases can never silently mix moduli. Units of Z_b
 * (elements coprime to b) generate every element by repeated addition; the
 * resulting visiting order is an Ordering.
 */

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "carrylab/error.hpp"

namespace carrylab {

class Base {
 public:
  explicit Base(int b) : b_(b) {
    if (b < 2) throw domain_error("base must be >= 2, got " + std::to_string(b));
  }

  int value() const noexcept { return b_; }

  friend bool operator==(Base, Base) = default;
  friend auto operator<=>(Base, Base) = default;

 private:
  int b_;
};

class Digit {
 public:
  Digit(Base base, int value) : base_(base), value_(value) {
    if (value < 0 || value >= base.value()) {
      throw domain_error("digit " + std::to_string(value) + " out of range for base " +
                         std::to_string(base.value()));
    }
  }

  Base base() const noexcept { return base_; }
  int value() const noexcept { return value_; }

  friend bool operator==(const Digit&, const Digit&) = default;

 private:
  Base base_;
  int value_;
};

namespace detail {

inline int mod(long long x, int b) {
  const long long r = x % b;
  return static_cast<int>(r < 0 ? r + b : r);
}

inline void require_same_base(Base expected, Base got) {
  if (expected != got) {
    throw domain_error("base mismatch: expected " + std::to_string(expected.value()) + ", got " +
                       std::to_string(got.value()));
  }
}

}  // namespace detail

inline Digit mod_add(Base base, Digit x, Digit y) {
  detail::require_same_base(base, x.base());
  detail::require_same_base(base, y.base());
  return Digit(base, (x.value() + y.value()) % base.value());
}

inline bool is_unit(Base base, int d) {
  return d > 0 && d < base.value() && std::gcd(d, base.value()) == 1;
}

inline std::vector<Digit> units(Base base) {
  std::vector<Digit> out;
  for (int d = 1; d < base.value(); ++d) {
    if (is_unit(base, d)) out.emplace_back(base, d);
  }
  return out;
}

inline int euler_phi(Base base) { return static_cast<int>(units(base).size()); }

// Multiplicative inverse of a unit.
inline int inverse_unit(Base base, int u) {
  if (!is_unit(base, u)) throw domain_error(std::to_string(u) + " is not a unit mod " + std::to_string(base.value()));
  for (int v = 1; v < base.value(); ++v) {
    if ((u * v) % base.value() == 1) return v;
  }
  throw domain_error("no inverse");  // unreachable for units
}

// The order (0, u, 2u, ...) in which repeated addition of u visits Z_b.
class Ordering {
 public:
  Ordering(Base base, Digit unit) : base_(base), unit_(unit) {
    detail::require_same_base(base, unit.base());
    if (!is_unit(base, unit.value())) {
      throw domain_error(std::to_string(unit.value()) + " is not a unit mod " +
                         std::to_string(base.value()));
    }
    const int b = base.value();
    sequence_.resize(b);
    position_.resize(b);
    for (int i = 0; i < b; ++i) {
      sequence_[i] = (i * unit.value()) % b;
      position_[sequence_[i]] = i;
    }
  }

  Base base() const noexcept { return base_; }
  Digit unit() const noexcept { return unit_; }
  const std::vector<int>& sequence() const noexcept { return sequence_; }

  // Index of digit d in the sequence, i.e. u^{-1} d mod b.
  int position(int d) const { return position_.at(d); }

  friend bool operator==(const Ordering& a, const Ordering& b) { return a.sequence_ == b.sequence_; }

 private:
  Base base_;
  Digit unit_;
  std::vector<int> sequence_;
  std::vector<int> position_;
};

inline Ordering ordering_from_unit(Base base, Digit u) { return Ordering(base, u); }

// One ordering per inverse pair {u, b-u}, represented by the smaller unit.
inline std::vector<Ordering> nondegenerate_orderings(Base base) {
  std::vector<Ordering> out;
  for (const Digit& u : units(base)) {
    if (u.value() <= base.value() - u.value()) out.emplace_back(base, u);
  }
  return out;
}

}  // namespace carrylab
