#pragma once

/**
 * Multi-digit addition under an arbitrary carry function.
 *
 *   s_j     = n_j + m_j + c_j
 *   c_{j+1} = f(n_j, m_j) + f(n_j + m_j, c_j),   c_1 = 0
 *
 * all mod b. Numbers are fixed-length digit tuples stored least significant
 * digit first; the carry out of the most significant place is discarded, so
 * k-digit addition is a binary operation on (Z_b)^k.
 */

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "carrylab/carry.hpp"
#include "carrylab/error.hpp"
#include "carrylab/modnum.hpp"
#include "carrylab/sampling.hpp"

namespace carrylab {

class BaseNumber {
 public:
  // digits[j] is the (j+1)-th least significant digit.
  BaseNumber(Base base, std::vector<std::uint8_t> digits_lsb) : base_(base), digits_(std::move(digits_lsb)) {
    if (digits_.empty()) throw domain_error("a base number needs at least one digit");
    for (auto d : digits_) {
      if (d >= base.value()) throw domain_error("digit " + std::to_string(d) + " out of range for base " + std::to_string(base.value()));
    }
  }

  // Digits in the human order (n_k, ..., n_1).
  static BaseNumber from_msb(Base base, std::vector<std::uint8_t> digits_msb) {
    std::reverse(digits_msb.begin(), digits_msb.end());
    return BaseNumber(base, std::move(digits_msb));
  }

  static BaseNumber zero(Base base, std::size_t length) {
    return BaseNumber(base, std::vector<std::uint8_t>(length, 0));
  }

  // Standard positional encoding of value mod b^length.
  static BaseNumber from_integer(Base base, std::uint64_t value, std::size_t length) {
    std::vector<std::uint8_t> digits(length);
    for (auto& d : digits) {
      d = static_cast<std::uint8_t>(value % static_cast<std::uint64_t>(base.value()));
      value /= static_cast<std::uint64_t>(base.value());
    }
    return BaseNumber(base, std::move(digits));
  }

  Base base() const noexcept { return base_; }
  std::size_t length() const noexcept { return digits_.size(); }
  std::span<const std::uint8_t> digits() const noexcept { return digits_; }
  int digit(std::size_t j) const { return digits_.at(j); }

  // Standard positional value; this is also the row/column index used by
  // depth-k tables (lexicographic order on (n_k, ..., n_1)).
  std::uint64_t to_integer() const {
    std::uint64_t v = 0;
    for (auto it = digits_.rbegin(); it != digits_.rend(); ++it) v = v * static_cast<std::uint64_t>(base_.value()) + *it;
    return v;
  }

  BaseNumber padded(std::size_t length) const {
    if (length < digits_.size()) throw domain_error("cannot pad a number to a shorter length");
    auto d = digits_;
    d.resize(length, 0);
    return BaseNumber(base_, std::move(d));
  }

  // Most significant digit first, e.g. "(0,2,2)".
  std::string to_string() const {
    std::string s = "(";
    for (auto it = digits_.rbegin(); it != digits_.rend(); ++it) {
      if (it != digits_.rbegin()) s += ',';
      s += std::to_string(*it);
    }
    return s + ")";
  }

  friend bool operator==(const BaseNumber&, const BaseNumber&) = default;

 private:
  Base base_;
  std::vector<std::uint8_t> digits_;
};

namespace detail {

// out = n + m over equal-length LSB-first digit spans; returns the discarded
// final carry. out may alias n or m.
inline int add_digits(const CarryTable& f, std::span<const std::uint8_t> n, std::span<const std::uint8_t> m,
                      std::span<std::uint8_t> out) {
  const int b = f.size();
  int carry = 0;
  for (std::size_t j = 0; j < n.size(); ++j) {
    const int partial = (n[j] + m[j]) % b;
    const int next = (f(n[j], m[j]) + f(partial, carry)) % b;
    out[j] = static_cast<std::uint8_t>((partial + carry) % b);
    carry = next;
  }
  return carry;
}

inline std::uint64_t checked_power(int base, std::size_t exponent, std::uint64_t limit, const char* what) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    v *= static_cast<std::uint64_t>(base);
    if (v > limit) {
      throw resource_limit_error(std::string(what) + ": " + std::to_string(base) + "^" + std::to_string(exponent) +
                                 " exceeds limit " + std::to_string(limit));
    }
  }
  return v;
}

inline std::uint64_t power_or_saturate(int base, std::size_t exponent) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (v > (UINT64_MAX / static_cast<std::uint64_t>(base))) return UINT64_MAX;
    v *= static_cast<std::uint64_t>(base);
  }
  return v;
}

inline void integer_to_digits(std::uint64_t value, int b, std::span<std::uint8_t> out) {
  for (auto& d : out) {
    d = static_cast<std::uint8_t>(value % static_cast<std::uint64_t>(b));
    value /= static_cast<std::uint64_t>(b);
  }
}

inline std::uint64_t digits_to_integer(std::span<const std::uint8_t> digits, int b) {
  std::uint64_t v = 0;
  for (std::size_t j = digits.size(); j-- > 0;) v = v * static_cast<std::uint64_t>(b) + digits[j];
  return v;
}

}  // namespace detail

inline BaseNumber add(const CarryTable& f, const BaseNumber& n, const BaseNumber& m) {
  detail::require_same_base(f.base(), n.base());
  detail::require_same_base(f.base(), m.base());
  const std::size_t len = std::max(n.length(), m.length());
  const BaseNumber a = n.padded(len);
  const BaseNumber c = m.padded(len);
  std::vector<std::uint8_t> out(len);
  detail::add_digits(f, a.digits(), c.digits(), out);
  return BaseNumber(f.base(), std::move(out));
}

// x_0 = 0, x_{i+1} = x_i + g.
inline std::vector<BaseNumber> counting_orbit(const CarryTable& f, const BaseNumber& g, std::size_t steps) {
  detail::require_same_base(f.base(), g.base());
  std::vector<BaseNumber> out;
  out.reserve(steps + 1);
  out.push_back(BaseNumber::zero(f.base(), g.length()));
  for (std::size_t i = 0; i < steps; ++i) out.push_back(add(f, out.back(), g));
  return out;
}

inline constexpr std::uint64_t kMaxOrbitSize = 1'000'000;
inline constexpr std::uint64_t kExhaustivePairLimit = 1'000'000;

struct EquivalenceResult {
  bool equivalent = false;
  CheckMode mode = CheckMode::Exhaustive;
  std::uint64_t pairs_checked = 0;
};

// Whether k-digit addition under f is isomorphic to Z_{b^k} via the counting
// orbit of (0,...,0,1): the orbit must be a single cycle through all b^k
// tuples, and rep(i) + rep(j) must equal rep(i + j mod b^k).
inline EquivalenceResult integer_equivalence_report(const CarryTable& f, std::size_t k) {
  if (k == 0) throw domain_error("digit length must be positive");
  const int b = f.size();
  const std::uint64_t count = detail::checked_power(b, k, kMaxOrbitSize, "integer equivalence orbit");

  // rep[i] is the encoded tuple visited at step i; index_of inverts it.
  std::vector<std::uint32_t> rep(count);
  std::vector<std::uint32_t> index_of(count, UINT32_MAX);
  std::vector<std::uint8_t> x(k, 0), g(k, 0), tmp(k, 0);
  g[0] = 1;
  EquivalenceResult result;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto code = static_cast<std::uint32_t>(detail::digits_to_integer(x, b));
    if (index_of[code] != UINT32_MAX) return result;  // revisited early
    index_of[code] = static_cast<std::uint32_t>(i);
    rep[i] = code;
    detail::add_digits(f, x, g, x);
  }
  if (detail::digits_to_integer(x, b) != 0) return result;

  auto pair_ok = [&](std::uint64_t i, std::uint64_t j) {
    std::vector<std::uint8_t> a(k), c(k);
    detail::integer_to_digits(rep[i], b, a);
    detail::integer_to_digits(rep[j], b, c);
    detail::add_digits(f, a, c, tmp);
    return detail::digits_to_integer(tmp, b) == rep[(i + j) % count];
  };

  if (count * count <= kExhaustivePairLimit) {
    result.mode = CheckMode::Exhaustive;
    for (std::uint64_t i = 0; i < count; ++i)
      for (std::uint64_t j = 0; j < count; ++j) {
        ++result.pairs_checked;
        if (!pair_ok(i, j)) return result;
      }
  } else {
    result.mode = CheckMode::Sampled;
    for (std::uint64_t s = 0; s < kEquivalenceSamples; ++s) {
      const auto i = bounded(counter_hash(kSamplingSeed, 2 * s), static_cast<std::uint32_t>(count));
      const auto j = bounded(counter_hash(kSamplingSeed, 2 * s + 1), static_cast<std::uint32_t>(count));
      ++result.pairs_checked;
      if (!pair_ok(i, j)) return result;
    }
  }
  result.equivalent = true;
  return result;
}

inline bool integer_equivalence_check(const CarryTable& f, std::size_t k) {
  return integer_equivalence_report(f, k).equivalent;
}

// F_k: the carry c_{k+1} out of digit k for every pair of k-digit operands,
// indexed by their standard positional values.
class DepthKTable {
 public:
  DepthKTable(Base base, std::size_t depth, std::vector<std::uint8_t> entries)
      : base_(base), depth_(depth), side_(detail::power_or_saturate(base.value(), depth)), entries_(std::move(entries)) {
    if (entries_.size() != side_ * side_) throw domain_error("depth-k table has wrong number of entries");
  }

  Base base() const noexcept { return base_; }
  std::size_t depth() const noexcept { return depth_; }
  std::uint64_t side() const noexcept { return side_; }
  int operator()(std::uint64_t n, std::uint64_t m) const noexcept { return entries_[n * side_ + m]; }
  std::span<const std::uint8_t> entries() const noexcept { return entries_; }

  friend bool operator==(const DepthKTable&, const DepthKTable&) = default;

 private:
  Base base_;
  std::size_t depth_;
  std::uint64_t side_;
  std::vector<std::uint8_t> entries_;
};

inline constexpr std::uint64_t kMaxDepthTableEntries = 100'000'000;

// Dynamic program over digit positions: the carry out of digit j+1 depends only
// on the top digits at j+1 and the carry out of the low j digits, which is the
// previous layer's table.
inline DepthKTable depth_k_table(const CarryTable& f, std::size_t k) {
  if (k == 0) throw domain_error("depth must be positive");
  const int b = f.size();
  detail::checked_power(b, 2 * k, kMaxDepthTableEntries, "depth-k table");
  const auto ub = static_cast<std::uint64_t>(b);

  std::vector<std::uint8_t> prev(1, 0);  // depth 0: carry into digit 1 is 0
  std::uint64_t prev_side = 1;
  for (std::size_t j = 1; j <= k; ++j) {
    const std::uint64_t side = prev_side * ub;
    std::vector<std::uint8_t> cur(side * side);
    for (std::uint64_t n = 0; n < side; ++n) {
      const int top_n = static_cast<int>(n / prev_side);
      const std::uint64_t low_n = n % prev_side;
      for (std::uint64_t m = 0; m < side; ++m) {
        const int top_m = static_cast<int>(m / prev_side);
        const std::uint64_t low_m = m % prev_side;
        const int carry_in = prev[low_n * prev_side + low_m];
        cur[n * side + m] = static_cast<std::uint8_t>((f(top_n, top_m) + f((top_n + top_m) % b, carry_in)) % b);
      }
    }
    prev = std::move(cur);
    prev_side = side;
  }
  return DepthKTable(f.base(), k, std::move(prev));
}

struct AssociativityResult {
  double fraction = 1.0;
  CheckMode mode = CheckMode::Exhaustive;
  std::uint64_t samples = 0;  // triplets evaluated
  std::uint64_t associative = 0;
};

namespace detail {

// Visits triplets of `length`-digit numbers, exhaustively when b^{3L} <= limit
// (or when forced), otherwise `samples` seeded uniform draws. visit returns
// false to stop early.
template <typename Visit>
CheckMode for_each_triplet(int b, std::size_t length, std::uint64_t exhaustive_limit, std::uint64_t samples,
                           Visit&& visit) {
  const std::uint64_t total = power_or_saturate(b, 3 * length);
  std::vector<std::uint8_t> n(length), m(length), p(length);
  if (total <= exhaustive_limit) {
    const std::uint64_t side = power_or_saturate(b, length);
    for (std::uint64_t i = 0; i < side; ++i) {
      integer_to_digits(i, b, n);
      for (std::uint64_t j = 0; j < side; ++j) {
        integer_to_digits(j, b, m);
        for (std::uint64_t l = 0; l < side; ++l) {
          integer_to_digits(l, b, p);
          if (!visit(std::span<const std::uint8_t>(n), std::span<const std::uint8_t>(m),
                     std::span<const std::uint8_t>(p)))
            return CheckMode::Exhaustive;
        }
      }
    }
    return CheckMode::Exhaustive;
  }
  const auto ub = static_cast<std::uint32_t>(b);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::uint64_t base_counter = s * 3 * length;
    for (std::size_t d = 0; d < length; ++d) {
      n[d] = static_cast<std::uint8_t>(bounded(counter_hash(kSamplingSeed, base_counter + d), ub));
      m[d] = static_cast<std::uint8_t>(bounded(counter_hash(kSamplingSeed, base_counter + length + d), ub));
      p[d] = static_cast<std::uint8_t>(bounded(counter_hash(kSamplingSeed, base_counter + 2 * length + d), ub));
    }
    if (!visit(std::span<const std::uint8_t>(n), std::span<const std::uint8_t>(m), std::span<const std::uint8_t>(p)))
      break;
  }
  return CheckMode::Sampled;
}

inline bool associates(const CarryTable& f, std::span<const std::uint8_t> n, std::span<const std::uint8_t> m,
                       std::span<const std::uint8_t> p, std::span<std::uint8_t> s1, std::span<std::uint8_t> s2) {
  add_digits(f, n, m, s1);
  add_digits(f, s1, p, s1);
  add_digits(f, m, p, s2);
  add_digits(f, n, s2, s2);
  return std::equal(s1.begin(), s1.end(), s2.begin());
}

}  // namespace detail

// Fraction of triplets of (depth + 1)-digit numbers with (n + m) + p = n + (m + p).
inline AssociativityResult associativity_fraction(const CarryTable& f, std::size_t depth) {
  const std::size_t length = depth + 1;
  std::vector<std::uint8_t> s1(length), s2(length);
  AssociativityResult r;
  r.mode = detail::for_each_triplet(f.size(), length, kExhaustiveLimit, kAssociativitySamples,
                                    [&](auto n, auto m, auto p) {
                                      ++r.samples;
                                      if (detail::associates(f, n, m, p, s1, s2)) ++r.associative;
                                      return true;
                                    });
  r.fraction = r.samples == 0 ? 1.0 : static_cast<double>(r.associative) / static_cast<double>(r.samples);
  return r;
}

struct EquivarianceResult {
  bool holds = true;
  CheckMode mode = CheckMode::Exhaustive;  // Sampled means "no counterexample among samples"
  std::uint64_t checked = 0;
};

// Associativity for all triplets of length <= k. Checking length k suffices:
// the low j digits of a k-digit sum depend only on the low j digits of the
// operands, so a failure at length j < k is also a failure at length k.
inline EquivarianceResult is_k_equivariant(const CarryTable& f, std::size_t k) {
  if (k == 0) throw domain_error("k must be positive");
  std::vector<std::uint8_t> s1(k), s2(k);
  EquivarianceResult r;
  r.mode = detail::for_each_triplet(f.size(), k, kExhaustiveLimit, kAssociativitySamples, [&](auto n, auto m, auto p) {
    ++r.checked;
    if (!detail::associates(f, n, m, p, s1, s2)) {
      r.holds = false;
      return false;
    }
    return true;
  });
  return r;
}

}  // namespace carrylab
