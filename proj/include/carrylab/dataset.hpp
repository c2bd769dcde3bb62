#pragma once

/**
 * Interleaved addition problems.
 *
 * The input stream for n + m is (n_1, m_1, *, n_2, m_2, *, ..., n_k, m_k, *),
 * least significant digits first. The separator * is the all-zero vector and
 * marks where the network must emit the next answer digit s_j.
 */

#include <cstddef>
#include <cstdint>
#include <vector>

#include "carrylab/addition.hpp"
#include "carrylab/embedding.hpp"
#include "carrylab/rnn.hpp"
#include "carrylab/sampling.hpp"

namespace carrylab {

inline Sequence build_sequence(const CarryTable& f, const BaseNumber& n, const BaseNumber& m,
                               const EmbeddingScheme& scheme) {
  const Base base = f.base();
  detail::require_same_base(base, n.base());
  detail::require_same_base(base, m.base());
  const std::size_t len = std::max(n.length(), m.length());
  const BaseNumber a = n.padded(len), c = m.padded(len);
  const BaseNumber sum = add(f, a, c);
  const int b = base.value();
  const auto ub = static_cast<std::size_t>(b);

  // Embeddings are looked up once per digit value.
  std::vector<std::vector<double>> table;
  for (int d = 0; d < b; ++d) table.push_back(embed_digit(scheme, base, Digit(base, d)));

  Sequence seq;
  seq.width = b;
  seq.tokens.assign(3 * len * ub, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    const auto& en = table[static_cast<std::size_t>(a.digit(j))];
    const auto& em = table[static_cast<std::size_t>(c.digit(j))];
    std::copy(en.begin(), en.end(), seq.tokens.begin() + static_cast<std::ptrdiff_t>((3 * j) * ub));
    std::copy(em.begin(), em.end(), seq.tokens.begin() + static_cast<std::ptrdiff_t>((3 * j + 1) * ub));
    seq.answer_steps.push_back(static_cast<int>(3 * j + 2));
    seq.targets.push_back(sum.digit(j));
  }
  return seq;
}

// Operands encoded by their standard positional values.
struct OperandPair {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  friend bool operator==(const OperandPair&, const OperandPair&) = default;
};

// Every ordered pair of `length`-digit numbers, in lexicographic order.
inline std::vector<OperandPair> all_pairs(Base base, std::size_t length, std::uint64_t limit = 100'000'000) {
  const std::uint64_t side = detail::checked_power(base.value(), length, limit, "operand set");
  if (side * side > limit) throw resource_limit_error("too many operand pairs");
  std::vector<OperandPair> out;
  out.reserve(side * side);
  for (std::uint64_t n = 0; n < side; ++n)
    for (std::uint64_t m = 0; m < side; ++m) out.push_back({n, m});
  return out;
}

// `count` pairs with independent uniform digits, a pure function of the seed.
inline std::vector<OperandPair> sample_pairs(Base base, std::size_t length, std::size_t count, std::uint64_t seed) {
  const auto b = static_cast<std::uint32_t>(base.value());
  std::vector<OperandPair> out(count);
  std::uint64_t counter = 0;
  for (auto& p : out) {
    std::uint64_t n = 0, m = 0;
    for (std::size_t j = 0; j < length; ++j) n = n * b + bounded(counter_hash(seed, counter++), b);
    for (std::size_t j = 0; j < length; ++j) m = m * b + bounded(counter_hash(seed, counter++), b);
    p = {n, m};
  }
  return out;
}

inline std::vector<Sequence> build_sequences(const CarryTable& f, std::span<const OperandPair> pairs, std::size_t length,
                                             const EmbeddingScheme& scheme) {
  std::vector<Sequence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(build_sequence(f, BaseNumber::from_integer(f.base(), p.n, length),
                                 BaseNumber::from_integer(f.base(), p.m, length), scheme));
  }
  return out;
}

}  // namespace carrylab
