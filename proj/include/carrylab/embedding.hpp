#pragma once

// Digit embeddings: symbolic one-hots, or semantic vectors where each digit is
// a circular kernel centred on its position in an ordering of Z_b.

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "carrylab/error.hpp"
#include "carrylab/modnum.hpp"

namespace carrylab {

struct Symbolic {};

struct Semantic {
  Ordering ordering;
  std::vector<double> kernel;  // weight by circular distance 0, 1, ..., floor(b/2)
};

using EmbeddingScheme = std::variant<Symbolic, Semantic>;

inline int circular_distance(int i, int j, int b) {
  const int d = std::abs(i - j) % b;
  return std::min(d, b - d);
}

inline constexpr double kSemanticSigma = 0.8;

// Base 5 uses the fixed weights (0.5, 0.2, 0.05); other bases a circular
// Gaussian with sigma 0.8 normalized to sum to 1 around the circle.
inline std::vector<double> default_semantic_kernel(Base base) {
  const int b = base.value();
  if (b == 5) return {0.5, 0.2, 0.05};
  std::vector<double> k(static_cast<std::size_t>(b / 2 + 1));
  for (std::size_t d = 0; d < k.size(); ++d) {
    k[d] = std::exp(-static_cast<double>(d * d) / (2.0 * kSemanticSigma * kSemanticSigma));
  }
  double total = 0.0;
  for (int j = 0; j < b; ++j) total += k[static_cast<std::size_t>(circular_distance(0, j, b))];
  for (double& w : k) w /= total;
  return k;
}

inline Semantic make_semantic(Base base, Digit unit) { return Semantic{Ordering(base, unit), default_semantic_kernel(base)}; }

inline void validate_scheme(const EmbeddingScheme& scheme, Base base) {
  const auto* sem = std::get_if<Semantic>(&scheme);
  if (!sem) return;
  detail::require_same_base(base, sem->ordering.base());
  const int b = base.value();
  if (sem->kernel.size() < static_cast<std::size_t>(b / 2 + 1)) {
    throw config_error("semantic kernel needs weights for circular distances 0.." + std::to_string(b / 2));
  }
  double total = 0.0;
  for (int j = 0; j < b; ++j) total += sem->kernel[static_cast<std::size_t>(circular_distance(0, j, b))];
  if (std::abs(total - 1.0) > 1e-9) throw config_error("semantic kernel weights must sum to 1 around the circle");
}

inline std::vector<double> embed_digit(const EmbeddingScheme& scheme, Base base, Digit d) {
  detail::require_same_base(base, d.base());
  const int b = base.value();
  std::vector<double> v(static_cast<std::size_t>(b), 0.0);
  if (std::holds_alternative<Symbolic>(scheme)) {
    v[static_cast<std::size_t>(d.value())] = 1.0;
    return v;
  }
  const auto& sem = std::get<Semantic>(scheme);
  detail::require_same_base(base, sem.ordering.base());
  const int centre = sem.ordering.position(d.value());
  for (int j = 0; j < b; ++j) {
    const auto dist = static_cast<std::size_t>(circular_distance(centre, sem.ordering.position(j), b));
    if (dist >= sem.kernel.size()) throw config_error("semantic kernel missing distance " + std::to_string(dist));
    v[static_cast<std::size_t>(j)] = sem.kernel[dist];
  }
  return v;
}

inline std::string scheme_name(const EmbeddingScheme& scheme) {
  if (std::holds_alternative<Symbolic>(scheme)) return "symbolic";
  return "semantic";
}

}  // namespace carrylab
