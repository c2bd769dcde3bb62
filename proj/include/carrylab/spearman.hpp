#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "carrylab/error.hpp"

namespace carrylab {

// 1-based ranks; tied values share the average of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

struct SpearmanResult {
  double rho = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  bool exact = false;  // p from the full permutation distribution
};

inline constexpr std::size_t kExactPermutationLimit = 9;

// Spearman rank correlation with a two-sided p-value: exact over all n!
// permutations for n <= 9, otherwise Student's t with n - 2 degrees of freedom.
// A constant series gives NaN rho and p.
inline SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw domain_error("spearman: series lengths differ");
  if (xs.size() < 3) throw domain_error("spearman: need at least 3 points");
  SpearmanResult r;
  r.n = xs.size();
  const auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  r.rho = pearson(rx, ry);
  if (std::isnan(r.rho)) return r;

  if (r.n <= kExactPermutationLimit) {
    r.exact = true;
    std::sort(ry.begin(), ry.end());
    std::size_t extreme = 0, total = 0;
    const double threshold = std::abs(r.rho) - 1e-12;
    do {
      ++total;
      if (std::abs(pearson(rx, ry)) >= threshold) ++extreme;
    } while (std::next_permutation(ry.begin(), ry.end()));
    // next_permutation skips duplicate arrangements of tied ranks; each
    // distinct arrangement is equally likely, so the ratio is unchanged.
    r.p = static_cast<double>(extreme) / static_cast<double>(total);
    return r;
  }

  if (std::abs(r.rho) >= 1.0) {
    r.p = 0.0;
    return r;
  }
  const double df = static_cast<double>(r.n - 2);
  const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
  const boost::math::students_t dist(df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return r;
}

}  // namespace carrylab
