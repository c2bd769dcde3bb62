#pragma once

/**
 * Least-squares fit of a / (1 + exp(-g (x - c0))) to a learning curve.
 *
 * The curve is truncated at its (first) maximum before fitting, so late
 * fluctuations do not pull the fit. Levenberg-Marquardt is run from five
 * seeded starts; if none converges to an admissible solution the fit is
 * marked failed and excluded downstream.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "carrylab/error.hpp"

namespace carrylab {

enum class FitStatus { Ok, Failed };

inline const char* to_string(FitStatus s) { return s == FitStatus::Ok ? "ok" : "failed"; }

struct SigmoidFit {
  double asymptote = std::numeric_limits<double>::quiet_NaN();
  double growth_rate = std::numeric_limits<double>::quiet_NaN();
  double critical_point = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  FitStatus status = FitStatus::Failed;
  std::size_t window = 0;  // points used (curve up to its maximum)
  double window_end = std::numeric_limits<double>::quiet_NaN();

  bool ok() const noexcept { return status == FitStatus::Ok; }
};

inline double sigmoid(double x, double a, double g, double c0) { return a / (1.0 + std::exp(-g * (x - c0))); }

inline constexpr double kMaxAsymptote = 1.05;

namespace detail {

struct LmResult {
  std::array<double, 3> theta{};
  double sse = 0.0;
  bool converged = false;
};

inline double sse_of(std::span<const double> x, std::span<const double> y, const std::array<double, 3>& th) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - sigmoid(x[i], th[0], th[1], th[2]);
    s += r * r;
  }
  return s;
}

// Solves the 3x3 system A d = v by Gaussian elimination with partial pivoting.
inline bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> v, std::array<double, 3>& d) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[c], a[piv]);
    std::swap(v[c], v[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
      v[r] -= f * v[c];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = v[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * d[k];
    d[r] = s / a[r][r];
  }
  return std::isfinite(d[0]) && std::isfinite(d[1]) && std::isfinite(d[2]);
}

inline LmResult levenberg_marquardt(std::span<const double> x, std::span<const double> y, std::array<double, 3> th,
                                    int max_iterations = 1000) {
  double lambda = 1e-3;
  double sse = sse_of(x, y, th);
  LmResult out{th, sse, false};
  for (int it = 0; it < max_iterations; ++it) {
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-th[1] * (x[i] - th[2])));
      const double ds = th[0] * s * (1.0 - s);
      const std::array<double, 3> j{s, ds * (x[i] - th[2]), -ds * th[1]};
      const double r = y[i] - th[0] * s;
      for (int a = 0; a < 3; ++a) {
        jtr[a] += j[a] * r;
        for (int b = 0; b < 3; ++b) jtj[a][b] += j[a] * j[b];
      }
    }
    const double grad_norm = std::sqrt(jtr[0] * jtr[0] + jtr[1] * jtr[1] + jtr[2] * jtr[2]);
    if (grad_norm < 1e-14 || sse < 1e-28) {
      out = {th, sse, true};
      return out;
    }

    bool improved = false;
    while (lambda < 1e16) {
      auto damped = jtj;
      for (int a = 0; a < 3; ++a) damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
      std::array<double, 3> step{};
      if (!solve3(damped, jtr, step)) {
        lambda *= 10.0;
        continue;
      }
      const std::array<double, 3> cand{th[0] + step[0], th[1] + step[1], th[2] + step[2]};
      const double cand_sse = sse_of(x, y, cand);
      if (std::isfinite(cand_sse) && cand_sse <= sse) {
        const double rel_step = std::sqrt(step[0] * step[0] + step[1] * step[1] + step[2] * step[2]) /
                                (std::sqrt(th[0] * th[0] + th[1] * th[1] + th[2] * th[2]) + 1e-12);
        const double rel_drop = (sse - cand_sse) / std::max(sse, 1e-300);
        th = cand;
        sse = cand_sse;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel_step < 1e-13 || (rel_drop < 1e-15 && rel_step < 1e-9)) {
          out = {th, sse, true};
          return out;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No descent direction left: at a (local) minimum up to round-off.
      out = {th, sse, true};
      return out;
    }
  }
  out = {th, sse, false};
  return out;
}

}  // namespace detail

inline SigmoidFit fit_sigmoid(std::span<const double> epochs, std::span<const double> accuracy) {
  if (epochs.size() != accuracy.size()) throw domain_error("fit_sigmoid: series lengths differ");
  if (epochs.size() < 4) throw domain_error("fit_sigmoid: need at least 4 points");

  SigmoidFit fit;
  const auto peak = static_cast<std::size_t>(std::max_element(accuracy.begin(), accuracy.end()) - accuracy.begin());
  const std::size_t n = peak + 1;
  fit.window = n;
  fit.window_end = epochs[peak];
  const auto x = epochs.first(n);
  const auto y = accuracy.first(n);
  if (n < 4) return fit;
  const double y_max = y[peak];
  const double y_min = *std::min_element(y.begin(), y.end());
  if (!(y_max > y_min)) return fit;

  const double x_lo = x.front(), x_hi = x.back();
  const double range = std::max(x_hi - x_lo, 1e-12);
  const double a0 = std::max(y_max, 1e-3);
  double max_slope = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[i - 1]) max_slope = std::max(max_slope, (y[i] - y[i - 1]) / (x[i] - x[i - 1]));
  }
  // Steepest slope of a/(1+e^{-g(x-c)}) is a g / 4.
  const double g0 = max_slope > 0.0 ? 4.0 * max_slope / a0 : 4.0 / range;

  detail::LmResult best;
  best.sse = std::numeric_limits<double>::infinity();
  for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto r = detail::levenberg_marquardt(x, y, {a0, g0, x_lo + q * range});
    const bool admissible = r.converged && std::isfinite(r.sse) && r.theta[0] >= 0.0 && r.theta[0] <= kMaxAsymptote &&
                            r.theta[1] > 0.0 && std::isfinite(r.theta[2]);
    if (admissible && r.sse < best.sse) best = r;
  }
  if (!std::isfinite(best.sse)) return fit;

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean) * (v - mean);

  fit.asymptote = best.theta[0];
  fit.growth_rate = best.theta[1];
  fit.critical_point = best.theta[2];
  fit.r_squared = 1.0 - best.sse / ss_tot;
  fit.status = FitStatus::Ok;
  return fit;
}

}  // namespace carrylab
