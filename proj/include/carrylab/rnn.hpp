#pragma once

/**
 * Minimal recurrent networks for digit-serial addition.
 *
 * One recurrent layer (GRU or LSTM) with input and hidden width b, followed by
 * a linear b -> b decoder applied at every step. Everything is double
 * precision and written out by hand: forward pass, cross-entropy at the
 * answer positions, backpropagation through time, and Adam.
 *
 * GRU (reset gate inside the candidate's recurrent product):
 *   z = s(Wz x + Uz h + bz)          r = s(Wr x + Ur h + br)
 *   c = tanh(Wh x + Uh (r * h) + bh) h' = (1 - z) * h + z * c
 *
 * LSTM (gate order i, f, g, o):
 *   i, f, o = s(W x + U h + b)       g = tanh(Wg x + Ug h + bg)
 *   c' = f * c + i * g               h' = o * tanh(c')
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carrylab/error.hpp"

namespace carrylab {

enum class CellKind { GRU, LSTM };

inline const char* to_string(CellKind k) { return k == CellKind::GRU ? "gru" : "lstm"; }

inline CellKind cell_kind_from_string(const std::string& s) {
  if (s == "gru" || s == "GRU") return CellKind::GRU;
  if (s == "lstm" || s == "LSTM") return CellKind::LSTM;
  throw config_error("unknown cell kind '" + s + "' (expected gru or lstm)");
}

inline int gate_count(CellKind k) { return k == CellKind::GRU ? 3 : 4; }

// All weights in one flat buffer:
//   input weights  W[g]  (width x width, row = hidden unit) for each gate g
//   hidden weights U[g]  (width x width)
//   biases         b[g]  (width)
//   decoder        Wo    (width x width, row = output class), bo (width)
// The same type holds gradients.
class CellParams {
 public:
  CellParams(CellKind kind, int width) : kind_(kind), width_(width) {
    if (width < 1) throw domain_error("cell width must be positive");
    const auto h = static_cast<std::size_t>(width);
    const auto g = static_cast<std::size_t>(gate_count(kind));
    values_.assign(g * (2 * h * h + h) + h * h + h, 0.0);
  }

  CellKind kind() const noexcept { return kind_; }
  int width() const noexcept { return width_; }
  int gates() const noexcept { return gate_count(kind_); }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double* input_weights(int gate) noexcept { return values_.data() + input_offset(gate); }
  const double* input_weights(int gate) const noexcept { return values_.data() + input_offset(gate); }
  double* hidden_weights(int gate) noexcept { return values_.data() + hidden_offset(gate); }
  const double* hidden_weights(int gate) const noexcept { return values_.data() + hidden_offset(gate); }
  double* bias(int gate) noexcept { return values_.data() + bias_offset(gate); }
  const double* bias(int gate) const noexcept { return values_.data() + bias_offset(gate); }
  double* decoder_weights() noexcept { return values_.data() + decoder_offset(); }
  const double* decoder_weights() const noexcept { return values_.data() + decoder_offset(); }
  double* decoder_bias() noexcept { return values_.data() + decoder_offset() + sq(); }
  const double* decoder_bias() const noexcept { return values_.data() + decoder_offset() + sq(); }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  friend bool operator==(const CellParams&, const CellParams&) = default;

 private:
  std::size_t sq() const noexcept { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(width_); }
  std::size_t input_offset(int gate) const noexcept { return static_cast<std::size_t>(gate) * sq(); }
  std::size_t hidden_offset(int gate) const noexcept {
    return static_cast<std::size_t>(gates()) * sq() + static_cast<std::size_t>(gate) * sq();
  }
  std::size_t bias_offset(int gate) const noexcept {
    return 2 * static_cast<std::size_t>(gates()) * sq() + static_cast<std::size_t>(gate) * static_cast<std::size_t>(width_);
  }
  std::size_t decoder_offset() const noexcept {
    return static_cast<std::size_t>(gates()) * (2 * sq() + static_cast<std::size_t>(width_));
  }

  CellKind kind_;
  int width_;
  std::vector<double> values_;
};

// One input sequence: `steps` tokens of `width` reals, plus the answer steps
// and their target classes.
struct Sequence {
  int width = 0;
  std::vector<double> tokens;  // steps x width, row-major
  std::vector<int> answer_steps;
  std::vector<int> targets;

  std::size_t steps() const noexcept { return width == 0 ? 0 : tokens.size() / static_cast<std::size_t>(width); }
  std::span<const double> token(std::size_t t) const {
    return {tokens.data() + t * static_cast<std::size_t>(width), static_cast<std::size_t>(width)};
  }
};

using SequenceBatch = std::vector<Sequence>;

// Activations of one sequence, kept for backpropagation.
struct ForwardTrace {
  std::size_t steps = 0;
  int width = 0;
  std::vector<double> hidden;  // (steps + 1) x width, hidden[0] = 0
  std::vector<double> cell;    // LSTM only: (steps + 1) x width
  std::vector<double> gates;   // steps x gates x width, post-activation
  std::vector<double> logits;  // steps x width

  std::span<const double> hidden_at(std::size_t t) const {
    return {hidden.data() + t * static_cast<std::size_t>(width), static_cast<std::size_t>(width)};
  }
  std::span<const double> logits_at(std::size_t t) const {
    return {logits.data() + t * static_cast<std::size_t>(width), static_cast<std::size_t>(width)};
  }
};

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out[i] = sum_j w[i*n + j] * x[j], accumulated.
inline void matvec_add(const double* w, const double* x, double* out, int n) {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = w + static_cast<std::ptrdiff_t>(i) * n;
    for (int j = 0; j < n; ++j) s += row[j] * x[j];
    out[i] += s;
  }
}

// out[j] += sum_i w[i*n + j] * d[i].
inline void matvec_t_add(const double* w, const double* d, double* out, int n) {
  for (int i = 0; i < n; ++i) {
    const double* row = w + static_cast<std::ptrdiff_t>(i) * n;
    for (int j = 0; j < n; ++j) out[j] += row[j] * d[i];
  }
}

// g[i*n + j] += d[i] * x[j].
inline void outer_add(const double* d, const double* x, double* g, int n) {
  for (int i = 0; i < n; ++i) {
    double* row = g + static_cast<std::ptrdiff_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += d[i] * x[j];
  }
}

inline double log_sum_exp(const double* v, int n) {
  double mx = v[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace detail

inline void forward_into(const CellParams& p, const Sequence& seq, ForwardTrace& tr) {
  const int H = p.width();
  if (seq.width != H) throw domain_error("token width " + std::to_string(seq.width) + " != cell width " + std::to_string(H));
  const int G = p.gates();
  const std::size_t T = seq.steps();
  const auto uh = static_cast<std::size_t>(H);
  tr.steps = T;
  tr.width = H;
  tr.hidden.assign((T + 1) * uh, 0.0);
  tr.gates.assign(T * static_cast<std::size_t>(G) * uh, 0.0);
  tr.logits.assign(T * uh, 0.0);
  if (p.kind() == CellKind::LSTM) tr.cell.assign((T + 1) * uh, 0.0);
  else tr.cell.clear();

  std::vector<double> tmp(uh), rh(uh);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = seq.tokens.data() + t * uh;
    const double* hp = tr.hidden.data() + t * uh;
    double* h = tr.hidden.data() + (t + 1) * uh;
    double* gt = tr.gates.data() + t * static_cast<std::size_t>(G) * uh;

    if (p.kind() == CellKind::GRU) {
      double* z = gt;
      double* r = gt + uh;
      double* c = gt + 2 * uh;
      for (int gate = 0; gate < 2; ++gate) {
        double* a = gt + static_cast<std::size_t>(gate) * uh;
        std::copy(p.bias(gate), p.bias(gate) + H, a);
        detail::matvec_add(p.input_weights(gate), x, a, H);
        detail::matvec_add(p.hidden_weights(gate), hp, a, H);
        for (int i = 0; i < H; ++i) a[i] = detail::logistic(a[i]);
      }
      for (int i = 0; i < H; ++i) rh[static_cast<std::size_t>(i)] = r[i] * hp[i];
      std::copy(p.bias(2), p.bias(2) + H, c);
      detail::matvec_add(p.input_weights(2), x, c, H);
      detail::matvec_add(p.hidden_weights(2), rh.data(), c, H);
      for (int i = 0; i < H; ++i) {
        c[i] = std::tanh(c[i]);
        h[i] = (1.0 - z[i]) * hp[i] + z[i] * c[i];
      }
    } else {
      const double* cp = tr.cell.data() + t * uh;
      double* cn = tr.cell.data() + (t + 1) * uh;
      for (int gate = 0; gate < 4; ++gate) {
        double* a = gt + static_cast<std::size_t>(gate) * uh;
        std::copy(p.bias(gate), p.bias(gate) + H, a);
        detail::matvec_add(p.input_weights(gate), x, a, H);
        detail::matvec_add(p.hidden_weights(gate), hp, a, H);
        for (int i = 0; i < H; ++i) a[i] = gate == 2 ? std::tanh(a[i]) : detail::logistic(a[i]);
      }
      const double* ig = gt;
      const double* fg = gt + uh;
      const double* gg = gt + 2 * uh;
      const double* og = gt + 3 * uh;
      for (int i = 0; i < H; ++i) {
        cn[i] = fg[i] * cp[i] + ig[i] * gg[i];
        h[i] = og[i] * std::tanh(cn[i]);
      }
    }

    double* lg = tr.logits.data() + t * uh;
    std::copy(p.decoder_bias(), p.decoder_bias() + H, lg);
    detail::matvec_add(p.decoder_weights(), h, lg, H);
    for (int i = 0; i < H; ++i) {
      if (!std::isfinite(h[i]) || !std::isfinite(lg[i])) throw numeric_error("non-finite activation", t);
    }
  }
}

inline ForwardTrace forward(const CellParams& p, const Sequence& seq) {
  ForwardTrace tr;
  forward_into(p, seq, tr);
  return tr;
}

inline std::vector<ForwardTrace> forward(const CellParams& p, std::span<const Sequence> batch) {
  std::vector<ForwardTrace> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) forward_into(p, batch[i], out[i]);
  return out;
}

inline std::size_t answer_count(std::span<const Sequence> batch) {
  std::size_t n = 0;
  for (const auto& s : batch) n += s.answer_steps.size();
  return n;
}

// Sum of -log softmax(logits)[target] over the answer steps of one trace.
inline double sequence_nll(const ForwardTrace& tr, const Sequence& seq) {
  double loss = 0.0;
  for (std::size_t a = 0; a < seq.answer_steps.size(); ++a) {
    const auto lg = tr.logits_at(static_cast<std::size_t>(seq.answer_steps[a]));
    loss += detail::log_sum_exp(lg.data(), tr.width) - lg[static_cast<std::size_t>(seq.targets[a])];
  }
  return loss;
}

// Mean cross-entropy over all answer positions of the batch.
inline double loss(const CellParams& p, std::span<const Sequence> batch) {
  const std::size_t n = answer_count(batch);
  if (n == 0) return 0.0;
  ForwardTrace tr;
  double total = 0.0;
  for (const auto& s : batch) {
    forward_into(p, s, tr);
    total += sequence_nll(tr, s);
  }
  return total / static_cast<double>(n);
}

// Adds scale * d(sequence_nll)/d(params) into grads.
inline void backward_accumulate(const CellParams& p, const Sequence& seq, const ForwardTrace& tr, double scale,
                                CellParams& grads) {
  const int H = p.width();
  const auto uh = static_cast<std::size_t>(H);
  const int G = p.gates();
  const std::size_t T = tr.steps;

  // dL/dh_t contributed by the decoder at answer steps.
  std::vector<double> dh_out(T * uh, 0.0);
  std::vector<double> dlog(uh);
  for (std::size_t a = 0; a < seq.answer_steps.size(); ++a) {
    const auto t = static_cast<std::size_t>(seq.answer_steps[a]);
    const double* lg = tr.logits.data() + t * uh;
    const double lse = detail::log_sum_exp(lg, H);
    for (int i = 0; i < H; ++i) dlog[static_cast<std::size_t>(i)] = std::exp(lg[i] - lse) * scale;
    dlog[static_cast<std::size_t>(seq.targets[a])] -= scale;
    const double* h = tr.hidden.data() + (t + 1) * uh;
    detail::outer_add(dlog.data(), h, grads.decoder_weights(), H);
    for (int i = 0; i < H; ++i) grads.decoder_bias()[i] += dlog[static_cast<std::size_t>(i)];
    detail::matvec_t_add(p.decoder_weights(), dlog.data(), dh_out.data() + t * uh, H);
  }

  std::vector<double> dh(uh, 0.0), dh_prev(uh), dc(uh, 0.0), dc_prev(uh), da(static_cast<std::size_t>(G) * uh),
      rh(uh), drh(uh);
  for (std::size_t t = T; t-- > 0;) {
    for (int i = 0; i < H; ++i) dh[static_cast<std::size_t>(i)] += dh_out[t * uh + static_cast<std::size_t>(i)];
    const double* x = seq.tokens.data() + t * uh;
    const double* hp = tr.hidden.data() + t * uh;
    const double* gt = tr.gates.data() + t * static_cast<std::size_t>(G) * uh;
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);

    if (p.kind() == CellKind::GRU) {
      const double* z = gt;
      const double* r = gt + uh;
      const double* c = gt + 2 * uh;
      double* daz = da.data();
      double* dar = da.data() + uh;
      double* dac = da.data() + 2 * uh;
      for (int i = 0; i < H; ++i) {
        const auto k = static_cast<std::size_t>(i);
        daz[i] = dh[k] * (c[i] - hp[i]) * z[i] * (1.0 - z[i]);
        dac[i] = dh[k] * z[i] * (1.0 - c[i] * c[i]);
        dh_prev[k] = dh[k] * (1.0 - z[i]);
        rh[k] = r[i] * hp[i];
      }
      std::fill(drh.begin(), drh.end(), 0.0);
      detail::matvec_t_add(p.hidden_weights(2), dac, drh.data(), H);
      for (int i = 0; i < H; ++i) {
        const auto k = static_cast<std::size_t>(i);
        dar[i] = drh[k] * hp[i] * r[i] * (1.0 - r[i]);
        dh_prev[k] += drh[k] * r[i];
      }
      for (int gate = 0; gate < 3; ++gate) {
        const double* d = da.data() + static_cast<std::size_t>(gate) * uh;
        detail::outer_add(d, x, grads.input_weights(gate), H);
        detail::outer_add(d, gate == 2 ? rh.data() : hp, grads.hidden_weights(gate), H);
        for (int i = 0; i < H; ++i) grads.bias(gate)[i] += d[i];
      }
      detail::matvec_t_add(p.hidden_weights(0), daz, dh_prev.data(), H);
      detail::matvec_t_add(p.hidden_weights(1), dar, dh_prev.data(), H);
    } else {
      const double* ig = gt;
      const double* fg = gt + uh;
      const double* gg = gt + 2 * uh;
      const double* og = gt + 3 * uh;
      const double* cp = tr.cell.data() + t * uh;
      const double* cn = tr.cell.data() + (t + 1) * uh;
      for (int i = 0; i < H; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double tc = std::tanh(cn[i]);
        const double dct = dc[k] + dh[k] * og[i] * (1.0 - tc * tc);
        da[k] = dct * gg[i] * ig[i] * (1.0 - ig[i]);
        da[uh + k] = dct * cp[i] * fg[i] * (1.0 - fg[i]);
        da[2 * uh + k] = dct * ig[i] * (1.0 - gg[i] * gg[i]);
        da[3 * uh + k] = dh[k] * tc * og[i] * (1.0 - og[i]);
        dc_prev[k] = dct * fg[i];
      }
      for (int gate = 0; gate < 4; ++gate) {
        const double* d = da.data() + static_cast<std::size_t>(gate) * uh;
        detail::outer_add(d, x, grads.input_weights(gate), H);
        detail::outer_add(d, hp, grads.hidden_weights(gate), H);
        for (int i = 0; i < H; ++i) grads.bias(gate)[i] += d[i];
        detail::matvec_t_add(p.hidden_weights(gate), d, dh_prev.data(), H);
      }
      std::swap(dc, dc_prev);
    }
    std::swap(dh, dh_prev);
  }
}

struct LossAndGrads {
  double loss = 0.0;
  CellParams grads;
};

inline LossAndGrads loss_and_grads(const CellParams& p, std::span<const Sequence> batch) {
  LossAndGrads out{0.0, CellParams(p.kind(), p.width())};
  const std::size_t n = answer_count(batch);
  if (n == 0) return out;
  const double scale = 1.0 / static_cast<double>(n);
  ForwardTrace tr;
  double total = 0.0;
  for (const auto& s : batch) {
    forward_into(p, s, tr);
    total += sequence_nll(tr, s);
    backward_accumulate(p, s, tr, scale, out.grads);
  }
  out.loss = total * scale;
  return out;
}

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t size, double lr) : first_moment(size, 0.0), second_moment(size, 0.0), learning_rate(lr) {}
};

// Bias-corrected Adam update in place.
inline void adam_step(CellParams& params, const CellParams& grads, AdamState& state) {
  auto w = params.values();
  const auto g = grads.values();
  if (g.size() != w.size() || state.first_moment.size() != w.size() || state.second_moment.size() != w.size()) {
    throw domain_error("adam_step: shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < w.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g[i];
    v = state.beta2 * v + (1.0 - state.beta2) * g[i] * g[i];
    w[i] -= state.learning_rate * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
  }
}

// Uniform in [-1/sqrt(width), 1/sqrt(width)] from a seeded mt19937_64. The
// double conversion is done by hand so values are identical across standard
// library implementations.
inline CellParams init_params(CellKind kind, int width, std::uint64_t seed) {
  CellParams p(kind, width);
  std::mt19937_64 gen(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  for (double& v : p.values()) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
    v = (2.0 * u - 1.0) * bound;
  }
  return p;
}

inline nlohmann::json to_json(const CellParams& p) {
  const int H = p.width(), G = p.gates();
  auto slice = [&](const double* begin, std::size_t n) { return std::vector<double>(begin, begin + n); };
  const auto sq = static_cast<std::size_t>(H) * static_cast<std::size_t>(H);
  return nlohmann::json{
      {"kind", to_string(p.kind())},
      {"width", H},
      {"gate_order", p.kind() == CellKind::GRU ? nlohmann::json{"update", "reset", "candidate"}
                                                : nlohmann::json{"input", "forget", "cell", "output"}},
      {"input_weights", {{"shape", {G, H, H}}, {"values", slice(p.input_weights(0), G * sq)}}},
      {"hidden_weights", {{"shape", {G, H, H}}, {"values", slice(p.hidden_weights(0), G * sq)}}},
      {"biases", {{"shape", {G, H}}, {"values", slice(p.bias(0), static_cast<std::size_t>(G * H))}}},
      {"decoder_weights", {{"shape", {H, H}}, {"values", slice(p.decoder_weights(), sq)}}},
      {"decoder_bias", {{"shape", {H}}, {"values", slice(p.decoder_bias(), static_cast<std::size_t>(H))}}},
  };
}

inline CellParams cell_params_from_json(const nlohmann::json& j) {
  CellParams p(cell_kind_from_string(j.at("kind").get<std::string>()), j.at("width").get<int>());
  auto load = [&](const char* key, double* dst, std::size_t n) {
    const auto v = j.at(key).at("values").get<std::vector<double>>();
    if (v.size() != n) throw config_error(std::string("parameter array '") + key + "' has wrong length");
    std::copy(v.begin(), v.end(), dst);
  };
  const auto H = static_cast<std::size_t>(p.width());
  const auto G = static_cast<std::size_t>(p.gates());
  load("input_weights", p.input_weights(0), G * H * H);
  load("hidden_weights", p.hidden_weights(0), G * H * H);
  load("biases", p.bias(0), G * H);
  load("decoder_weights", p.decoder_weights(), H * H);
  load("decoder_bias", p.decoder_bias(), H);
  return p;
}

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Five-point central differences of loss() against loss_and_grads() for every
// parameter. Relative error is |a - n| / max(|a|, |n|, floor). The O(h^4)
// stencil allows a step large enough that cancellation noise stays well below
// the floor, which a two-point stencil at h = 1e-5 does not.
inline GradientCheckResult gradient_check(const CellParams& p, std::span<const Sequence> batch, double step = 1e-3,
                                          double floor = 1e-8) {
  const auto analytic = loss_and_grads(p, batch).grads;
  CellParams probe = p;
  GradientCheckResult r;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = probe.values()[i];
    auto at = [&](double offset) {
      probe.values()[i] = orig + offset;
      return loss(probe, batch);
    };
    const double numeric = (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
    probe.values()[i] = orig;
    const double a = analytic.values()[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (rel > r.max_relative_error || i == 0) r = {rel, i, a, numeric};
  }
  return r;
}

}  // namespace carrylab
