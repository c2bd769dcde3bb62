#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "carrylab/rnn.hpp"

using namespace carrylab;

namespace {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

Mat mat(const double* w, int n) {
  Mat m(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = w[i * n + j];
  return m;
}

Vec vec(const double* b, int n) { return Vec(b, b + n); }

Vec affine(const Mat& w, const Vec& x, const Mat& u, const Vec& h, const Vec& b) {
  Vec out = b;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) out[i] += w[i][j] * x[j] + u[i][j] * h[j];
  return out;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight textbook cells over nested vectors; returns per-step logits.
std::vector<Vec> reference_logits(const CellParams& p, const Sequence& s) {
  const int H = p.width();
  const auto n = static_cast<std::size_t>(H);
  Vec h(n, 0.0), c(n, 0.0);
  std::vector<Vec> out;
  const Mat Wo = mat(p.decoder_weights(), H);
  const Vec bo = vec(p.decoder_bias(), H);
  for (std::size_t t = 0; t < s.steps(); ++t) {
    const auto tok = s.token(t);
    const Vec x(tok.begin(), tok.end());
    auto pre = [&](int g, const Vec& hh) {
      return affine(mat(p.input_weights(g), H), x, mat(p.hidden_weights(g), H), hh, vec(p.bias(g), H));
    };
    if (p.kind() == CellKind::GRU) {
      Vec z = pre(0, h), r = pre(1, h);
      for (auto& v : z) v = sig(v);
      for (auto& v : r) v = sig(v);
      Vec rh(n);
      for (std::size_t i = 0; i < n; ++i) rh[i] = r[i] * h[i];
      Vec cand = pre(2, rh);
      for (std::size_t i = 0; i < n; ++i) h[i] = (1 - z[i]) * h[i] + z[i] * std::tanh(cand[i]);
    } else {
      Vec ig = pre(0, h), fg = pre(1, h), gg = pre(2, h), og = pre(3, h);
      for (std::size_t i = 0; i < n; ++i) {
        c[i] = sig(fg[i]) * c[i] + sig(ig[i]) * std::tanh(gg[i]);
        h[i] = sig(og[i]) * std::tanh(c[i]);
      }
    }
    Vec lg = bo;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) lg[i] += Wo[i][j] * h[j];
    out.push_back(lg);
  }
  return out;
}

Sequence random_sequence(int width, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> cls(0, width - 1);
  Sequence s;
  s.width = width;
  for (std::size_t i = 0; i < steps * static_cast<std::size_t>(width); ++i) s.tokens.push_back(u(gen));
  for (std::size_t t = 1; t < steps; t += 2) {
    s.answer_steps.push_back(static_cast<int>(t));
    s.targets.push_back(cls(gen));
  }
  return s;
}

std::vector<Sequence> random_batch(int width, std::size_t n, std::uint64_t seed) {
  std::vector<Sequence> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_sequence(width, 6, seed * 100 + i));
  return out;
}

class CellTest : public ::testing::TestWithParam<CellKind> {};

}  // namespace

INSTANTIATE_TEST_SUITE_P(Kinds, CellTest, ::testing::Values(CellKind::GRU, CellKind::LSTM),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST_P(CellTest, ParameterCount) {
  const int g = GetParam() == CellKind::GRU ? 3 : 4;
  for (int b = 2; b <= 6; ++b) EXPECT_EQ(CellParams(GetParam(), b).size(), static_cast<std::size_t>(g * (2 * b * b + b) + b * b + b));
}

TEST_P(CellTest, ZeroParamsGiveZeroLogits) {
  CellParams p(GetParam(), 3);
  const auto s = random_sequence(3, 5, 1);
  const auto tr = forward(p, s);
  for (double v : tr.logits) EXPECT_EQ(v, 0.0);
}

TEST_P(CellTest, ZeroInputsAndBiasesKeepStateAtZero) {
  auto p = init_params(GetParam(), 4, 11);
  for (int g = 0; g < p.gates(); ++g)
    for (int i = 0; i < 4; ++i) p.bias(g)[i] = 0.0;
  Sequence s;
  s.width = 4;
  s.tokens.assign(4 * 7, 0.0);
  const auto tr = forward(p, s);
  for (double v : tr.hidden) EXPECT_EQ(v, 0.0);
}

TEST_P(CellTest, MatchesReferenceImplementation) {
  for (int b = 2; b <= 5; ++b) {
    const auto p = init_params(GetParam(), b, 100 + static_cast<std::uint64_t>(b));
    const auto s = random_sequence(b, 9, static_cast<std::uint64_t>(b));
    const auto tr = forward(p, s);
    const auto ref = reference_logits(p, s);
    for (std::size_t t = 0; t < s.steps(); ++t)
      for (int i = 0; i < b; ++i) EXPECT_NEAR(tr.logits_at(t)[static_cast<std::size_t>(i)], ref[t][static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST_P(CellTest, UniformLogitsGiveLogBase) {
  for (int b = 2; b <= 6; ++b) {
    CellParams p(GetParam(), b);
    const auto batch = random_batch(b, 4, 3);
    EXPECT_NEAR(loss(p, batch), std::log(static_cast<double>(b)), 1e-12);
  }
}

TEST_P(CellTest, WidthMismatchRejected) {
  CellParams p(GetParam(), 3);
  EXPECT_THROW(forward(p, random_sequence(4, 2, 0)), domain_error);
}

TEST_P(CellTest, GradientCheck) {
  for (int b = 2; b <= 4; ++b) {
    const auto p = init_params(GetParam(), b, 7 + static_cast<std::uint64_t>(b));
    const auto batch = random_batch(b, 3, static_cast<std::uint64_t>(b));
    const auto r = gradient_check(p, batch);
    EXPECT_LT(r.max_relative_error, 1e-4) << "b=" << b << " index " << r.worst_index << " analytic " << r.analytic
                                          << " numeric " << r.numeric;
  }
}

TEST_P(CellTest, LossAndGradsAgreesWithLoss) {
  const auto p = init_params(GetParam(), 3, 5);
  const auto batch = random_batch(3, 5, 9);
  EXPECT_NEAR(loss_and_grads(p, batch).loss, loss(p, batch), 1e-14);
}

TEST_P(CellTest, BatchedForwardMatchesSingle) {
  const auto p = init_params(GetParam(), 3, 21);
  const auto batch = random_batch(3, 4, 2);
  const auto traces = forward(p, std::span<const Sequence>(batch));
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_EQ(traces[i].logits, forward(p, batch[i]).logits);
}

TEST_P(CellTest, InitDeterministicAndBounded) {
  const auto a = init_params(GetParam(), 4, 42);
  EXPECT_EQ(a, init_params(GetParam(), 4, 42));
  EXPECT_NE(a, init_params(GetParam(), 4, 43));
  for (double v : a.values()) EXPECT_LE(std::abs(v), 0.5);
}

TEST_P(CellTest, JsonRoundTrip) {
  const auto p = init_params(GetParam(), 3, 8);
  const auto j = to_json(p);
  EXPECT_EQ(cell_params_from_json(nlohmann::json::parse(j.dump())), p);
  auto bad = j;
  bad["decoder_bias"]["values"].push_back(0.0);
  EXPECT_THROW(cell_params_from_json(bad), config_error);
}

TEST_P(CellTest, AdamReducesLossOnFixedBatch) {
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = init_params(GetParam(), 3, seed);
    const auto batch = random_batch(3, 8, 1000 + seed);
    const double before = loss(p, batch);
    AdamState st(p.size(), 0.05);
    for (int i = 0; i < 50; ++i) adam_step(p, loss_and_grads(p, batch).grads, st);
    if (loss(p, batch) < before) ++decreased;
  }
  EXPECT_GE(decreased, 19);
}

TEST(Adam, ZeroGradientsLeaveParamsUnchanged) {
  auto p = init_params(CellKind::GRU, 3, 1);
  const auto orig = p;
  AdamState st(p.size(), 0.05);
  for (int i = 0; i < 5; ++i) adam_step(p, CellParams(CellKind::GRU, 3), st);
  EXPECT_EQ(p, orig);
  EXPECT_EQ(st.step, 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = init_params(CellKind::LSTM, 2, 1);
  const auto orig = p;
  CellParams g(CellKind::LSTM, 2);
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = (i % 2 ? 1.0 : -1.0) * (0.1 + static_cast<double>(i));
  AdamState st(p.size(), 0.05);
  adam_step(p, g, st);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = orig.values()[i] - 0.05 * (g.values()[i] > 0 ? 1.0 : -1.0);
    EXPECT_NEAR(p.values()[i], expected, 1e-8);
  }
}

TEST(Adam, Deterministic) {
  auto run = [] {
    auto p = init_params(CellKind::GRU, 3, 4);
    const auto batch = random_batch(3, 4, 4);
    AdamState st(p.size(), 0.05);
    for (int i = 0; i < 10; ++i) adam_step(p, loss_and_grads(p, batch).grads, st);
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ShapeMismatchRejected) {
  auto p = init_params(CellKind::GRU, 3, 4);
  AdamState st(p.size(), 0.05);
  EXPECT_THROW(adam_step(p, CellParams(CellKind::GRU, 2), st), domain_error);
}

TEST(CellKindNames, Parse) {
  EXPECT_EQ(cell_kind_from_string("gru"), CellKind::GRU);
  EXPECT_EQ(cell_kind_from_string("LSTM"), CellKind::LSTM);
  EXPECT_THROW(cell_kind_from_string("rnn"), config_error);
}
