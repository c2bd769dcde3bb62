#pragma once

/**
 * Training protocol for one (base, carry table, embedding, cell, seed) cell.
 *
 * An epoch visits every ordered pair of train_length-digit operands once, in
 * an order shuffled per epoch, with an Adam update after each mini-batch.
 * Every eval_interval epochs (and at epoch 0) the run records the mean loss
 * and exact-match accuracy over the training pairs plus exact-match accuracy
 * at each eval length. After the last epoch the final parameters are swept
 * over the generalization lengths.
 *
 * Everything random is derived from the run seed, itself a hash of the
 * config and the user seed. Eval samples depend only on (base, length) so all
 * runs in a sweep are scored on the same problems.
 */

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carrylab/carry.hpp"
#include "carrylab/dataset.hpp"
#include "carrylab/embedding.hpp"
#include "carrylab/error.hpp"
#include "carrylab/rnn.hpp"
#include "carrylab/sampling.hpp"
#include "carrylab/sigmoid.hpp"

namespace carrylab {

struct TrainConfig {
  int base = 3;
  std::size_t carry_id = 0;
  std::string scheme = "symbolic";  // or "semantic"
  int ordering_unit = 1;            // semantic only: ordering generated by this unit
  CellKind cell = CellKind::GRU;
  std::size_t train_length = 3;
  std::size_t epochs = 2500;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::size_t eval_interval = 10;
  std::vector<std::size_t> eval_lengths{3, 6};
  std::size_t eval_sample_size = 1000;
  std::vector<std::size_t> generalization_lengths{3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"base", c.base},
      {"carry_id", c.carry_id},
      {"scheme", c.scheme},
      {"ordering_unit", c.ordering_unit},
      {"cell", to_string(c.cell)},
      {"train_length", c.train_length},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"eval_interval", c.eval_interval},
      {"eval_lengths", c.eval_lengths},
      {"eval_sample_size", c.eval_sample_size},
      {"generalization_lengths", c.generalization_lengths},
      {"seed", c.seed},
  };
}

inline void validate(const TrainConfig& c) {
  if (c.base < 2) throw config_error("base must be at least 2");
  if (c.scheme != "symbolic" && c.scheme != "semantic") throw config_error("scheme must be symbolic or semantic");
  if (c.train_length == 0 || c.epochs == 0 || c.batch_size == 0 || c.eval_interval == 0 || c.eval_sample_size == 0) {
    throw config_error("train_length, epochs, batch_size, eval_interval and eval_sample_size must be positive");
  }
  if (!(c.learning_rate > 0.0)) throw config_error("learning_rate must be positive");
  if (c.eval_lengths.empty()) throw config_error("eval_lengths must not be empty");
  for (auto k : c.eval_lengths)
    if (k == 0) throw config_error("eval lengths must be positive");
  for (auto k : c.generalization_lengths)
    if (k == 0) throw config_error("generalization lengths must be positive");
  if (c.scheme == "semantic") {
    const Base b(c.base);
    if (!is_unit(b, c.ordering_unit)) {
      throw config_error("ordering_unit must be a unit of Z_" + std::to_string(c.base));
    }
  }
}

// Unknown keys are rejected so that typos do not silently fall back to defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  if (!j.is_object()) throw config_error("train config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "base") c.base = v.get<int>();
      else if (key == "carry_id") c.carry_id = v.get<std::size_t>();
      else if (key == "scheme") c.scheme = v.get<std::string>();
      else if (key == "ordering_unit") c.ordering_unit = v.get<int>();
      else if (key == "cell") c.cell = cell_kind_from_string(v.get<std::string>());
      else if (key == "train_length") c.train_length = v.get<std::size_t>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "eval_interval") c.eval_interval = v.get<std::size_t>();
      else if (key == "eval_lengths") c.eval_lengths = v.get<std::vector<std::size_t>>();
      else if (key == "eval_sample_size") c.eval_sample_size = v.get<std::size_t>();
      else if (key == "generalization_lengths") c.generalization_lengths = v.get<std::vector<std::size_t>>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw config_error("unknown train config field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad train config: ") + e.what());
  }
  return c;
}

inline EmbeddingScheme make_scheme(const TrainConfig& c) {
  const Base b(c.base);
  if (c.scheme == "symbolic") return Symbolic{};
  return make_semantic(b, Digit(b, c.ordering_unit));
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t kInitStream = 0x1417;
inline constexpr std::uint64_t kShuffleStream = 0x5ff1e;
inline constexpr std::uint64_t kEvalSeed = 0xe7a1'5a3b1e;

// In-place Fisher-Yates driven by the counter hash, so the permutation is
// identical across standard libraries.
template <class T>
void shuffle(std::vector<T>& v, std::uint64_t seed) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = bounded(counter_hash(seed, i), static_cast<std::uint32_t>(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

// Hash of the config (seed included) that seeds every random choice in a run.
inline std::uint64_t run_seed(const TrainConfig& c) {
  auto j = to_json(c);
  j.erase("seed");
  return counter_hash(detail::fnv1a(j.dump()), c.seed);
}

// Operand pairs scored at a given length: every pair if it is no longer than
// the training length, otherwise a fixed sample.
inline std::vector<OperandPair> eval_pairs(const TrainConfig& c, std::size_t length) {
  const Base b(c.base);
  if (length <= c.train_length) return all_pairs(b, length);
  const std::uint64_t seed = counter_hash(detail::kEvalSeed ^ static_cast<std::uint64_t>(c.base), length);
  return sample_pairs(b, length, c.eval_sample_size, seed);
}

struct EvalResult {
  double exact = 0.0;      // fraction of sequences with every answer digit right
  double per_digit = 0.0;  // fraction of answer digits right
  double loss = 0.0;       // mean cross-entropy per answer digit
  std::size_t sequences = 0;
};

inline EvalResult evaluate(const CellParams& p, std::span<const Sequence> seqs) {
  EvalResult r;
  r.sequences = seqs.size();
  if (seqs.empty()) return r;
  ForwardTrace tr;
  std::size_t exact = 0, digits = 0, right = 0;
  double nll = 0.0;
  for (const auto& s : seqs) {
    forward_into(p, s, tr);
    nll += sequence_nll(tr, s);
    bool all = true;
    for (std::size_t a = 0; a < s.answer_steps.size(); ++a) {
      const auto lg = tr.logits_at(static_cast<std::size_t>(s.answer_steps[a]));
      const auto pred = static_cast<int>(std::max_element(lg.begin(), lg.end()) - lg.begin());
      if (pred == s.targets[a]) ++right;
      else all = false;
    }
    digits += s.answer_steps.size();
    if (all) ++exact;
  }
  r.exact = static_cast<double>(exact) / static_cast<double>(seqs.size());
  r.per_digit = digits ? static_cast<double>(right) / static_cast<double>(digits) : 0.0;
  r.loss = digits ? nll / static_cast<double>(digits) : 0.0;
  return r;
}

inline EvalResult evaluate(const CellParams& p, const CarryTable& f, const EmbeddingScheme& scheme, std::size_t length,
                           std::span<const OperandPair> pairs) {
  const auto seqs = build_sequences(f, pairs, length, scheme);
  return evaluate(p, seqs);
}

struct EvalRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::vector<double> test_acc;  // aligned with config.eval_lengths
};

struct GeneralizationRow {
  std::size_t length = 0;
  double exact_acc = 0.0;
  double digit_acc = 0.0;
};

struct RunRecord {
  TrainConfig config;
  std::uint64_t run_seed = 0;
  std::vector<EvalRow> rows;
  std::vector<GeneralizationRow> generalization;
  double max_test_accuracy = 0.0;  // best test accuracy at the longest eval length
  std::size_t epochs_completed = 0;
  bool aborted = false;
  std::string diagnostic;
  double wall_seconds = 0.0;
  std::optional<CellParams> final_params;
};

// Index into eval_lengths whose curve drives max_test_accuracy and the fit.
inline std::size_t primary_eval_index(const TrainConfig& c) {
  return static_cast<std::size_t>(std::max_element(c.eval_lengths.begin(), c.eval_lengths.end()) -
                                  c.eval_lengths.begin());
}

using ProgressFn = std::function<void(const EvalRow&)>;

inline RunRecord train_run(const TrainConfig& config, const ProgressFn& progress = {}) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const Base base(config.base);
  const CarryTable f = carry_table_by_id(base, config.carry_id);
  const EmbeddingScheme scheme = make_scheme(config);
  validate_scheme(scheme, base);

  RunRecord rec;
  rec.config = config;
  rec.run_seed = run_seed(config);

  const auto train_pairs = all_pairs(base, config.train_length);
  const auto train_seqs = build_sequences(f, train_pairs, config.train_length, scheme);
  std::vector<std::vector<Sequence>> eval_sets;
  for (auto k : config.eval_lengths) {
    if (k == config.train_length) eval_sets.emplace_back();  // scored on train_seqs
    else eval_sets.push_back(build_sequences(f, eval_pairs(config, k), k, scheme));
  }

  CellParams params = init_params(config.cell, config.base, counter_hash(rec.run_seed, detail::kInitStream));
  AdamState adam(params.size(), config.learning_rate);
  const std::size_t primary = primary_eval_index(config);

  auto record_row = [&](std::size_t epoch) {
    EvalRow row;
    row.epoch = epoch;
    const auto tr = evaluate(params, train_seqs);
    row.train_loss = tr.loss;
    row.train_acc = tr.exact;
    for (std::size_t i = 0; i < eval_sets.size(); ++i) {
      row.test_acc.push_back(eval_sets[i].empty() ? tr.exact : evaluate(params, eval_sets[i]).exact);
    }
    rec.max_test_accuracy = std::max(rec.max_test_accuracy, row.test_acc[primary]);
    rec.rows.push_back(row);
    if (progress) progress(row);
  };

  std::vector<std::size_t> order(train_seqs.size());
  CellParams grads(config.cell, config.base);
  ForwardTrace trace;
  try {
    record_row(0);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      detail::shuffle(order, counter_hash(rec.run_seed ^ detail::kShuffleStream, epoch));
      for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
        const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
        // Same computation as loss_and_grads, without copying the batch.
        std::size_t answers = 0;
        for (std::size_t i = b0; i < b1; ++i) answers += train_seqs[order[i]].answer_steps.size();
        const double scale = 1.0 / static_cast<double>(answers);
        grads.fill(0.0);
        double total = 0.0;
        for (std::size_t i = b0; i < b1; ++i) {
          const auto& s = train_seqs[order[i]];
          forward_into(params, s, trace);
          total += sequence_nll(trace, s);
          backward_accumulate(params, s, trace, scale, grads);
        }
        if (!std::isfinite(total)) throw numeric_error("non-finite loss", 0);
        adam_step(params, grads, adam);
      }
      rec.epochs_completed = epoch;
      if (epoch % config.eval_interval == 0) record_row(epoch);
    }
    for (auto k : config.generalization_lengths) {
      const auto seqs = k == config.train_length ? train_seqs : build_sequences(f, eval_pairs(config, k), k, scheme);
      const auto r = evaluate(params, seqs);
      rec.generalization.push_back({k, r.exact, r.per_digit});
    }
  } catch (const numeric_error& e) {
    rec.aborted = true;
    rec.diagnostic = std::string(e.what()) + " during epoch " + std::to_string(rec.epochs_completed + 1);
  }
  rec.final_params = params;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// Sigmoid fit of the primary test-accuracy curve.
inline SigmoidFit fit_run(const RunRecord& rec) {
  const std::size_t primary = primary_eval_index(rec.config);
  std::vector<double> x, y;
  for (const auto& row : rec.rows) {
    x.push_back(static_cast<double>(row.epoch));
    y.push_back(row.test_acc[primary]);
  }
  if (x.size() < 4) return SigmoidFit{};
  return fit_sigmoid(x, y);
}

}  // namespace carrylab
