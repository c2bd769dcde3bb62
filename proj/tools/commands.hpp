#pragma once

// Subcommands of the carrylab tool. Kept in a header so tests can drive the
// CLI in-process through cli::run().

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "carrylab/analysis.hpp"
#include "carrylab/carry.hpp"
#include "carrylab/classify.hpp"
#include "carrylab/error.hpp"
#include "carrylab/io.hpp"
#include "carrylab/measures.hpp"
#include "carrylab/training.hpp"

namespace carrylab::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // some cell or row did not complete
inline constexpr int kExitUsage = 2;

class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- enumerate ----

inline int cmd_enumerate(int base, const fs::path& out, std::ostream& log) {
  if (base < 2 || base > kMaxEnumerationBase) {
    throw usage_error("base must be in [2, " + std::to_string(kMaxEnumerationBase) + "]");
  }
  const Base b(base);
  const auto tables = enumerate_carry_tables(b);
  const fs::path dir = out / "tables" / std::to_string(base);
  std::string index = csv_line({"id", "class", "single_value_unit"});
  for (std::size_t id = 0; id < tables.size(); ++id) {
    const auto cls = classify(tables[id]);
    const auto* single = std::get_if<SingleValue>(&cls);
    index += csv_line({std::to_string(id), class_name(cls), single ? std::to_string(single->unit.value()) : ""});
    write_file_atomic(dir / (std::to_string(id) + ".csv"), carry_table_csv(tables[id]));
    write_file_atomic(dir / (std::to_string(id) + ".ppm"), carry_table_ppm(tables[id]));
  }
  write_file_atomic(dir / "index.csv", index);
  log << tables.size() << '\n';
  return kExitOk;
}

// ---- measure ----

inline std::string measure_header() {
  return csv_line({"base", "carry_id", "depth", "border_count", "box_dim", "box_dim_min_ordering", "carry_freq",
                   "assoc_fraction", "assoc_mode", "assoc_samples", "min_ordering_unit"});
}

inline std::string measure_rows(const MeasureReport& r) {
  std::string s;
  for (const auto& d : r.depths) {
    s += csv_line({std::to_string(r.base), std::to_string(r.carry_id.value_or(0)), std::to_string(d.depth),
                   std::to_string(d.border_count), fmt(d.box_dim), fmt(d.box_dim_min_ordering), fmt(d.carry_freq),
                   fmt(d.associativity.fraction), to_string(d.associativity.mode),
                   std::to_string(d.associativity.samples), std::to_string(d.min_ordering_unit)});
  }
  return s;
}

inline BorderRule border_rule_from_string(const std::string& s) {
  if (s == "any") return BorderRule::AnyNeighbor;
  if (s == "all") return BorderRule::AllNeighbors;
  throw usage_error("border rule must be 'any' or 'all'");
}

// Rows are written one carry at a time; a resource limit stops the sweep with
// the rows so far on disk.
inline int cmd_measure(int base, std::vector<std::size_t> ids, std::size_t depth, BorderRule rule, const fs::path& out,
                       std::ostream& log) {
  if (base < 2 || base > kMaxEnumerationBase) {
    throw usage_error("base must be in [2, " + std::to_string(kMaxEnumerationBase) + "]");
  }
  if (depth == 0) throw usage_error("depth must be at least 1");
  const auto tables = enumerate_carry_tables(Base(base));
  if (ids.empty()) {
    ids.resize(tables.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  }
  for (auto id : ids) {
    if (id >= tables.size()) throw usage_error("carry id " + std::to_string(id) + " out of range");
  }
  std::string csv = measure_header();
  int status = kExitOk;
  for (auto id : ids) {
    try {
      csv += measure_rows(measure_report(tables[id], depth, rule));
    } catch (const resource_limit_error& e) {
      log << "carry " << id << ": " << e.what() << '\n';
      status = kExitFailed;
      break;
    }
  }
  write_file_atomic(out / "measures.csv", csv);
  return status;
}

// ---- train ----

struct SweepManifest {
  std::vector<TrainConfig> cells;
  fs::path out;
  unsigned parallelism = 0;  // 0 = no cap
};

// CLI values that override the config file.
struct TrainOverrides {
  std::vector<int> bases;
  std::vector<std::string> carry_ids;  // numbers or "all"
  std::vector<std::string> schemes;
  std::vector<std::string> cells;
  std::vector<std::uint64_t> seeds;
  std::optional<int> ordering_unit;
  std::optional<std::size_t> epochs, batch_size, eval_interval, eval_sample_size, train_length;
  std::optional<double> learning_rate;
};

namespace detail {

template <class T>
std::vector<T> list_or_single(const nlohmann::json& j, const char* plural, const char* singular) {
  if (j.contains(plural) && j.contains(singular)) {
    throw config_error(std::string("config sets both '") + plural + "' and '" + singular + "'");
  }
  if (j.contains(plural)) return j.at(plural).get<std::vector<T>>();
  if (j.contains(singular)) return {j.at(singular).get<T>()};
  return {};
}

inline std::vector<std::size_t> parse_carry_ids(const std::vector<std::string>& raw, int base) {
  const std::size_t count = enumerate_carry_tables(Base(base)).size();
  std::set<std::size_t> ids;
  for (const auto& s : raw) {
    if (s == "all") {
      for (std::size_t i = 0; i < count; ++i) ids.insert(i);
      continue;
    }
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty()) throw config_error("bad carry id '" + s + "'");
    if (v >= count) {
      throw config_error("carry id " + s + " out of range for base " + std::to_string(base));
    }
    ids.insert(v);
  }
  return {ids.begin(), ids.end()};
}

inline std::string combo_name(const TrainConfig& c) {
  std::string s = c.scheme;
  if (c.scheme == "semantic") s += "-u" + std::to_string(c.ordering_unit);
  return s + "-" + to_string(c.cell);
}

}  // namespace detail

// Expands a config document plus CLI overrides into the list of cells.
// Top-level keys are TrainConfig fields (single values, used as defaults) and
// the manifest fields bases, carry_ids, schemes, cells, seeds, out and
// parallelism.
inline SweepManifest build_manifest(const nlohmann::json& doc, const TrainOverrides& ov,
                                    const std::optional<fs::path>& out_flag) {
  if (!doc.is_object()) throw config_error("config must be a JSON object");
  nlohmann::json train = doc;
  SweepManifest m;
  std::vector<int> bases;
  std::vector<std::string> ids, schemes, cells;
  std::vector<std::uint64_t> seeds;
  try {
    bases = detail::list_or_single<int>(doc, "bases", "base");
    if (doc.contains("carry_ids") && doc.at("carry_ids").is_string()) {
      ids = {doc.at("carry_ids").get<std::string>()};
    } else if (doc.contains("carry_ids")) {
      for (const auto& v : doc.at("carry_ids")) ids.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else if (doc.contains("carry_id")) {
      ids = {doc.at("carry_id").dump()};
    }
    schemes = detail::list_or_single<std::string>(doc, "schemes", "scheme");
    cells = detail::list_or_single<std::string>(doc, "cells", "cell");
    seeds = detail::list_or_single<std::uint64_t>(doc, "seeds", "seed");
    if (doc.contains("out")) m.out = doc.at("out").get<std::string>();
    if (doc.contains("parallelism")) m.parallelism = doc.at("parallelism").get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad config: ") + e.what());
  }
  for (const char* key : {"bases", "base", "carry_ids", "carry_id", "schemes", "scheme", "cells", "cell", "seeds",
                          "seed", "out", "parallelism"}) {
    train.erase(key);
  }
  TrainConfig base_cfg = train_config_from_json(train);

  if (!ov.bases.empty()) bases = ov.bases;
  if (!ov.carry_ids.empty()) ids = ov.carry_ids;
  if (!ov.schemes.empty()) schemes = ov.schemes;
  if (!ov.cells.empty()) cells = ov.cells;
  if (!ov.seeds.empty()) seeds = ov.seeds;
  if (ov.ordering_unit) base_cfg.ordering_unit = *ov.ordering_unit;
  if (ov.epochs) base_cfg.epochs = *ov.epochs;
  if (ov.batch_size) base_cfg.batch_size = *ov.batch_size;
  if (ov.eval_interval) base_cfg.eval_interval = *ov.eval_interval;
  if (ov.eval_sample_size) base_cfg.eval_sample_size = *ov.eval_sample_size;
  if (ov.train_length) base_cfg.train_length = *ov.train_length;
  if (ov.learning_rate) base_cfg.learning_rate = *ov.learning_rate;
  if (out_flag) m.out = *out_flag;

  if (bases.empty()) bases = {base_cfg.base};
  if (ids.empty()) ids = {std::to_string(base_cfg.carry_id)};
  if (schemes.empty()) schemes = {base_cfg.scheme};
  if (cells.empty()) cells = {to_string(base_cfg.cell)};
  if (seeds.empty()) seeds = {base_cfg.seed};
  if (m.out.empty()) m.out = "sweep";

  std::set<std::string> seen;
  for (int b : bases) {
    if (b < 2 || b > kMaxEnumerationBase) throw config_error("base " + std::to_string(b) + " out of range");
    for (auto id : detail::parse_carry_ids(ids, b))
      for (const auto& scheme : schemes)
        for (const auto& cell : cells)
          for (auto seed : seeds) {
            TrainConfig c = base_cfg;
            c.base = b;
            c.carry_id = id;
            c.scheme = scheme;
            c.cell = cell_kind_from_string(cell);
            c.seed = seed;
            validate(c);
            if (!seen.insert(to_json(c).dump()).second) throw config_error("duplicate sweep cell");
            m.cells.push_back(c);
          }
  }
  return m;
}

// Directory of one cell. Sweeps mixing embedding schemes or cell kinds get
// one sub-sweep per combination so run directories never collide.
inline fs::path cell_dir(const SweepManifest& m, const TrainConfig& c) {
  std::set<std::string> combos;
  for (const auto& x : m.cells) combos.insert(detail::combo_name(x));
  const fs::path root = combos.size() > 1 ? m.out / detail::combo_name(c) : m.out;
  return run_dir(root, c);
}

inline int cmd_train(const SweepManifest& m, unsigned threads, std::ostream& log) {
  if (m.cells.empty()) throw usage_error("nothing to train");
  unsigned workers = std::max(1u, threads);
  if (m.parallelism) workers = std::min(workers, m.parallelism);
  workers = std::min<unsigned>(workers, static_cast<unsigned>(m.cells.size()));

  write_file_atomic(m.out / "manifest.json", [&] {
    nlohmann::json j{{"out", m.out.string()}, {"parallelism", m.parallelism}, {"cells", nlohmann::json::array()}};
    for (const auto& c : m.cells) j["cells"].push_back(to_json(c));
    return j.dump(2) + "\n";
  }());

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed{0};
  std::mutex log_mutex;
  auto say = [&](const std::string& line) {
    std::lock_guard lock(log_mutex);
    log << line << '\n';
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < m.cells.size(); i = next++) {
      const auto& c = m.cells[i];
      const fs::path dir = cell_dir(m, c);
      if (run_complete(dir)) {
        say("skip " + dir.string());
        continue;
      }
      try {
        const auto rec = train_run(c);
        write_run(dir, rec);
        if (rec.aborted) {
          ++failed;
          say("aborted " + dir.string() + ": " + rec.diagnostic);
        } else {
          say("done " + dir.string() + " max_test_accuracy=" + fmt(rec.max_test_accuracy));
        }
      } catch (const std::exception& e) {
        ++failed;
        say("failed " + dir.string() + ": " + e.what());
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  return failed ? kExitFailed : kExitOk;
}

// ---- analyze ----

inline int cmd_analyze(const fs::path& sweep, const fs::path& out, std::size_t depth, BorderRule rule,
                       std::ostream& log) {
  const auto runs = load_runs(sweep);
  std::set<std::pair<int, std::size_t>> carries;
  for (const auto& r : runs) carries.insert({r.base, r.carry_id});
  if (carries.size() < 3) {
    throw usage_error("analysis needs completed runs for at least 3 carry functions, found " +
                      std::to_string(carries.size()));
  }
  std::vector<StructureMeasures> measures;
  for (const auto& [b, id] : carries) {
    const CarryTable f = carry_table_by_id(Base(b), id);
    measures.push_back(structure_measures(measure_report(f, depth, rule), class_name(classify(f))));
  }
  const auto summary = aggregate_analysis(runs, measures);

  std::string s = csv_line({"base", "carry_id", "class", "runs", "ok_fits", "failed_fits", "mean_max_test_accuracy",
                            "mean_asymptote", "mean_critical_point", "normalized_critical_point", "box_dim",
                            "carry_freq", "assoc_fraction"});
  for (const auto& c : summary.carries) {
    s += csv_line({std::to_string(c.measures.base), std::to_string(c.measures.carry_id), c.measures.carry_class,
                   std::to_string(c.runs), std::to_string(c.ok_fits), std::to_string(c.runs - c.ok_fits),
                   fmt(c.mean_max_accuracy), fmt(c.mean_asymptote), fmt(c.mean_critical_point),
                   fmt(c.normalized_critical_point), fmt(c.measures.box_dim), fmt(c.measures.carry_freq),
                   fmt(c.measures.assoc_fraction)});
  }
  std::string corr = csv_line({"metric", "measure", "n", "rho", "p", "p_method"});
  for (const auto& c : summary.correlations) {
    corr += csv_line({c.metric, c.measure, std::to_string(c.result.n), fmt(c.result.rho), fmt(c.result.p),
                      std::isnan(c.result.p) ? "none" : (c.result.exact ? "permutation" : "t")});
  }
  std::string classes = csv_line({"base", "class", "tables", "mean_max_test_accuracy"});
  for (const auto& c : summary.class_means) {
    classes += csv_line({std::to_string(c.base), c.carry_class, std::to_string(c.tables), fmt(c.mean_max_accuracy)});
  }
  write_file_atomic(out / "summary.csv", s);
  write_file_atomic(out / "correlations.csv", corr);
  write_file_atomic(out / "class_means.csv", classes);
  log << "runs " << summary.total_runs << ", failed fits excluded " << summary.failed_fits << '\n';
  return kExitOk;
}

// ---- entry point ----

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Carry functions for base addition: enumeration, structure measures, and RNN learnability."};
  app.name("carrylab");
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string config_path;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Run seed (train)");
  app.add_option("--threads", threads, "Worker threads (train)")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "JSON config file (train)")->check(CLI::ExistingFile);

  int base = 3;
  auto* enumerate = app.add_subcommand("enumerate", "Write every carry table of a base");
  enumerate->add_option("--base,-b", base, "Base")->required();

  std::vector<std::size_t> ids;
  std::size_t depth = 4;
  std::string rule = "any";
  auto* measure = app.add_subcommand("measure", "Structure measures per carry and depth");
  measure->add_option("--base,-b", base, "Base")->required();
  measure->add_option("--carry-id", ids, "Carry ids (default: all)");
  measure->add_option("--depth,-k", depth, "Maximum depth K");
  measure->add_option("--border-rule", rule, "Border cells: any or all differing neighbours");

  TrainOverrides ov;
  auto* train = app.add_subcommand("train", "Train networks over a sweep of cells");
  train->add_option("--base,-b", ov.bases, "Bases");
  train->add_option("--carry-id", ov.carry_ids, "Carry ids or 'all'");
  train->add_option("--scheme", ov.schemes, "symbolic or semantic");
  train->add_option("--cell", ov.cells, "gru or lstm");
  train->add_option("--seeds", ov.seeds, "Seeds (overrides --seed)");
  train->add_option("--ordering-unit", ov.ordering_unit, "Unit generating the semantic ordering");
  train->add_option("--epochs", ov.epochs);
  train->add_option("--batch-size", ov.batch_size);
  train->add_option("--learning-rate", ov.learning_rate);
  train->add_option("--eval-interval", ov.eval_interval);
  train->add_option("--eval-sample-size", ov.eval_sample_size);
  train->add_option("--train-length", ov.train_length);

  std::string sweep;
  auto* analyze = app.add_subcommand("analyze", "Correlate learning with structure over a sweep");
  analyze->add_option("sweep", sweep, "Sweep root")->required();
  analyze->add_option("--depth,-k", depth, "Depth of the structure measures");
  analyze->add_option("--border-rule", rule, "Border cells: any or all differing neighbours");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const fs::path out_root = out_dir.value_or(".");
    if (*enumerate) return cmd_enumerate(base, out_root, out);
    if (*measure) return cmd_measure(base, ids, depth, border_rule_from_string(rule), out_root, err);
    if (*train) {
      nlohmann::json doc = config_path.empty() ? nlohmann::json::object() : read_json(config_path);
      if (seed && ov.seeds.empty()) ov.seeds = {*seed};
      const auto m = build_manifest(doc, ov, out_dir ? std::optional<fs::path>(*out_dir) : std::nullopt);
      return cmd_train(m, threads, out);
    }
    const auto r = border_rule_from_string(rule);
    return cmd_analyze(sweep, out_dir ? fs::path(*out_dir) : fs::path(sweep), depth, r, out);
  } catch (const usage_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  }
}

}  // namespace carrylab::cli
