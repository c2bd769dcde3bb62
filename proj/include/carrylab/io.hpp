#pragma once

// File artifacts: atomic writes, CSV cells, carry-table images and the
// per-run directory layout <root>/<base>/<carry_id>/<seed>/.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carrylab/analysis.hpp"
#include "carrylab/carry.hpp"
#include "carrylab/error.hpp"
#include "carrylab/sigmoid.hpp"
#include "carrylab/training.hpp"

namespace carrylab {

namespace fs = std::filesystem;

// Writes to <path>.tmp then renames over <path>, so readers never see a
// half-written file.
inline void write_file_atomic(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw io_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw io_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(path.string() + ": " + e.what());
  }
}

// Shortest round-tripping text for a double; "nan" / "inf" for non-finite.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// Joins cells into one CSV line. Cells are numbers or identifiers, so no
// quoting is needed.
inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  s += '\n';
  return s;
}

// ---- carry tables ----

inline std::string carry_table_csv(const CarryTable& f) {
  const int b = f.size();
  std::string s;
  for (int n = 0; n < b; ++n) {
    std::vector<std::string> row;
    for (int m = 0; m < b; ++m) row.push_back(std::to_string(f(n, m)));
    s += csv_line(row);
  }
  return s;
}

// Carry value -> RGB. 0 is white; 1..5 are blue, red, green, orange, purple.
inline constexpr int kPalette[6][3] = {{255, 255, 255}, {31, 119, 180}, {214, 39, 40},
                                       {44, 160, 44},   {255, 127, 14}, {148, 103, 189}};
inline constexpr int kPixelsPerCell = 16;

// Plain-text P3 image, row n = first summand, column m = second summand.
inline std::string carry_table_ppm(const CarryTable& f) {
  const int b = f.size();
  const int side = b * kPixelsPerCell;
  std::string s = "P3\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int v = f(y / kPixelsPerCell, x / kPixelsPerCell);
      const auto& c = kPalette[v % 6];
      s += std::to_string(c[0]) + ' ' + std::to_string(c[1]) + ' ' + std::to_string(c[2]);
      s += x + 1 == side ? '\n' : ' ';
    }
  }
  return s;
}

// ---- run directories ----

inline fs::path run_dir(const fs::path& root, const TrainConfig& c) {
  return root / std::to_string(c.base) / std::to_string(c.carry_id) / std::to_string(c.seed);
}

inline nlohmann::json to_json(const SigmoidFit& f) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"asymptote", num(f.asymptote)},       {"growth_rate", num(f.growth_rate)},
          {"critical_point", num(f.critical_point)}, {"r_squared", num(f.r_squared)},
          {"status", to_string(f.status)},       {"window", f.window},
          {"window_end", num(f.window_end)}};
}

inline SigmoidFit sigmoid_fit_from_json(const nlohmann::json& j) {
  auto num = [&](const char* key) { return j.at(key).is_null() ? kNaN : j.at(key).get<double>(); };
  SigmoidFit f;
  f.asymptote = num("asymptote");
  f.growth_rate = num("growth_rate");
  f.critical_point = num("critical_point");
  f.r_squared = num("r_squared");
  f.status = j.at("status").get<std::string>() == "ok" ? FitStatus::Ok : FitStatus::Failed;
  f.window = j.value("window", std::size_t{0});
  f.window_end = j.contains("window_end") ? num("window_end") : kNaN;
  return f;
}

inline std::string curve_csv(const RunRecord& r) {
  std::vector<std::string> head{"epoch", "train_loss", "train_acc"};
  for (auto k : r.config.eval_lengths) head.push_back("test_acc_" + std::to_string(k));
  std::string s = csv_line(head);
  for (const auto& row : r.rows) {
    std::vector<std::string> cells{std::to_string(row.epoch), fmt(row.train_loss), fmt(row.train_acc)};
    for (double a : row.test_acc) cells.push_back(fmt(a));
    s += csv_line(cells);
  }
  return s;
}

inline std::string generalization_csv(const RunRecord& r) {
  std::string s = csv_line({"k", "exact_acc", "digit_acc"});
  for (const auto& g : r.generalization) s += csv_line({std::to_string(g.length), fmt(g.exact_acc), fmt(g.digit_acc)});
  return s;
}

inline nlohmann::json run_json(const RunRecord& r) {
  nlohmann::json j{
      {"config", to_json(r.config)},
      {"run_seed", r.run_seed},
      {"epochs_completed", r.epochs_completed},
      {"aborted", r.aborted},
      {"max_test_accuracy", r.max_test_accuracy},
      {"wall_seconds", r.wall_seconds},
      {"environment",
       {{"compiler", __VERSION__}, {"cplusplus", __cplusplus}, {"precision", "double"}}},
  };
  if (r.aborted) j["diagnostic"] = r.diagnostic;
  if (r.final_params) j["final_params"] = to_json(*r.final_params);
  return j;
}

// Writes run.json, curve.csv and generalization.csv, then fit.json last: its
// presence marks the cell complete. Aborted runs get no fit.json.
inline void write_run(const fs::path& dir, const RunRecord& r) {
  write_file_atomic(dir / "run.json", run_json(r).dump(2) + "\n");
  write_file_atomic(dir / "curve.csv", curve_csv(r));
  write_file_atomic(dir / "generalization.csv", generalization_csv(r));
  if (!r.aborted) write_file_atomic(dir / "fit.json", to_json(fit_run(r)).dump(2) + "\n");
}

inline bool run_complete(const fs::path& dir) { return fs::exists(dir / "fit.json"); }

// Completed runs under a sweep root, in (base, carry_id, seed) order.
inline std::vector<RunOutcome> load_runs(const fs::path& root) {
  std::vector<RunOutcome> out;
  if (!fs::is_directory(root)) return out;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "fit.json") dirs.push_back(e.path().parent_path());
  }
  for (const auto& d : dirs) {
    if (!fs::exists(d / "run.json")) continue;
    const auto run = read_json(d / "run.json");
    RunOutcome o;
    o.base = run.at("config").at("base").get<int>();
    o.carry_id = run.at("config").at("carry_id").get<std::size_t>();
    o.seed = run.at("config").at("seed").get<std::uint64_t>();
    o.max_test_accuracy = run.at("max_test_accuracy").get<double>();
    o.fit = sigmoid_fit_from_json(read_json(d / "fit.json"));
    out.push_back(o);
  }
  std::sort(out.begin(), out.end(), [](const RunOutcome& a, const RunOutcome& b) {
    return std::tie(a.base, a.carry_id, a.seed) < std::tie(b.base, b.carry_id, b.seed);
  });
  return out;
}

}  // namespace carrylab
