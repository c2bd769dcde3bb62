#pragma once

/**
 * Structure-learnability aggregation over a sweep.
 *
 * Runs are averaged per carry table. Each learning metric is then rank
 * correlated with each structure measure across tables. Critical points are
 * divided by the smallest per-table critical point of the same base.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carrylab/error.hpp"
#include "carrylab/measures.hpp"
#include "carrylab/sigmoid.hpp"
#include "carrylab/spearman.hpp"

namespace carrylab {

// What aggregation needs from one completed run.
struct RunOutcome {
  int base = 0;
  std::size_t carry_id = 0;
  std::uint64_t seed = 0;
  double max_test_accuracy = 0.0;
  SigmoidFit fit;
};

// Structure measures of one table as used in the correlations: minimal-ordering
// box dimension and associativity fraction at the deepest measured depth, and
// carry frequency averaged over depths.
struct StructureMeasures {
  int base = 0;
  std::size_t carry_id = 0;
  std::string carry_class;
  double box_dim = 0.0;
  double carry_freq = 0.0;
  double assoc_fraction = 0.0;
};

inline StructureMeasures structure_measures(const MeasureReport& r, std::string carry_class) {
  if (!r.carry_id) throw config_error("measure report is not for an enumerated table");
  return {r.base, *r.carry_id, std::move(carry_class), r.deepest().box_dim_min_ordering, r.overall_carry_frequency,
          r.deepest().associativity.fraction};
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CarrySummary {
  StructureMeasures measures;
  std::size_t runs = 0;
  std::size_t ok_fits = 0;
  double mean_max_accuracy = 0.0;
  double mean_asymptote = kNaN;       // over ok fits
  double mean_critical_point = kNaN;  // over ok fits
  double normalized_critical_point = kNaN;
};

struct Correlation {
  std::string metric;
  std::string measure;
  SpearmanResult result;
};

struct ClassMean {
  int base = 0;
  std::string carry_class;
  std::size_t tables = 0;
  double mean_max_accuracy = 0.0;
};

struct AnalysisSummary {
  std::vector<CarrySummary> carries;  // ordered by (base, carry_id)
  std::vector<Correlation> correlations;
  std::vector<ClassMean> class_means;
  std::size_t total_runs = 0;
  std::size_t failed_fits = 0;

  const Correlation* find(const std::string& metric, const std::string& measure) const {
    for (const auto& c : correlations)
      if (c.metric == metric && c.measure == measure) return &c;
    return nullptr;
  }
};

inline const std::vector<std::string>& learning_metrics() {
  static const std::vector<std::string> names{"max_test_accuracy", "asymptote", "normalized_critical_point"};
  return names;
}

inline const std::vector<std::string>& structure_measure_names() {
  static const std::vector<std::string> names{"box_dim", "carry_freq", "assoc_fraction"};
  return names;
}

namespace detail {

inline double metric_value(const CarrySummary& s, const std::string& metric) {
  if (metric == "max_test_accuracy") return s.mean_max_accuracy;
  if (metric == "asymptote") return s.mean_asymptote;
  return s.normalized_critical_point;
}

inline double measure_value(const StructureMeasures& m, const std::string& measure) {
  if (measure == "box_dim") return m.box_dim;
  if (measure == "carry_freq") return m.carry_freq;
  return m.assoc_fraction;
}

}  // namespace detail

// Correlations need at least 3 tables with a defined metric; with fewer the
// entry is kept with n < 3 and NaN rho.
inline AnalysisSummary aggregate_analysis(const std::vector<RunOutcome>& runs,
                                          const std::vector<StructureMeasures>& measures) {
  std::map<std::pair<int, std::size_t>, const StructureMeasures*> by_key;
  for (const auto& m : measures) by_key[{m.base, m.carry_id}] = &m;

  std::map<std::pair<int, std::size_t>, std::vector<const RunOutcome*>> grouped;
  for (const auto& r : runs) {
    if (!by_key.contains({r.base, r.carry_id})) {
      throw config_error("no measure report for base " + std::to_string(r.base) + " carry " +
                         std::to_string(r.carry_id));
    }
    grouped[{r.base, r.carry_id}].push_back(&r);
  }

  AnalysisSummary out;
  out.total_runs = runs.size();
  std::map<int, double> min_critical;
  for (const auto& [key, group] : grouped) {
    CarrySummary s;
    s.measures = *by_key.at(key);
    s.runs = group.size();
    double acc = 0.0, asym = 0.0, crit = 0.0;
    for (const auto* r : group) {
      acc += r->max_test_accuracy;
      if (r->fit.ok()) {
        ++s.ok_fits;
        asym += r->fit.asymptote;
        crit += r->fit.critical_point;
      } else {
        ++out.failed_fits;
      }
    }
    s.mean_max_accuracy = acc / static_cast<double>(s.runs);
    if (s.ok_fits) {
      s.mean_asymptote = asym / static_cast<double>(s.ok_fits);
      s.mean_critical_point = crit / static_cast<double>(s.ok_fits);
      // Only positive critical points can serve as a divisor.
      if (s.mean_critical_point > 0.0) {
        auto [it, inserted] = min_critical.try_emplace(key.first, s.mean_critical_point);
        if (!inserted) it->second = std::min(it->second, s.mean_critical_point);
      }
    }
    out.carries.push_back(std::move(s));
  }
  for (auto& s : out.carries) {
    const auto it = min_critical.find(s.measures.base);
    if (it != min_critical.end() && std::isfinite(s.mean_critical_point)) {
      s.normalized_critical_point = s.mean_critical_point / it->second;
    }
  }

  for (const auto& metric : learning_metrics()) {
    for (const auto& measure : structure_measure_names()) {
      std::vector<double> xs, ys;
      for (const auto& s : out.carries) {
        const double v = detail::metric_value(s, metric);
        if (!std::isfinite(v)) continue;
        xs.push_back(v);
        ys.push_back(detail::measure_value(s.measures, measure));
      }
      Correlation c{metric, measure, {}};
      c.result.n = xs.size();
      if (xs.size() >= 3) c.result = spearman(xs, ys);
      out.correlations.push_back(std::move(c));
    }
  }

  std::map<std::pair<int, std::string>, std::pair<std::size_t, double>> classes;
  for (const auto& s : out.carries) {
    auto& [n, sum] = classes[{s.measures.base, s.measures.carry_class}];
    ++n;
    sum += s.mean_max_accuracy;
  }
  for (const auto& [key, v] : classes) {
    out.class_means.push_back({key.first, key.second, v.first, v.second / static_cast<double>(v.first)});
  }
  return out;
}

inline std::optional<double> class_mean(const AnalysisSummary& s, int base, const std::string& carry_class) {
  for (const auto& c : s.class_means)
    if (c.base == base && c.carry_class == carry_class) return c.mean_max_accuracy;
  return std::nullopt;
}

}  // namespace carrylab
