#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "intentcap/errors.hpp"
#include "intentcap/evaluator/sample_eval.hpp"

namespace intentcap::evaluator {

inline constexpr const char* kPipeline = "pipeline";  // condition label for the two losses

/// One reportable number from one record.
struct Observation {
  std::string metric;
  std::string condition;
  double value = 0.0;
};

/// Values a record contributes to the tables: loss roots, set similarities
/// per metric and condition, and judge scores rescaled to [0,1].
inline std::vector<Observation> observations(const nlohmann::json& record) {
  std::vector<Observation> out;
  for (const char* loss : {"signal_loss", "intention_loss"}) {
    if (auto it = record.find(loss); it != record.end()) out.push_back({loss, kPipeline, it->at("root").get<double>()});
  }
  if (auto ms = record.find("metric_scores"); ms != record.end()) {
    for (auto c = ms->begin(); c != ms->end(); ++c) {
      for (auto m = c->begin(); m != c->end(); ++m) out.push_back({m.key(), c.key(), m->at("score").get<double>()});
    }
  }
  if (auto js = record.find("judge_scores"); js != record.end()) {
    for (auto c = js->begin(); c != js->end(); ++c) {
      for (const char* dim : {"coverage", "consistency", "integration", "total"}) {
        out.push_back({std::string("judge_") + dim, c.key(), c->at(dim).get<double>() / 10.0});
      }
    }
  }
  return out;
}

inline std::vector<Observation> observations(const SampleRecord& r) {
  return observations(nlohmann::json::parse(encode(r).dump()));
}

struct AggregateCell {
  std::string model_id;
  int level = 0;
  std::string metric;
  std::string condition;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

struct Aggregation {
  std::vector<AggregateCell> cells;
  std::map<std::pair<std::string, int>, std::size_t> partial_counts;  // (model, level) -> excluded records
};

/// Mean and population standard deviation per (model, level, metric,
/// condition) over complete records. The result is independent of record
/// order: values are summed in sorted order.
inline Aggregation aggregate(const std::vector<nlohmann::json>& records) {
  if (records.empty()) throw ValidationError("no records to aggregate");
  using Key = std::tuple<std::string, int, std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  Aggregation out;
  for (const auto& r : records) {
    const auto model = r.at("model_id").get<std::string>();
    const int level = r.at("level").get<int>();
    if (r.value("status", "complete") != "complete") {
      ++out.partial_counts[{model, level}];
      continue;
    }
    for (const auto& o : observations(r)) groups[{model, level, o.metric, o.condition}].push_back(o.value);
  }
  for (auto& [key, values] : groups) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.cells.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), mean,
                         std::sqrt(ss / n), values.size()});
  }
  return out;
}

inline Aggregation aggregate(const std::vector<SampleRecord>& records) {
  std::vector<nlohmann::json> docs;
  for (const auto& r : records) docs.push_back(nlohmann::json::parse(encode(r).dump()));
  return aggregate(docs);
}

struct Difference {
  std::string model_id;
  std::string metric;
  std::vector<std::pair<int, double>> per_level;  // ascending level
  double average = 0.0;
};

/// with - without per level, and its mean over the levels where both
/// conditions are present.
inline std::vector<Difference> score_difference(const std::vector<AggregateCell>& cells) {
  std::map<std::tuple<std::string, std::string, int>, std::pair<std::optional<double>, std::optional<double>>> m;
  for (const auto& c : cells) {
    if (c.condition == kWith) m[{c.model_id, c.metric, c.level}].first = c.mean;
    if (c.condition == kWithout) m[{c.model_id, c.metric, c.level}].second = c.mean;
  }
  std::map<std::pair<std::string, std::string>, Difference> out;
  for (const auto& [key, pair] : m) {
    const auto& [model, metric, level] = key;
    if (!pair.first || !pair.second) {
      spdlog::warn("no {} value for {} {} at level {}; difference skipped", pair.first ? kWithout : kWith, model,
                   metric, level);
      continue;
    }
    auto& d = out[{model, metric}];
    d.model_id = model;
    d.metric = metric;
    d.per_level.emplace_back(level, *pair.first - *pair.second);
  }
  std::vector<Difference> result;
  for (auto& [key, d] : out) {
    double sum = 0.0;
    for (const auto& [level, v] : d.per_level) sum += v;
    d.average = sum / static_cast<double>(d.per_level.size());
    result.push_back(std::move(d));
  }
  return result;
}

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  // Avoid "-0.000" for tiny negatives.
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

/// "mean (std)" with three decimals.
inline std::string format_cell(double mean, double std) { return fixed(mean, 3) + " (" + fixed(std, 3) + ")"; }

/// Orders models as configured (unknown ones last, alphabetically).
struct ReportLayout {
  std::vector<std::string> models;
  std::vector<std::string> metrics;  // set-similarity metrics in report order

  std::vector<std::string> model_order(const std::vector<AggregateCell>& cells) const {
    std::vector<std::string> out = models;
    std::set<std::string> extra;
    for (const auto& c : cells) {
      if (std::find(out.begin(), out.end(), c.model_id) == out.end()) extra.insert(c.model_id);
    }
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }
};

inline std::string aggregates_csv(const Aggregation& agg, const ReportLayout& layout) {
  const auto models = layout.model_order(agg.cells);
  auto rank = [&](const std::string& m) { return std::find(models.begin(), models.end(), m) - models.begin(); };
  auto cells = agg.cells;
  std::stable_sort(cells.begin(), cells.end(), [&](const AggregateCell& a, const AggregateCell& b) {
    return std::make_tuple(rank(a.model_id), a.level, a.metric, a.condition) <
           std::make_tuple(rank(b.model_id), b.level, b.metric, b.condition);
  });
  std::string out = "model_id,level,metric,condition,mean,std,count,cell\n";
  for (const auto& c : cells) {
    out += c.model_id + "," + std::to_string(c.level) + "," + c.metric + "," + c.condition + "," +
           fixed(c.mean, 6) + "," + fixed(c.std, 6) + "," + std::to_string(c.count) + "," +
           format_cell(c.mean, c.std) + "\n";
  }
  return out;
}

inline std::string differences_csv(const std::vector<Difference>& diffs, const ReportLayout& layout) {
  std::vector<AggregateCell> dummy;
  for (const auto& d : diffs) dummy.push_back({d.model_id, 0, "", "", 0, 0, 0});
  const auto models = layout.model_order(dummy);
  std::string out = "model_id,metric,level,difference\n";
  for (const auto& model : models) {
    for (const auto& d : diffs) {
      if (d.model_id != model) continue;
      for (const auto& [level, v] : d.per_level) {
        out += model + "," + d.metric + "," + std::to_string(level) + "," + fixed(v, 5) + "\n";
      }
      out += model + "," + d.metric + ",average," + fixed(d.average, 5) + "\n";
    }
  }
  return out;
}

namespace detail {

inline std::string md_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  return out + "\n";
}

}  // namespace detail

/// Markdown report: a loss table, one table per metric (rows = model x
/// condition), and the difference table. Columns are levels in ascending
/// order; a level with no complete records is left out with a note.
inline std::string markdown_report(const Aggregation& agg, const std::vector<Difference>& diffs,
                                   const ReportLayout& layout, const std::vector<int>& requested_levels) {
  const auto models = layout.model_order(agg.cells);
  std::set<int> present;
  for (const auto& c : agg.cells) present.insert(c.level);
  std::set<int> requested(requested_levels.begin(), requested_levels.end());
  requested.insert(present.begin(), present.end());
  const std::vector<int> levels(present.begin(), present.end());

  std::map<std::tuple<std::string, int, std::string, std::string>, const AggregateCell*> index;
  for (const auto& c : agg.cells) index[{c.model_id, c.level, c.metric, c.condition}] = &c;
  auto cell = [&](const std::string& model, int level, const std::string& metric, const std::string& cond) {
    auto it = index.find({model, level, metric, cond});
    return it == index.end() ? std::string("n/a") : format_cell(it->second->mean, it->second->std);
  };
  std::vector<std::string> header = {"model", "quantity"};
  std::vector<std::string> rule = {"---", "---"};
  for (int l : levels) {
    header.push_back("level " + std::to_string(l));
    rule.push_back("---");
  }

  std::ostringstream md;
  md << "# Evaluation report\n\n";
  md << "Cells are mean (population standard deviation) over complete records. "
        "Losses are reported as square roots of the squared losses. "
        "Judge scores are divided by 10 to lie in [0,1].\n\n";
  for (int l : requested) {
    if (!present.count(l)) md << "Note: level " << l << " omitted, no complete records.\n";
  }
  for (const auto& [key, n] : agg.partial_counts) {
    md << "Note: " << n << " partial record(s) excluded for " << key.first << " at level " << key.second << ".\n";
  }
  md << "\n## Losses\n\n" << detail::md_row(header) << detail::md_row(rule);
  for (const auto& model : models) {
    for (const char* loss : {"signal_loss", "intention_loss"}) {
      std::vector<std::string> row = {model, loss};
      for (int l : levels) row.push_back(cell(model, l, loss, kPipeline));
      md << detail::md_row(row);
    }
  }

  std::vector<std::string> metric_tables = layout.metrics;
  for (const char* dim : {"judge_coverage", "judge_consistency", "judge_integration", "judge_total"}) {
    const bool any = std::any_of(agg.cells.begin(), agg.cells.end(), [&](const AggregateCell& c) { return c.metric == dim; });
    if (any) metric_tables.emplace_back(dim);
  }
  for (const auto& metric : metric_tables) {
    md << "\n## " << metric << "\n\n" << detail::md_row(header) << detail::md_row(rule);
    for (const auto& model : models) {
      for (const char* cond : {kWith, kWithout}) {
        std::vector<std::string> row = {model, cond};
        for (int l : levels) row.push_back(cell(model, l, metric, cond));
        md << detail::md_row(row);
      }
    }
  }

  md << "\n## Difference (with intention minus without intention)\n\n";
  std::vector<std::string> dh = {"model", "metric"};
  std::vector<std::string> dr = {"---", "---"};
  for (int l : levels) {
    dh.push_back("level " + std::to_string(l));
    dr.push_back("---");
  }
  dh.emplace_back("average");
  dr.emplace_back("---");
  md << detail::md_row(dh) << detail::md_row(dr);
  for (const auto& model : models) {
    for (const auto& d : diffs) {
      if (d.model_id != model) continue;
      std::vector<std::string> row = {model, d.metric};
      for (int l : levels) {
        auto it = std::find_if(d.per_level.begin(), d.per_level.end(), [&](const auto& p) { return p.first == l; });
        row.push_back(it == d.per_level.end() ? "n/a" : fixed(it->second, 5));
      }
      row.push_back(fixed(d.average, 5));
      md << detail::md_row(row);
    }
  }
  return md.str();
}

}  // namespace intentcap::evaluator
