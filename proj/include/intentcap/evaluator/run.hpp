#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "intentcap/benchgen/benchmark.hpp"
#include "intentcap/core/json_io.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/evaluator/aggregate.hpp"
#include "intentcap/evaluator/sample_eval.hpp"

namespace intentcap::evaluator {

struct RunOptions {
  std::vector<llm::ModelProfile> models;
  EvalOptions eval;
  int workers = 1;
  bool resume = false;
};

struct RunSummary {
  std::size_t records = 0;
  std::size_t partial = 0;
  std::size_t resumed = 0;
};

namespace detail {

inline std::string record_key(const std::string& model_id, const std::string& sample_id) {
  return model_id + '\0' + sample_id;
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      // A crash mid-append leaves at most one torn line at the end.
      spdlog::warn("ignoring unreadable line in {}", path.string());
      continue;
    }
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace detail

inline std::vector<nlohmann::json> load_records(const std::filesystem::path& results_dir) {
  const auto path = results_dir / "records.jsonl";
  if (!std::filesystem::exists(path)) throw Error("no records at " + path.string());
  return detail::read_jsonl(path);
}

inline ReportLayout layout_for(const std::vector<llm::ModelProfile>& models, const EvalOptions& eval) {
  ReportLayout layout;
  for (const auto& m : models) layout.models.push_back(m.model_id);
  layout.metrics = eval.metrics;
  return layout;
}

/// aggregates.csv, differences.csv and report.md from a list of records.
inline void write_reports(const std::filesystem::path& results_dir, const std::vector<nlohmann::json>& records,
                          const ReportLayout& layout, const std::vector<int>& levels) {
  const auto agg = aggregate(records);
  const auto diffs = score_difference(agg.cells);
  io::write_text_file_atomic(results_dir / "aggregates.csv", aggregates_csv(agg, layout));
  io::write_text_file_atomic(results_dir / "differences.csv", differences_csv(diffs, layout));
  io::write_text_file_atomic(results_dir / "report.md", markdown_report(agg, diffs, layout, levels));
}

/// Evaluates every (model, sample) pair. Finished records are appended to a
/// journal as they complete; with `resume`, complete records already in the
/// journal are kept and their pairs skipped. At the end records.jsonl is
/// written atomically in (model, level, sample) order and the journal is
/// removed.
inline RunSummary run_evaluation(const benchgen::Benchmark& bench, const RunOptions& options, llm::Gateway& gateway,
                                 const EmbeddingProvider& provider, const std::filesystem::path& results_dir) {
  if (options.models.empty()) throw ConfigError("no models to evaluate");
  options.eval.validate();
  std::filesystem::create_directories(results_dir);
  const auto journal_path = results_dir / "records.journal.jsonl";

  std::map<std::string, nlohmann::json> done;
  RunSummary summary;
  if (options.resume) {
    for (auto& j : detail::read_jsonl(journal_path)) {
      if (j.value("status", "") != "complete") continue;
      // Key first: json assignment takes its argument by value, which would move j before the key is read.
      auto key = detail::record_key(j.at("model_id"), j.at("sample_id"));
      done[key] = std::move(j);
    }
    summary.resumed = done.size();
    if (summary.resumed) spdlog::info("resuming with {} finished record(s)", summary.resumed);
  } else {
    std::filesystem::remove(journal_path);
  }

  struct Job {
    std::size_t model;
    std::size_t sample;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < options.models.size(); ++m) {
    for (std::size_t s = 0; s < bench.samples.size(); ++s) {
      if (!done.count(detail::record_key(options.models[m].model_id, bench.samples[s].id))) jobs.push_back({m, s});
    }
  }

  std::vector<nlohmann::json> fresh(jobs.size());
  std::mutex journal_mutex;
  std::exception_ptr fatal;
  benchgen::run_parallel(jobs.size(), options.workers, [&](std::size_t k) {
    const auto& model = options.models[jobs[k].model];
    const auto& sample = bench.samples[jobs[k].sample];
    try {
      const auto rec = evaluate_sample(sample, model, options.eval, gateway, provider);
      if (rec.partial) spdlog::warn("{} on {} is partial at {}: {}", model.model_id, sample.id, rec.failed_step, rec.error);
      auto doc = nlohmann::json::parse(encode(rec).dump());
      std::lock_guard lock(journal_mutex);
      std::ofstream out(journal_path, std::ios::app | std::ios::binary);
      out << encode(rec).dump() << '\n';
      fresh[k] = std::move(doc);
    } catch (const std::exception&) {
      std::lock_guard lock(journal_mutex);
      if (!fatal) fatal = std::current_exception();
    }
  });
  if (fatal) std::rethrow_exception(fatal);

  // Final order: model as configured, then benchmark order (level, index).
  std::vector<nlohmann::json> records;
  std::map<std::string, nlohmann::json*> by_key;
  for (auto& [key, j] : done) by_key[key] = &j;
  for (auto& j : fresh) by_key[detail::record_key(j.at("model_id"), j.at("sample_id"))] = &j;
  std::string lines;
  for (const auto& model : options.models) {
    for (const auto& sample : bench.samples) {
      auto it = by_key.find(detail::record_key(model.model_id, sample.id));
      if (it == by_key.end()) continue;
      // Resumed and fresh records are both plain json, so key order matches.
      const auto& j = *it->second;
      lines += j.dump() + "\n";
      records.push_back(j);
      if (j.value("status", "") != "complete") ++summary.partial;
    }
  }
  summary.records = records.size();
  io::write_text_file_atomic(results_dir / "records.jsonl", lines);

  nlohmann::ordered_json run;
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (const auto& m : options.models) models.push_back(llm::encode_profile(m));
  run["models"] = std::move(models);
  run["judge_model"] = options.eval.judge_model ? llm::encode_profile(*options.eval.judge_model)
                                                : nlohmann::ordered_json(nullptr);
  run["judge_pairing"] = "matched-pairs";
  run["primary_metric"] = options.eval.primary_metric;
  run["metrics"] = options.eval.metrics;
  run["loss_weights"] = {options.eval.weights.mu_input(), options.eval.weights.mu_process(),
                         options.eval.weights.mu_output()};
  run["embedding_provider"] = provider.name() + "@" + provider.version();
  run["benchmark_seed"] = bench.spec.rng_seed;
  run["benchmark_levels"] = bench.spec.levels;
  run["benchmark"] = bench.provenance;
  run["prompt_version"] = gateway.prompts().version();
  run["mode"] = std::string(llm::to_string(gateway.mode()));
  run["record_count"] = summary.records;
  run["partial_count"] = summary.partial;
  if (gateway.mode() != llm::CassetteMode::replay) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    run["finished_at"] = buf;
  }
  io::save_json_file(results_dir / "run.json", run);

  if (!records.empty()) write_reports(results_dir, records, layout_for(options.models, options.eval), bench.spec.levels);
  std::filesystem::remove(journal_path);
  return summary;
}

}  // namespace intentcap::evaluator
