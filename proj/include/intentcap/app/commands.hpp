#pragma once

// Command implementations behind the intentcap CLI. Live provider adapters
// are pulled in here, so users of this header link intentcap_http.

#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "intentcap/app/config.hpp"
#include "intentcap/benchgen/benchmark.hpp"
#include "intentcap/benchgen/catalog.hpp"
#include "intentcap/embeddings/http_provider.hpp"
#include "intentcap/evaluator/run.hpp"
#include "intentcap/llm/cassette.hpp"
#include "intentcap/llm/gateway.hpp"
#include "intentcap/llm/http_clients.hpp"
#include "intentcap/llm/scripted_stub.hpp"

namespace intentcap::app {

/// Command-line values that override the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<int>> levels;
  std::optional<int> samples_per_level;
  std::optional<std::string> mode;
  std::optional<int> workers;
  std::optional<std::vector<std::string>> metrics;
  std::optional<std::vector<std::string>> models;  // subset of configured ids

  void apply(RunConfig& c) const {
    if (seed) c.bench.rng_seed = *seed;
    if (levels) c.bench.levels = *levels;
    if (samples_per_level) c.bench.samples_per_level = *samples_per_level;
    if (mode) c.mode = llm::parse_cassette_mode(*mode);
    if (workers) c.workers = *workers;
    if (metrics) {
      c.metrics = *metrics;
      if (std::find(c.metrics.begin(), c.metrics.end(), c.primary_metric) == c.metrics.end() && !c.metrics.empty()) {
        c.primary_metric = c.metrics.front();
      }
    }
    if (models) {
      std::vector<llm::ModelProfile> picked;
      for (const auto& id : *models) {
        auto it = std::find_if(c.models.begin(), c.models.end(), [&](const auto& m) { return m.model_id == id; });
        if (it == c.models.end()) throw ConfigError("unknown model id '" + id + "'");
        picked.push_back(*it);
      }
      c.models = std::move(picked);
    }
  }
};

inline std::shared_ptr<llm::ChatClient> make_client(const llm::ModelProfile& m, const RunConfig& c) {
  switch (m.provider_kind) {
    case llm::ProviderKind::scripted_stub:
      return std::make_shared<llm::ScriptedStubClient>(llm::StubScript::load(c.stub_scripts.at(m.model_id)));
    case llm::ProviderKind::openai_compatible: return llm::OpenAiCompatibleClient::from_env();
    case llm::ProviderKind::anthropic_compatible: return llm::AnthropicCompatibleClient::from_env();
  }
  throw ConfigError("unsupported provider for " + m.model_id);
}

/// Replay mode builds no clients at all, so it cannot reach a provider.
inline std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& c) {
  llm::Gateway::ClientMap clients;
  if (c.mode != llm::CassetteMode::replay) {
    for (const auto& m : c.all_profiles()) clients[m.model_id] = make_client(m, c);
  }
  std::shared_ptr<llm::Cassette> cassette;
  if (c.cassette) {
    cassette = std::make_shared<llm::Cassette>(llm::Cassette::open(*c.cassette));
  }
  auto prompts = c.prompt_dir ? llm::PromptLibrary::with_overrides(*c.prompt_dir) : llm::PromptLibrary();
  return std::make_unique<llm::Gateway>(std::move(clients), std::move(cassette), c.mode, std::move(prompts), c.gateway);
}

inline std::shared_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingConfig& e) {
  std::shared_ptr<const EmbeddingProvider> inner;
  if (e.provider == "lexical-stub") {
    inner = std::make_shared<LexicalStubProvider>(e.dimension, e.seed);
  } else if (e.provider == "openai-compatible") {
    inner = HttpEmbeddingProvider::from_env(e.model, e.dimension);
  } else {
    throw ConfigError("unknown embedding provider '" + e.provider + "'");
  }
  return std::make_shared<CachingProvider>(inner, e.cache_dir);
}

inline int cmd_pool_build(const std::filesystem::path& catalog_path, const std::filesystem::path& out,
                          std::ostream& os) {
  if (!std::filesystem::exists(catalog_path)) throw ConfigError("catalog not found: " + catalog_path.string());
  const auto catalog = benchgen::load_catalog(catalog_path);
  const auto pools = benchgen::build_pools(catalog);
  io::save_json_file(out, io::encode(pools));
  std::map<std::string, std::size_t> per_industry;
  for (const auto& e : catalog) ++per_industry[e.industry];
  os << "services: " << catalog.size() << "\n";
  for (const auto& [industry, n] : per_industry) os << "  " << industry << ": " << n << "\n";
  os << "input pool: " << pools.input_pool.size() << "\n"
     << "process pool: " << pools.process_pool.size() << "\n"
     << "output pool: " << pools.output_pool.size() << "\n"
     << "wrote " << out.string() << "\n";
  return 0;
}

inline int cmd_bench_gen(const RunConfig& c, std::ostream& os) {
  c.validate();
  if (!std::filesystem::exists(c.pools_file)) {
    throw ConfigError("pools file " + c.pools_file.string() + " not found; run pool-build first");
  }
  const auto pools = io::load_pools(c.pools_file);
  auto gateway = make_gateway(c);
  const auto bench = benchgen::generate_benchmark(c.bench, pools, *gateway, c.workers);
  std::filesystem::remove_all(c.benchmark_dir / "samples");
  benchgen::write_benchmark(c.benchmark_dir, bench);
  for (int l : bench.skipped_levels) {
    os << "level " << l << " skipped: " << l << " x " << c.bench.avg_workflow_tokens
       << " tokens is not below the output limit of " << c.bench.generation_model.model_id << "\n";
  }
  os << "samples: " << bench.samples.size() << ", failures: " << bench.failures.size() << "\n"
     << "wrote " << c.benchmark_dir.string() << "\n";
  return 0;
}

inline int cmd_eval_run(const RunConfig& c, bool resume, std::ostream& os) {
  c.validate();
  if (!std::filesystem::exists(c.benchmark_dir / "spec.json")) {
    throw ConfigError("no benchmark at " + c.benchmark_dir.string() + "; run bench-gen first");
  }
  const auto bench = benchgen::load_benchmark(c.benchmark_dir);
  if (bench.samples.empty()) throw Error("benchmark has no samples");
  auto gateway = make_gateway(c);
  const auto provider = make_embedding_provider(c.embedding);
  evaluator::RunOptions options;
  options.models = c.models;
  options.eval = {c.weights(), c.metrics, c.primary_metric, c.judge_model};
  options.workers = c.workers;
  options.resume = resume;
  const auto summary = evaluator::run_evaluation(bench, options, *gateway, *provider, c.results_dir);
  os << "records: " << summary.records << " (partial " << summary.partial << ", resumed " << summary.resumed
     << ")\n"
     << "wrote " << c.results_dir.string() << "\n";
  return 0;
}

/// Rebuilds aggregates, differences and the markdown report from
/// records.jsonl; model and metric order come from run.json.
inline int cmd_report(const std::filesystem::path& results_dir, std::ostream& os) {
  const auto records = evaluator::load_records(results_dir);
  if (records.empty()) throw Error("no records in " + results_dir.string());
  evaluator::ReportLayout layout;
  std::vector<int> levels;
  if (std::filesystem::exists(results_dir / "run.json")) {
    const auto run = io::load_json_file(results_dir / "run.json");
    for (const auto& m : run.value("models", nlohmann::json::array())) {
      layout.models.push_back(m.at("model_id").get<std::string>());
    }
    layout.metrics = run.value("metrics", evaluator::all_metrics());
    levels = run.value("benchmark_levels", std::vector<int>{});
  } else {
    layout.metrics = evaluator::all_metrics();
  }
  evaluator::write_reports(results_dir, records, layout, levels);
  os << "wrote " << (results_dir / "report.md").string() << "\n";
  return 0;
}

inline int cmd_cassette_ls(const std::filesystem::path& path, std::ostream& os) {
  if (!std::filesystem::exists(path)) throw ConfigError("cassette not found: " + path.string());
  const auto cassette = llm::Cassette::open(path);
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& e : cassette.entries()) {
    os << e.key.substr(0, 12) << "  " << e.role << "  " << e.model_id << "  " << e.usage.prompt_tokens << "/"
       << e.usage.completion_tokens << "\n";
    ++counts[{e.model_id, e.role}];
  }
  os << "entries: " << cassette.size() << "\n";
  for (const auto& [key, n] : counts) os << "  " << key.first << " " << key.second << ": " << n << "\n";
  return 0;
}

inline int cmd_cassette_verify(const std::filesystem::path& path, std::ostream& os) {
  if (!std::filesystem::exists(path)) throw ConfigError("cassette not found: " + path.string());
  const auto problems = llm::verify_cassette_file(path);
  for (const auto& p : problems) os << p << "\n";
  if (!problems.empty()) {
    os << problems.size() << " problem(s)\n";
    return 2;
  }
  os << "ok\n";
  return 0;
}

}  // namespace intentcap::app
