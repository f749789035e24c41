#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentcap/benchgen/benchmark.hpp"
#include "intentcap/core/json_io.hpp"
#include "intentcap/embeddings/provider.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/evaluator/sample_eval.hpp"
#include "intentcap/llm/cassette.hpp"
#include "intentcap/llm/gateway.hpp"
#include "intentcap/llm/types.hpp"
#include "intentcap/matchloss/losses.hpp"

namespace intentcap::app {

struct EmbeddingConfig {
  std::string provider = "lexical-stub";  // or openai-compatible
  std::string model;
  std::size_t dimension = 64;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> cache_dir;
};

/// Everything a run needs. Loaded from JSON; relative paths resolve against
/// the config file's directory and "${NAME}" expands from the environment.
struct RunConfig {
  std::filesystem::path catalog;
  std::filesystem::path pools_file = "pools.json";
  std::filesystem::path benchmark_dir = "benchmark";
  std::filesystem::path results_dir = "results";
  std::optional<std::filesystem::path> cassette;
  std::optional<std::filesystem::path> prompt_dir;
  llm::CassetteMode mode = llm::CassetteMode::replay;
  int workers = 1;

  benchgen::BenchmarkSpec bench;
  std::vector<llm::ModelProfile> models;
  std::optional<llm::ModelProfile> judge_model;
  std::map<std::string, std::filesystem::path> stub_scripts;  // model_id -> script
  std::vector<std::string> metrics = evaluator::all_metrics();
  std::string primary_metric = "cosine";
  std::array<double, 3> loss_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  EmbeddingConfig embedding;
  llm::GatewayOptions gateway;

  /// Every model the gateway may be asked for, each id once.
  std::vector<llm::ModelProfile> all_profiles() const {
    std::vector<llm::ModelProfile> out;
    auto add = [&](const llm::ModelProfile& m) {
      for (const auto& o : out) {
        if (o.model_id == m.model_id) return;
      }
      out.push_back(m);
    };
    add(bench.generation_model);
    for (const auto& m : models) add(m);
    if (judge_model) add(*judge_model);
    return out;
  }

  LossWeights weights() const { return LossWeights(loss_weights[0], loss_weights[1], loss_weights[2]); }

  /// Invariants that do not depend on which command runs.
  void validate() const {
    bench.validate();
    if (models.empty()) throw ConfigError("config lists no models");
    std::set<std::string> ids;
    for (const auto& m : models) {
      m.validate();
      if (!ids.insert(m.model_id).second) throw ConfigError("model '" + m.model_id + "' listed twice");
    }
    if (judge_model) judge_model->validate();
    if (workers < 1) throw ConfigError("workers must be at least 1");
    try {
      (void)weights();
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
    evaluator::EvalOptions{weights(), metrics, primary_metric, judge_model}.validate();
    if (mode == llm::CassetteMode::replay && (!cassette || !std::filesystem::exists(*cassette))) {
      throw ConfigError("replay mode needs an existing cassette file");
    }
    if (mode == llm::CassetteMode::record && !cassette) throw ConfigError("record mode needs a cassette path");
    for (const auto& m : all_profiles()) {
      if (m.provider_kind == llm::ProviderKind::scripted_stub && !stub_scripts.count(m.model_id)) {
        throw ConfigError("scripted-stub model '" + m.model_id + "' has no stub_script");
      }
    }
  }
};

namespace detail {

/// Replaces ${NAME} with the environment value; unset variables are errors.
inline std::string interpolate(const std::string& s) {
  static const std::regex var(R"(\$\{([A-Za-z_][A-Za-z0-9_]*)\})");
  std::string out;
  auto begin = std::sregex_iterator(s.begin(), s.end(), var);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto name = (*it)[1].str();
    const char* value = std::getenv(name.c_str());
    if (!value) throw ConfigError("environment variable " + name + " is not set");
    out.append(s, last, static_cast<std::size_t>(it->position()) - last);
    out += value;
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(s, last, std::string::npos);
  return out;
}

inline void interpolate_all(nlohmann::json& j) {
  if (j.is_string()) {
    j = interpolate(j.get<std::string>());
  } else if (j.is_array() || j.is_object()) {
    for (auto& v : j) interpolate_all(v);
  }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace detail

inline RunConfig parse_config(nlohmann::json j, const std::filesystem::path& base_dir) {
  detail::interpolate_all(j);
  RunConfig c;
  try {
    auto path_of = [&](const char* key, std::filesystem::path& dst) {
      if (j.contains(key)) dst = detail::resolve(base_dir, j[key].get<std::string>());
    };
    auto opt_path_of = [&](const char* key, std::optional<std::filesystem::path>& dst) {
      if (j.contains(key) && !j[key].is_null()) dst = detail::resolve(base_dir, j[key].get<std::string>());
    };
    if (!j.contains("catalog")) throw ConfigError("config needs 'catalog'");
    path_of("catalog", c.catalog);
    c.pools_file = base_dir / c.pools_file;
    c.benchmark_dir = base_dir / c.benchmark_dir;
    c.results_dir = base_dir / c.results_dir;
    path_of("pools_file", c.pools_file);
    path_of("benchmark_dir", c.benchmark_dir);
    path_of("results_dir", c.results_dir);
    opt_path_of("cassette", c.cassette);
    opt_path_of("prompt_dir", c.prompt_dir);
    if (j.contains("mode")) c.mode = llm::parse_cassette_mode(j["mode"].get<std::string>());
    c.workers = j.value("workers", c.workers);

    auto read_model = [&](const nlohmann::json& m) {
      auto profile = llm::decode_profile(m);
      if (m.contains("stub_script")) {
        c.stub_scripts[profile.model_id] = detail::resolve(base_dir, m["stub_script"].get<std::string>());
      }
      return profile;
    };
    if (j.contains("levels")) c.bench.levels = j["levels"].get<std::vector<int>>();
    c.bench.samples_per_level = j.value("samples_per_level", c.bench.samples_per_level);
    c.bench.rng_seed = j.value("seed", c.bench.rng_seed);
    c.bench.avg_workflow_tokens = j.value("avg_workflow_tokens", c.bench.avg_workflow_tokens);
    if (!j.contains("generation_model")) throw ConfigError("config needs 'generation_model'");
    c.bench.generation_model = read_model(j["generation_model"]);
    for (const auto& m : j.value("models", nlohmann::json::array())) c.models.push_back(read_model(m));
    if (j.contains("judge_model") && !j["judge_model"].is_null()) c.judge_model = read_model(j["judge_model"]);

    if (j.contains("metrics")) c.metrics = j["metrics"].get<std::vector<std::string>>();
    c.primary_metric = j.value("primary_metric", c.primary_metric);
    if (j.contains("loss_weights")) {
      const auto w = j["loss_weights"].get<std::vector<double>>();
      if (w.size() != 3) throw ConfigError("loss_weights must have 3 entries");
      c.loss_weights = {w[0], w[1], w[2]};
    }
    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      c.embedding.provider = e.value("provider", c.embedding.provider);
      c.embedding.model = e.value("model", c.embedding.model);
      c.embedding.dimension = e.value("dimension", c.embedding.dimension);
      c.embedding.seed = e.value("seed", c.embedding.seed);
      if (e.contains("cache_dir") && !e["cache_dir"].is_null()) {
        c.embedding.cache_dir = detail::resolve(base_dir, e["cache_dir"].get<std::string>());
      }
    }
    if (j.contains("gateway")) {
      const auto& g = j["gateway"];
      c.gateway.max_attempts = g.value("max_attempts", c.gateway.max_attempts);
      c.gateway.transport_retries = g.value("transport_retries", c.gateway.transport_retries);
      c.gateway.backoff_base = std::chrono::milliseconds(g.value("backoff_ms", c.gateway.backoff_base.count()));
      c.gateway.max_in_flight = g.value("max_in_flight", c.gateway.max_in_flight);
      c.gateway.synthesis_temperature = g.value("synthesis_temperature", c.gateway.synthesis_temperature);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = io::load_json_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(std::move(j), std::filesystem::absolute(path).parent_path());
}

}  // namespace intentcap::app
