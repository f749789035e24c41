#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "intentcap/benchgen/catalog.hpp"
#include "intentcap/core/json_io.hpp"
#include "intentcap/core/sample.hpp"
#include "intentcap/digest.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/llm/gateway.hpp"
#include "intentcap/llm/types.hpp"
#include "intentcap/rng.hpp"

namespace intentcap::benchgen {

inline constexpr std::int64_t kDefaultWorkflowTokens = 10000;

/// True iff n * X < L_output.
inline bool check_token_budget(std::int64_t n, std::int64_t avg_workflow_tokens, const llm::ModelProfile& model) {
  if (n <= 0 || avg_workflow_tokens <= 0) throw ValidationError("token budget inputs must be positive");
  return n * avg_workflow_tokens < model.max_output_tokens;
}

struct BenchmarkSpec {
  std::vector<int> levels{2, 3};
  int samples_per_level = 5;
  std::uint64_t rng_seed = 0;
  llm::ModelProfile generation_model;
  std::int64_t avg_workflow_tokens = kDefaultWorkflowTokens;

  void validate() const {
    if (levels.empty()) throw ConfigError("at least one level is required");
    for (int l : levels) {
      if (l < kMinLevel || l > kMaxLevel) throw ConfigError("level " + std::to_string(l) + " outside [1,10]");
    }
    if (std::set<int>(levels.begin(), levels.end()).size() != levels.size()) {
      throw ConfigError("levels must not repeat");
    }
    if (samples_per_level < 1) throw ConfigError("samples_per_level must be at least 1");
    if (avg_workflow_tokens <= 0) throw ConfigError("avg_workflow_tokens must be positive");
    generation_model.validate();
  }
};

inline nlohmann::ordered_json encode(const BenchmarkSpec& s) {
  nlohmann::ordered_json j;
  j["levels"] = s.levels;
  j["samples_per_level"] = s.samples_per_level;
  j["rng_seed"] = s.rng_seed;
  j["generation_model"] = llm::encode_profile(s.generation_model);
  j["avg_workflow_tokens"] = s.avg_workflow_tokens;
  return j;
}

inline BenchmarkSpec decode_spec(const nlohmann::json& j) {
  BenchmarkSpec s;
  try {
    s.levels = j.at("levels").get<std::vector<int>>();
    s.samples_per_level = j.at("samples_per_level").get<int>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.generation_model = llm::decode_profile(j.at("generation_model"));
    s.avg_workflow_tokens = j.value("avg_workflow_tokens", kDefaultWorkflowTokens);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("benchmark spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline std::string sample_id(int level, int index) {
  return "L" + std::to_string(level) + "-S" + std::to_string(index);
}

/// Builds one sample: n intentions with distinct process elements, one
/// singular elicitation each, a reference workflow per intention generated
/// from that intention with its elicitation as context, and the mixed
/// elicitation over all singulars. All randomness comes from `rng`.
inline Sample build_sample(int level, int index, const Pools& pools, llm::Gateway& gateway,
                           const llm::ModelProfile& model, Rng& rng) {
  if (level < kMinLevel || level > kMaxLevel) throw ValidationError("level outside [1,10]");
  Sample s;
  s.id = sample_id(level, index);
  s.level = level;
  std::vector<Intention> intentions;
  std::set<std::string> used;
  for (int j = 1; j <= level; ++j) {
    auto intention = draw_intention(pools, rng, used);
    intention.id = s.id + "-I" + std::to_string(j);
    used.insert(intention.signals.process().front().text());
    intentions.push_back(std::move(intention));
  }
  s.reference_intentions = IntentionSet(intentions);
  for (const auto& i : s.reference_intentions) {
    s.singular_elicitations.push_back(gateway.synthesize_singular_elicitation(i, model));
  }
  for (std::size_t j = 0; j < intentions.size(); ++j) {
    s.reference_workflows.push_back(
        gateway.generate_workflow_with_intention(intentions[j], model, s.singular_elicitations[j].text()));
  }
  s.mixed_elicitation = gateway.synthesize_mixed_elicitation(s.singular_elicitations, model);
  if (const auto problems = validate_sample(s); !problems.empty()) {
    throw ValidationError("sample " + s.id + " is invalid: " + problems.front());
  }
  return s;
}

struct GenerationFailure {
  std::string sample_id;
  int level = 0;
  int index = 0;
  std::string error;
};

struct Benchmark {
  BenchmarkSpec spec;
  std::vector<Sample> samples;
  std::vector<GenerationFailure> failures;
  std::vector<int> skipped_levels;  // failed the token budget
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
};

/// Runs `jobs` closures on up to `workers` threads. Results land by job index,
/// so the outcome does not depend on scheduling.
inline void run_parallel(std::size_t jobs, int workers, const std::function<void(std::size_t)>& job) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || jobs <= 1) {
    for (std::size_t k = 0; k < jobs; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, jobs); ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs; k = next++) job(k);
    });
  }
  for (auto& th : pool) th.join();
}

inline std::string pools_digest(const Pools& pools) { return sha256_hex(io::encode(pools).dump()); }

/// Generates every admissible (level, index) sample. Role failures are
/// recorded per sample; configuration errors abort the run.
inline Benchmark generate_benchmark(const BenchmarkSpec& spec, const Pools& pools, llm::Gateway& gateway,
                                    int workers = 1) {
  spec.validate();
  if (pools.process_pool.empty()) throw ValidationError("process pool is empty");
  Benchmark bench;
  bench.spec = spec;

  struct Job {
    int level;
    int index;
  };
  std::vector<Job> jobs;
  auto levels = spec.levels;
  std::sort(levels.begin(), levels.end());
  for (int level : levels) {
    if (!check_token_budget(level, spec.avg_workflow_tokens, spec.generation_model)) {
      spdlog::warn("level {} skipped: {} x {} tokens does not fit below {}", level, level,
                   spec.avg_workflow_tokens, spec.generation_model.max_output_tokens);
      bench.skipped_levels.push_back(level);
      continue;
    }
    for (int idx = 1; idx <= spec.samples_per_level; ++idx) jobs.push_back({level, idx});
  }

  std::vector<std::optional<Sample>> built(jobs.size());
  std::vector<std::optional<GenerationFailure>> failed(jobs.size());
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  run_parallel(jobs.size(), workers, [&](std::size_t k) {
    const auto [level, idx] = jobs[k];
    Rng rng(derive_seed(spec.rng_seed, static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(idx)));
    try {
      built[k] = build_sample(level, idx, pools, gateway, spec.generation_model, rng);
    } catch (const ConfigError&) {
      std::lock_guard lock(fatal_mutex);
      if (!fatal) fatal = std::current_exception();
    } catch (const std::exception& e) {
      spdlog::warn("sample {} failed: {}", sample_id(level, idx), e.what());
      failed[k] = GenerationFailure{sample_id(level, idx), level, idx, e.what()};
    }
  });
  if (fatal) std::rethrow_exception(fatal);
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (built[k]) bench.samples.push_back(std::move(*built[k]));
    if (failed[k]) bench.failures.push_back(std::move(*failed[k]));
  }

  auto& p = bench.provenance;
  p["pool_digest"] = pools_digest(pools);
  p["generation_model"] = spec.generation_model.model_id;
  p["prompt_version"] = gateway.prompts().version();
  p["reference_generation"] = "with-intention-prompt";
  p["mode"] = std::string(llm::to_string(gateway.mode()));
  if (const auto& cassette = gateway.cassette().path()) p["cassette"] = cassette->filename().string();
  if (gateway.mode() != llm::CassetteMode::replay) {
    // Replayed benchmarks must be byte-identical, so they carry no clock.
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    p["created_at"] = buf;
  }
  return bench;
}

inline nlohmann::ordered_json encode(const GenerationFailure& f) {
  return {{"sample_id", f.sample_id}, {"level", f.level}, {"index", f.index}, {"error", f.error}};
}

inline std::filesystem::path sample_path(const std::filesystem::path& dir, int level, int index) {
  return dir / "samples" / ("level-" + std::to_string(level)) / ("sample-" + std::to_string(index) + ".json");
}

/// Layout: spec.json, samples/level-<n>/sample-<idx>.json, failures.jsonl.
inline void write_benchmark(const std::filesystem::path& dir, const Benchmark& bench) {
  nlohmann::ordered_json spec_doc = encode(bench.spec);
  spec_doc["skipped_levels"] = bench.skipped_levels;
  spec_doc["sample_count"] = bench.samples.size();
  spec_doc["failure_count"] = bench.failures.size();
  spec_doc["provenance"] = bench.provenance;
  io::save_json_file(dir / "spec.json", spec_doc);
  for (const auto& s : bench.samples) {
    const auto idx = std::stoi(s.id.substr(s.id.find("-S") + 2));
    io::save_json_file(sample_path(dir, s.level, idx), io::encode(s));
  }
  std::string failures;
  for (const auto& f : bench.failures) failures += encode(f).dump() + "\n";
  io::write_text_file_atomic(dir / "failures.jsonl", failures);
}

/// Reads spec.json and every sample file, ordered by level then index.
inline Benchmark load_benchmark(const std::filesystem::path& dir) {
  Benchmark bench;
  const auto spec_doc = io::load_json_file(dir / "spec.json");
  io::check_version(spec_doc, (dir / "spec.json").string());
  bench.spec = decode_spec(spec_doc);
  bench.skipped_levels = spec_doc.value("skipped_levels", std::vector<int>{});
  if (auto p = spec_doc.find("provenance"); p != spec_doc.end()) {
    bench.provenance = nlohmann::ordered_json::parse(p->dump());
  }
  auto levels = bench.spec.levels;
  std::sort(levels.begin(), levels.end());
  for (int level : levels) {
    for (int idx = 1; idx <= bench.spec.samples_per_level; ++idx) {
      const auto path = sample_path(dir, level, idx);
      if (!std::filesystem::exists(path)) continue;
      bench.samples.push_back(io::load_sample(path));
    }
  }
  if (std::filesystem::exists(dir / "failures.jsonl")) {
    std::istringstream in(io::read_text_file(dir / "failures.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = io::parse_json_text(line, (dir / "failures.jsonl").string());
      bench.failures.push_back({j.at("sample_id").get<std::string>(), j.at("level").get<int>(),
                                j.at("index").get<int>(), j.at("error").get<std::string>()});
    }
  }
  return bench;
}

}  // namespace intentcap::benchgen
