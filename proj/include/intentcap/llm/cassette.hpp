#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentcap/digest.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/llm/types.hpp"

namespace intentcap::llm {

enum class CassetteMode { live, record, replay };

inline std::string_view to_string(CassetteMode m) {
  switch (m) {
    case CassetteMode::live: return "live";
    case CassetteMode::record: return "record";
    case CassetteMode::replay: return "replay";
  }
  return "?";
}

inline CassetteMode parse_cassette_mode(std::string_view s) {
  if (s == "live") return CassetteMode::live;
  if (s == "record") return CassetteMode::record;
  if (s == "replay") return CassetteMode::replay;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected live, record or replay)");
}

struct CassetteEntry {
  std::string key;
  std::string role;
  std::string model_id;
  std::string prompt_hash;
  std::string prompt;
  std::string response;
  TokenUsage usage;
};

inline std::string exchange_key(const std::string& role, const std::string& model_id,
                                const std::string& prompt) {
  return field_digest(role, model_id, prompt);
}

inline nlohmann::ordered_json encode_entry(const CassetteEntry& e) {
  nlohmann::ordered_json j;
  j["key"] = e.key;
  j["role"] = e.role;
  j["model_id"] = e.model_id;
  j["prompt_hash"] = e.prompt_hash;
  j["prompt"] = e.prompt;
  j["response"] = e.response;
  j["usage"] = {{"prompt_tokens", e.usage.prompt_tokens}, {"completion_tokens", e.usage.completion_tokens}};
  return j;
}

inline CassetteEntry decode_entry(const nlohmann::json& j) {
  CassetteEntry e;
  e.key = j.at("key").get<std::string>();
  e.role = j.at("role").get<std::string>();
  e.model_id = j.at("model_id").get<std::string>();
  e.prompt_hash = j.at("prompt_hash").get<std::string>();
  e.prompt = j.value("prompt", std::string());
  e.response = j.at("response").get<std::string>();
  if (auto u = j.find("usage"); u != j.end()) {
    e.usage.prompt_tokens = u->value("prompt_tokens", std::int64_t{0});
    e.usage.completion_tokens = u->value("completion_tokens", std::int64_t{0});
  }
  return e;
}

/// Append-only JSON-lines transcript of LLM exchanges keyed by
/// hash(role, model_id, prompt). Reads are concurrent; appends serialize.
class Cassette {
 public:
  Cassette() = default;

  /// Loads `path` if it exists; appends go to the same file. Malformed lines
  /// are a ParseError naming the line.
  static Cassette open(const std::filesystem::path& path) {
    Cassette c;
    c.path_ = path;
    std::ifstream in(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        auto e = decode_entry(nlohmann::json::parse(line));
        c.index_.emplace(e.key, c.entries_.size());
        c.entries_.push_back(std::move(e));
      } catch (const std::exception& ex) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
      }
    }
    return c;
  }

  /// In-memory cassette, used by tests.
  static Cassette in_memory() { return Cassette(); }

  Cassette(Cassette&& other) noexcept
      : path_(std::move(other.path_)), entries_(std::move(other.entries_)), index_(std::move(other.index_)) {}

  std::optional<CassetteEntry> find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second];
  }

  /// Adds an entry unless the key is already present. Returns false for a
  /// duplicate.
  bool append(CassetteEntry entry) {
    std::unique_lock lock(mutex_);
    if (index_.count(entry.key)) return false;
    if (path_) {
      if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
      std::ofstream out(*path_, std::ios::app | std::ios::binary);
      out << encode_entry(entry).dump() << '\n';
      out.flush();
      if (!out) throw Error("cannot append to cassette " + path_->string());
    }
    index_.emplace(entry.key, entries_.size());
    entries_.push_back(std::move(entry));
    return true;
  }

  std::vector<CassetteEntry> entries() const {
    std::shared_lock lock(mutex_);
    return entries_;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<CassetteEntry> entries_;
  std::map<std::string, std::size_t> index_;
  mutable std::shared_mutex mutex_;
};

/// Integrity problems in a cassette file: unparseable lines, key or prompt
/// hash mismatches, duplicate keys. Empty means the file verifies.
inline std::vector<std::string> verify_cassette_file(const std::filesystem::path& path) {
  std::vector<std::string> problems;
  std::ifstream in(path);
  if (!in) {
    problems.push_back("cannot open " + path.string());
    return problems;
  }
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    CassetteEntry e;
    try {
      e = decode_entry(nlohmann::json::parse(line));
    } catch (const std::exception& ex) {
      problems.push_back(where + "unparseable entry (" + ex.what() + ")");
      continue;
    }
    if (sha256_hex(e.prompt) != e.prompt_hash) problems.push_back(where + "prompt hash mismatch");
    if (exchange_key(e.role, e.model_id, e.prompt) != e.key) problems.push_back(where + "exchange key mismatch");
    if (auto [it, fresh] = seen.emplace(e.key, line_no); !fresh) {
      problems.push_back(where + "duplicate key first seen on line " + std::to_string(it->second));
    }
  }
  return problems;
}

}  // namespace intentcap::llm
