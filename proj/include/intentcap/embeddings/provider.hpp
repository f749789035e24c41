#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "intentcap/digest.hpp"
#include "intentcap/embeddings/vector.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/rng.hpp"

namespace intentcap {

/// Sentence embedding source. Implementations must be deterministic per
/// (name, version) and callable from many threads at once.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual std::string version() const = 0;
  virtual std::size_t dimension() const = 0;

  /// Raw (unnormalized) model output for `text`.
  virtual std::vector<float> raw_embedding(std::string_view text) const = 0;
};

inline EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  const auto raw = provider.raw_embedding(text);
  if (raw.size() != provider.dimension()) {
    throw ValidationError("provider " + provider.name() + " returned dimension " +
                          std::to_string(raw.size()) + ", expected " +
                          std::to_string(provider.dimension()));
  }
  EmbeddingVector v;
  v.components.assign(raw.begin(), raw.end());
  return normalize(v);
}

/// Hash-seeded pseudo-random vectors: equal strings map to equal vectors,
/// distinct strings to nearly orthogonal ones when the dimension is large.
class LexicalStubProvider final : public EmbeddingProvider {
 public:
  explicit LexicalStubProvider(std::size_t dimension, std::uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {
    if (dimension == 0) throw ValidationError("embedding dimension must be positive");
  }

  std::string name() const override { return "lexical-stub"; }
  std::string version() const override { return "1/seed=" + std::to_string(seed_); }
  std::size_t dimension() const override { return dimension_; }

  std::vector<float> raw_embedding(std::string_view text) const override {
    Rng rng(stable_hash64(std::to_string(seed_) + '\0' + std::string(text)));
    std::vector<float> out(dimension_);
    for (auto& x : out) x = static_cast<float>(2.0 * uniform_unit(rng) - 1.0);
    return out;
  }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Explicit text -> vector table for hand-computed tests.
class OracleStubProvider final : public EmbeddingProvider {
 public:
  OracleStubProvider(std::size_t dimension, std::map<std::string, std::vector<float>> table)
      : dimension_(dimension), table_(std::move(table)) {
    for (const auto& [text, v] : table_) {
      if (v.size() != dimension_) throw ValidationError("oracle vector for '" + text + "' has wrong dimension");
    }
  }

  std::string name() const override { return "oracle-stub"; }
  std::string version() const override { return "1"; }
  std::size_t dimension() const override { return dimension_; }

  std::vector<float> raw_embedding(std::string_view text) const override {
    auto it = table_.find(std::string(text));
    if (it == table_.end()) throw Error("oracle stub has no vector for '" + std::string(text) + "'");
    return it->second;
  }

 private:
  std::size_t dimension_;
  std::map<std::string, std::vector<float>> table_;
};

/// Memoizing decorator with an optional content-addressed disk store. One
/// file per entry, named by the hash of (provider name, version, text),
/// holding a little-endian uint32 dimension followed by float32 components.
class CachingProvider final : public EmbeddingProvider {
 public:
  explicit CachingProvider(std::shared_ptr<const EmbeddingProvider> inner,
                           std::optional<std::filesystem::path> directory = std::nullopt)
      : inner_(std::move(inner)), directory_(std::move(directory)) {
    if (!inner_) throw ValidationError("caching provider needs an inner provider");
    if (directory_) std::filesystem::create_directories(*directory_);
  }

  std::string name() const override { return inner_->name(); }
  std::string version() const override { return inner_->version(); }
  std::size_t dimension() const override { return inner_->dimension(); }

  std::vector<float> raw_embedding(std::string_view text) const override {
    const std::string key = cache_key(text);
    {
      std::shared_lock lock(mutex_);
      if (auto it = memory_.find(key); it != memory_.end()) {
        ++hits_;
        return it->second;
      }
    }
    std::optional<std::vector<float>> found;
    if (directory_) found = read_entry(*directory_ / key);
    if (found) {
      ++hits_;
    } else {
      ++misses_;
      found = inner_->raw_embedding(text);
      if (directory_) write_entry(*directory_ / key, *found);
    }
    std::unique_lock lock(mutex_);
    return memory_.emplace(key, std::move(*found)).first->second;
  }

  std::string cache_key(std::string_view text) const {
    return field_digest(inner_->name(), inner_->version(), text);
  }

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }

 private:
  static_assert(std::endian::native == std::endian::little, "cache format assumes little-endian");

  std::optional<std::vector<float>> read_entry(const std::filesystem::path& path) const {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::uint32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (!in || dim != inner_->dimension()) return std::nullopt;
    std::vector<float> v(dim);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(float)));
    if (!in) return std::nullopt;
    return v;
  }

  void write_entry(const std::filesystem::path& path, const std::vector<float>& v) const {
    std::unique_lock lock(write_mutex_);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      const auto dim = static_cast<std::uint32_t>(v.size());
      out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
      out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
      if (!out) throw Error("cannot write embedding cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  std::shared_ptr<const EmbeddingProvider> inner_;
  std::optional<std::filesystem::path> directory_;
  mutable std::shared_mutex mutex_;
  mutable std::mutex write_mutex_;
  mutable std::unordered_map<std::string, std::vector<float>> memory_;
  mutable std::atomic<std::size_t> hits_{0}, misses_{0};
};

}  // namespace intentcap
