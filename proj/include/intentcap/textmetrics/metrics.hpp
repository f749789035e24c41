#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "intentcap/embeddings/provider.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/textmetrics/porter_stemmer.hpp"

namespace intentcap::textmetrics {

/// Lowercase word tokens from the shared tokenizer.
struct TokenSequence {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Lowercases ASCII and splits on every non-alphanumeric ASCII byte. Bytes
/// >= 0x80 are kept inside words so UTF-8 sequences are never split.
inline TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::string cur;
  for (unsigned char c : text) {
    const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.tokens.push_back(std::move(cur));
  return out;
}

struct MetricScore {
  std::string metric_name;
  double value = 0.0;
};

inline MetricScore make_score(std::string name, double value) {
  return {std::move(name), std::clamp(value, 0.0, 1.0)};
}

namespace detail {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts ngram_counts(const TokenSequence& s, std::size_t n) {
  NgramCounts counts;
  if (n == 0 || s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::vector<std::string>(s.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      s.tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

inline std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

inline double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace detail

inline constexpr std::size_t kBleuMaxOrder = 4;

/// Sentence BLEU against one reference: clipped n-gram precisions up to
/// order 4 with uniform weights and the brevity penalty. Orders 2-4 with no
/// clipped match use (0 + 1) / (total + 1); orders the candidate is too
/// short to contain are left out of the geometric mean.
inline MetricScore bleu(const TokenSequence& candidate, const TokenSequence& reference) {
  if (candidate.empty() || reference.empty()) return make_score("bleu", 0.0);
  const std::size_t orders = std::min(kBleuMaxOrder, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto cand = detail::ngram_counts(candidate, n);
    const auto ref = detail::ngram_counts(reference, n);
    const double total = static_cast<double>(candidate.size() - n + 1);
    const double matched = static_cast<double>(detail::clipped_overlap(cand, ref));
    double p;
    if (matched > 0.0) {
      p = matched / total;
    } else if (n == 1) {
      return make_score("bleu", 0.0);
    } else {
      p = 1.0 / (total + 1.0);
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return make_score("bleu", bp * std::exp(log_sum / static_cast<double>(orders)));
}

/// ROUGE-N as F1 over clipped n-gram overlap. 0 when either side has no
/// n-grams of that order.
inline MetricScore rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n) {
  if (n != 1 && n != 2) throw ValidationError("rouge_n supports n = 1 or 2");
  const std::string name = "rouge" + std::to_string(n);
  const auto order = static_cast<std::size_t>(n);
  if (candidate.size() < order || reference.size() < order) return make_score(name, 0.0);
  const auto cand = detail::ngram_counts(candidate, order);
  const auto ref = detail::ngram_counts(reference, order);
  const double overlap = static_cast<double>(detail::clipped_overlap(cand, ref));
  const double p = overlap / static_cast<double>(candidate.size() - order + 1);
  const double r = overlap / static_cast<double>(reference.size() - order + 1);
  return make_score(name, detail::f1(p, r));
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// ROUGE-L as F1 of the longest-common-subsequence precision and recall.
inline MetricScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  if (candidate.empty() || reference.empty()) return make_score("rougeL", 0.0);
  const double lcs = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  return make_score("rougeL", detail::f1(lcs / static_cast<double>(candidate.size()),
                                         lcs / static_cast<double>(reference.size())));
}

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

/// METEOR without synonym matching. Unigrams are aligned greedily left to
/// right, first by exact form and then by Porter stem; the score is
/// F_mean * (1 - gamma * (chunks / matches)^beta).
inline MetricScore meteor(const TokenSequence& candidate, const TokenSequence& reference,
                          const MeteorParams& params = {}) {
  if (candidate.empty() || reference.empty()) return make_score("meteor", 0.0);
  std::vector<std::optional<std::size_t>> cand_to_ref(candidate.size());
  std::vector<bool> ref_used(reference.size(), false);

  auto align = [&](auto&& key) {
    std::vector<std::string> ref_keys;
    for (const auto& t : reference.tokens) ref_keys.push_back(key(t));
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (cand_to_ref[i]) continue;
      const auto k = key(candidate.tokens[i]);
      for (std::size_t j = 0; j < reference.size(); ++j) {
        if (!ref_used[j] && ref_keys[j] == k) {
          cand_to_ref[i] = j;
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  align([](const std::string& t) { return t; });
  align([](const std::string& t) { return porter_stem(t); });

  std::size_t matches = 0, chunks = 0;
  std::optional<std::size_t> prev_ref;
  bool prev_matched = false;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (!cand_to_ref[i]) {
      prev_matched = false;
      continue;
    }
    ++matches;
    if (!prev_matched || !prev_ref || *cand_to_ref[i] != *prev_ref + 1) ++chunks;
    prev_ref = cand_to_ref[i];
    prev_matched = true;
  }
  if (matches == 0) return make_score("meteor", 0.0);
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
  const double penalty = params.gamma * std::pow(static_cast<double>(chunks) / m, params.beta);
  return make_score("meteor", fmean * (1.0 - penalty));
}

/// BERTScore-style greedy soft alignment using per-token embeddings and the
/// bounded similarity sqrt((1 + <a,b>) / 2). No idf weighting.
inline MetricScore embedding_token_f1(const TokenSequence& candidate, const TokenSequence& reference,
                                      const EmbeddingProvider& provider) {
  if (candidate.empty() || reference.empty()) return make_score("embedding_f1", 0.0);
  std::map<std::string, EmbeddingVector> vectors;
  auto vec = [&](const std::string& t) -> const EmbeddingVector& {
    auto it = vectors.find(t);
    if (it == vectors.end()) it = vectors.emplace(t, embed(t, provider)).first;
    return it->second;
  };
  std::vector<double> best_c(candidate.size(), 0.0), best_r(reference.size(), 0.0);
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      const double s = sim(vec(candidate.tokens[i]), vec(reference.tokens[j]));
      best_c[i] = std::max(best_c[i], s);
      best_r[j] = std::max(best_r[j], s);
    }
  }
  double p = 0.0, r = 0.0;
  for (double s : best_c) p += s;
  for (double s : best_r) r += s;
  p /= static_cast<double>(candidate.size());
  r /= static_cast<double>(reference.size());
  return make_score("embedding_f1", detail::f1(p, r));
}

/// Share of distinct reference tokens that occur in the candidate.
inline MetricScore coverage_ratio(const TokenSequence& candidate, const TokenSequence& reference) {
  const std::set<std::string> ref(reference.tokens.begin(), reference.tokens.end());
  if (ref.empty()) return make_score("coverage", 0.0);
  const std::set<std::string> cand(candidate.tokens.begin(), candidate.tokens.end());
  std::size_t hit = 0;
  for (const auto& t : ref) hit += cand.count(t);
  return make_score("coverage", static_cast<double>(hit) / static_cast<double>(ref.size()));
}

/// Cosine of whole-text embeddings; negative values map to 0.
inline MetricScore cosine_text_similarity(std::string_view candidate_text, std::string_view reference_text,
                                          const EmbeddingProvider& provider) {
  if (candidate_text.empty() || reference_text.empty()) {
    throw ValidationError("cosine similarity requires non-empty texts");
  }
  const double c = cosine(embed(candidate_text, provider), embed(reference_text, provider));
  return make_score("cosine", std::max(0.0, c));
}

}  // namespace intentcap::textmetrics
