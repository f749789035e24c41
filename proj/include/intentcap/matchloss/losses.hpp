#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentcap/core/elements.hpp"
#include "intentcap/core/workflow.hpp"
#include "intentcap/embeddings/provider.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/matchloss/assignment.hpp"

namespace intentcap {

/// Relative contribution of the input, process and output losses.
class LossWeights {
 public:
  LossWeights(double mu_input, double mu_process, double mu_output)
      : mu_{mu_input, mu_process, mu_output} {
    for (double m : mu_) {
      if (!(m >= 0.0 && m <= 1.0)) throw ValidationError("loss weights must lie in [0,1]");
    }
    if (std::abs(mu_[0] + mu_[1] + mu_[2] - 1.0) > 1e-9) {
      throw ValidationError("loss weights must sum to 1");
    }
  }

  static LossWeights equal() { return LossWeights(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0); }

  double mu_input() const noexcept { return mu_[0]; }
  double mu_process() const noexcept { return mu_[1]; }
  double mu_output() const noexcept { return mu_[2]; }
  double weight(Component c) const noexcept { return mu_[static_cast<std::size_t>(c)]; }

 private:
  std::array<double, 3> mu_;
};

/// A loss in squared form together with its root; both in [0,1].
struct LossValue {
  double squared = 0.0;
  double root = 0.0;

  static LossValue from_squared(double squared) {
    const double s = std::clamp(squared, 0.0, 1.0);
    return {s, std::sqrt(s)};
  }
};

struct ElementLoss {
  LossValue value;
  Matching matching;
};

/// Embedding-matched dissimilarity between two element lists. The smaller
/// list's elements each take their best match on the other side (shared
/// partners allowed); the squared-similarity total is normalized by the
/// larger size. With equal sizes the decoded side is the one summed.
/// Both lists empty -> 0, exactly one empty -> 1.
inline ElementLoss element_loss_detailed(const ElementList& decoded, const ElementList& reference,
                                         const EmbeddingProvider& provider) {
  if (decoded.empty() && reference.empty()) return {LossValue::from_squared(0.0), {}};
  if (decoded.empty() || reference.empty()) return {LossValue::from_squared(1.0), {}};

  std::vector<EmbeddingVector> dec, ref;
  for (const auto& e : decoded) dec.push_back(embed(e.text(), provider));
  for (const auto& e : reference) ref.push_back(embed(e.text(), provider));
  const auto w = WeightMatrix::from_function(dec.size(), ref.size(), [&](std::size_t i, std::size_t j) {
    return sim_squared(dec[i], ref[j]);
  });
  auto matching = best_function_matching(w);
  const double norm = static_cast<double>(std::max(dec.size(), ref.size()));
  return {LossValue::from_squared(1.0 - matching.total / norm), std::move(matching)};
}

inline LossValue element_loss(const ElementList& decoded, const ElementList& reference,
                              const EmbeddingProvider& provider) {
  return element_loss_detailed(decoded, reference, provider).value;
}

/// mu_I * L_I^2 + mu_P * L_P^2 + mu_O * L_O^2.
inline LossValue signal_loss(const SignalTriple& decoded, const SignalTriple& reference,
                             const LossWeights& weights, const EmbeddingProvider& provider) {
  double squared = 0.0;
  for (auto c : kComponents) {
    if (weights.weight(c) == 0.0) continue;
    squared += weights.weight(c) *
               element_loss(decoded.component(c), reference.component(c), provider).squared;
  }
  return LossValue::from_squared(squared);
}

/// Component-wise union of the reference intentions' signals.
inline SignalTriple aggregate_reference_signals(const IntentionSet& refs) {
  if (refs.empty()) throw ValidationError("cannot aggregate an empty intention set");
  std::vector<SignalTriple> triples;
  for (const auto& i : refs) triples.push_back(i.signals);
  return merge_signals(triples);
}

struct SetMatchResult {
  LossValue value;
  Matching matching;
};

/// Injective matching of decoded to reference intentions with pair weight
/// 1 - signal_loss^2. Either set empty -> 1.
inline SetMatchResult intention_loss_detailed(const IntentionSet& decoded, const IntentionSet& reference,
                                              const LossWeights& weights,
                                              const EmbeddingProvider& provider) {
  if (decoded.empty() || reference.empty()) return {LossValue::from_squared(1.0), {}};
  const auto w = WeightMatrix::from_function(decoded.size(), reference.size(), [&](std::size_t j, std::size_t k) {
    return 1.0 - signal_loss(decoded[j].signals, reference[k].signals, weights, provider).squared;
  });
  auto matching = max_weight_injection(w);
  const double norm = static_cast<double>(std::max(decoded.size(), reference.size()));
  return {LossValue::from_squared(1.0 - matching.total / norm), std::move(matching)};
}

inline LossValue intention_loss(const IntentionSet& decoded, const IntentionSet& reference,
                                const LossWeights& weights, const EmbeddingProvider& provider) {
  return intention_loss_detailed(decoded, reference, weights, provider).value;
}

using WorkflowPairSimilarity = std::function<double(const Workflow& decoded, const Workflow& reference)>;

struct SetSimilarity {
  double score = 0.0;    // S
  double squared = 0.0;  // S^2
  Matching matching;     // pair weights are s^2
};

/// Set-level similarity: S^2 = (1/max(|A|,|B|)) * max over injections of
/// the summed squared pairwise similarities. Either set empty -> 0.
inline SetSimilarity set_similarity(const WorkflowSet& decoded, const WorkflowSet& reference,
                                    const WorkflowPairSimilarity& pairwise) {
  if (decoded.empty() || reference.empty()) return {};
  const auto w = WeightMatrix::from_function(decoded.size(), reference.size(), [&](std::size_t j, std::size_t k) {
    const double s = pairwise(decoded[j], reference[k]);
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ValidationError("pairwise workflow similarity outside [0,1]: " + std::to_string(s));
    }
    return s * s;
  });
  SetSimilarity out;
  out.matching = max_weight_injection(w);
  const double norm = static_cast<double>(std::max(decoded.size(), reference.size()));
  out.squared = std::clamp(out.matching.total / norm, 0.0, 1.0);
  out.score = std::sqrt(out.squared);
  return out;
}

/// Diagnostic export: matched index pairs with their pair similarity.
/// `squared_weights` takes the root of each weight before export.
inline nlohmann::ordered_json encode_matching(const Matching& m, bool squared_weights) {
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"decoded", p.decoded},
                     {"reference", p.reference},
                     {"similarity", squared_weights ? std::sqrt(std::max(p.weight, 0.0)) : p.weight}});
  }
  return pairs;
}

}  // namespace intentcap
