#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentcap/core/json_io.hpp"
#include "intentcap/core/sample.hpp"
#include "intentcap/core/workflow.hpp"
#include "intentcap/embeddings/provider.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/llm/gateway.hpp"
#include "intentcap/matchloss/losses.hpp"
#include "intentcap/textmetrics/metrics.hpp"

namespace intentcap::evaluator {

inline constexpr const char* kWith = "with_intention";
inline constexpr const char* kWithout = "without_intention";

inline const std::vector<std::string>& all_metrics() {
  static const std::vector<std::string> names = {"bleu",   "rouge1",       "rouge2",   "rougeL",
                                                 "meteor", "embedding_f1", "coverage", "cosine"};
  return names;
}

inline bool is_known_metric(const std::string& name) {
  const auto& m = all_metrics();
  return std::find(m.begin(), m.end(), name) != m.end();
}

/// Pairwise workflow similarity: `metric` applied to the canonical
/// serializations of the decoded and reference workflows.
inline WorkflowPairSimilarity pair_similarity(const std::string& metric, const EmbeddingProvider& provider) {
  namespace tm = textmetrics;
  if (!is_known_metric(metric)) throw ConfigError("unknown metric '" + metric + "'");
  return [metric, &provider](const Workflow& decoded, const Workflow& reference) {
    const auto d = canonical_serialize(decoded);
    const auto r = canonical_serialize(reference);
    if (metric == "cosine") return tm::cosine_text_similarity(d, r, provider).value;
    const auto dt = tm::tokenize(d), rt = tm::tokenize(r);
    if (metric == "bleu") return tm::bleu(dt, rt).value;
    if (metric == "rouge1") return tm::rouge_n(dt, rt, 1).value;
    if (metric == "rouge2") return tm::rouge_n(dt, rt, 2).value;
    if (metric == "rougeL") return tm::rouge_l(dt, rt).value;
    if (metric == "meteor") return tm::meteor(dt, rt).value;
    if (metric == "embedding_f1") return tm::embedding_token_f1(dt, rt, provider).value;
    return tm::coverage_ratio(dt, rt).value;
  };
}

struct EvalOptions {
  LossWeights weights = LossWeights::equal();
  std::vector<std::string> metrics = all_metrics();
  std::string primary_metric = "cosine";  // its matching picks the judged pairs
  std::optional<llm::ModelProfile> judge_model;

  void validate() const {
    if (metrics.empty()) throw ConfigError("at least one metric is required");
    for (const auto& m : metrics) {
      if (!is_known_metric(m)) throw ConfigError("unknown metric '" + m + "'");
    }
    if (std::find(metrics.begin(), metrics.end(), primary_metric) == metrics.end()) {
      throw ConfigError("primary metric '" + primary_metric + "' is not among the configured metrics");
    }
    if (judge_model) judge_model->validate();
  }
};

struct JudgedPair {
  std::size_t decoded = 0;
  std::size_t reference = 0;
  llm::JudgeResult result;
};

/// Judge scores for one condition. Each dimension is the sum over matched
/// pairs divided by max(|decoded|, |reference|), so unmatched workflows
/// count as 0.
struct ConditionJudge {
  std::vector<JudgedPair> pairs;
  llm::JudgeScores scores;
};

struct SampleRecord {
  std::string sample_id;
  int level = 0;
  std::string model_id;
  bool partial = false;
  std::string failed_step;
  std::string error;

  std::optional<SignalTriple> decoded_signals;
  std::optional<LossValue> signal_loss;
  std::optional<IntentionSet> decoded_intentions;
  std::optional<LossValue> intention_loss;
  std::optional<WorkflowSet> workflows_with_intention;
  std::vector<std::string> skipped_intentions;  // incomplete decoded intentions
  std::optional<WorkflowSet> workflows_without_intention;
  std::map<std::string, std::map<std::string, SetSimilarity>> metric_scores;  // condition -> metric
  std::map<std::string, ConditionJudge> judge_scores;                         // condition
};

/// The six steps, in order: extract signals from the mixed query, score
/// them against the merged references, generate intentions from query and
/// signals, score them, generate workflows with and without intentions, and
/// score both sets against the references. A failing step marks the record
/// partial and keeps what was computed before it.
inline SampleRecord evaluate_sample(const Sample& sample, const llm::ModelProfile& model, const EvalOptions& options,
                                    llm::Gateway& gateway, const EmbeddingProvider& provider) {
  SampleRecord rec;
  rec.sample_id = sample.id;
  rec.level = sample.level;
  rec.model_id = model.model_id;
  if (const auto problems = validate_sample(sample); !problems.empty()) {
    throw ValidationError("sample " + sample.id + " is invalid: " + problems.front());
  }

  std::string step;
  try {
    step = "extract_signals";
    rec.decoded_signals = gateway.extract_signals(sample.mixed_elicitation, model);
    step = "signal_loss";
    rec.signal_loss = signal_loss(*rec.decoded_signals, aggregate_reference_signals(sample.reference_intentions),
                                  options.weights, provider);
    step = "generate_intentions";
    rec.decoded_intentions = gateway.generate_intentions(sample.mixed_elicitation, *rec.decoded_signals, model);
    step = "intention_loss";
    rec.intention_loss =
        intention_loss(*rec.decoded_intentions, sample.reference_intentions, options.weights, provider);

    step = "workflow_with_intention";
    WorkflowSet with;
    for (const auto& i : *rec.decoded_intentions) {
      if (!i.is_complete()) {
        rec.skipped_intentions.push_back(i.id);
        continue;
      }
      with.push_back(gateway.generate_workflow_with_intention(i, model));
    }
    rec.workflows_with_intention = std::move(with);
    step = "workflows_without_intention";
    rec.workflows_without_intention = gateway.generate_workflows_without_intention(sample.mixed_elicitation, model);

    step = "set_similarity";
    const std::pair<const char*, const WorkflowSet*> conditions[] = {{kWith, &*rec.workflows_with_intention},
                                                                     {kWithout, &*rec.workflows_without_intention}};
    for (const auto& [cond, set] : conditions) {
      for (const auto& metric : options.metrics) {
        rec.metric_scores[cond][metric] =
            set_similarity(*set, sample.reference_workflows, pair_similarity(metric, provider));
      }
    }
    if (options.judge_model) {
      step = "judge";
      for (const auto& [cond, set] : conditions) {
        ConditionJudge cj;
        for (const auto& p : rec.metric_scores[cond][options.primary_metric].matching.pairs) {
          cj.pairs.push_back({p.decoded, p.reference,
                              gateway.judge((*set)[p.decoded], sample.reference_workflows[p.reference],
                                            *options.judge_model)});
        }
        const double norm = static_cast<double>(std::max(set->size(), sample.reference_workflows.size()));
        for (const auto& jp : cj.pairs) {
          cj.scores.coverage += jp.result.scores.coverage / norm;
          cj.scores.consistency += jp.result.scores.consistency / norm;
          cj.scores.integration += jp.result.scores.integration / norm;
          cj.scores.total += jp.result.scores.total / norm;
        }
        rec.judge_scores[cond] = std::move(cj);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    rec.partial = true;
    rec.failed_step = step;
    rec.error = e.what();
  }
  return rec;
}

inline nlohmann::ordered_json encode(const LossValue& v) { return {{"squared", v.squared}, {"root", v.root}}; }

inline nlohmann::ordered_json encode(const llm::JudgeScores& s) {
  return {{"coverage", s.coverage}, {"consistency", s.consistency}, {"integration", s.integration}, {"total", s.total}};
}

inline nlohmann::ordered_json encode(const SampleRecord& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["level"] = r.level;
  j["model_id"] = r.model_id;
  j["status"] = r.partial ? "partial" : "complete";
  if (r.partial) {
    j["failed_step"] = r.failed_step;
    j["error"] = r.error;
  }
  if (r.decoded_signals) j["decoded_signals"] = io::encode(*r.decoded_signals);
  if (r.signal_loss) j["signal_loss"] = encode(*r.signal_loss);
  if (r.decoded_intentions) j["decoded_intentions"] = io::encode(*r.decoded_intentions);
  if (r.intention_loss) j["intention_loss"] = encode(*r.intention_loss);
  if (r.workflows_with_intention) j["workflows_with_intention"] = io::encode(*r.workflows_with_intention);
  if (!r.skipped_intentions.empty()) j["skipped_intentions"] = r.skipped_intentions;
  if (r.workflows_without_intention) j["workflows_without_intention"] = io::encode(*r.workflows_without_intention);
  if (!r.metric_scores.empty()) {
    auto& ms = j["metric_scores"];
    for (const auto& cond : {kWith, kWithout}) {
      auto it = r.metric_scores.find(cond);
      if (it == r.metric_scores.end()) continue;
      for (const auto& [metric, s] : it->second) {
        ms[cond][metric] = {{"score", s.score}, {"squared", s.squared}, {"matching", encode_matching(s.matching, true)}};
      }
    }
  }
  if (!r.judge_scores.empty()) {
    auto& js = j["judge_scores"];
    for (const auto& cond : {kWith, kWithout}) {
      auto it = r.judge_scores.find(cond);
      if (it == r.judge_scores.end()) continue;
      auto entry = encode(it->second.scores);
      nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
      for (const auto& p : it->second.pairs) {
        auto pj = encode(p.result.scores);
        pj["decoded"] = p.decoded;
        pj["reference"] = p.reference;
        pj["clamped"] = p.result.clamped;
        pj["rationale"] = p.result.rationale;
        pairs.push_back(std::move(pj));
      }
      entry["pairs"] = std::move(pairs);
      js[cond] = std::move(entry);
    }
  }
  return j;
}

}  // namespace intentcap::evaluator
