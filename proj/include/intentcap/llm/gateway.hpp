#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "intentcap/core/json_io.hpp"
#include "intentcap/core/workflow.hpp"
#include "intentcap/digest.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/llm/cassette.hpp"
#include "intentcap/llm/prompts.hpp"
#include "intentcap/llm/structured.hpp"
#include "intentcap/llm/types.hpp"

namespace intentcap::llm {

struct GatewayOptions {
  int max_attempts = 3;       // parse attempts per exchange
  int transport_retries = 3;  // extra tries on retryable transport errors
  std::chrono::milliseconds backoff_base{250};
  int max_in_flight = 4;  // per model
  double synthesis_temperature = 0.7;
};

struct JudgeScores {
  double coverage = 0.0;
  double consistency = 0.0;
  double integration = 0.0;
  double total = 0.0;
};

struct JudgeResult {
  JudgeScores scores;
  bool clamped = false;
  std::string rationale;
};

struct GatewayStats {
  std::size_t cassette_hits = 0;
  std::size_t live_calls = 0;
  std::size_t parse_retries = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline double parse_score(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("judge reply lacks '") + key + "'");
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used > 0 && std::all_of(s.begin() + static_cast<std::ptrdiff_t>(used), s.end(),
                                [](unsigned char c) { return std::isspace(c); })) {
      return v;
    }
  }
  throw ParseError(std::string("judge score '") + key + "' is not a number: " + it->dump());
}

inline Workflow checked_workflow(const nlohmann::json& j) {
  auto w = io::decode_workflow(j);
  const auto problems = validate_workflow(w);
  if (!problems.empty()) {
    std::string msg = "invalid workflow:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ParseError(msg);
  }
  return w;
}

}  // namespace detail

/// Role-level access to chat models. Each role renders its prompt template,
/// goes through the cassette (record/replay), parses the structured reply and
/// validates the artifact. Failed parses are retried with a format-correction
/// suffix; transient transport failures back off exponentially. Shareable
/// across worker threads.
class Gateway {
 public:
  using ClientMap = std::map<std::string, std::shared_ptr<ChatClient>>;

  Gateway(ClientMap clients, std::shared_ptr<Cassette> cassette, CassetteMode mode,
          PromptLibrary prompts = {}, GatewayOptions options = {})
      : clients_(std::move(clients)),
        cassette_(cassette ? std::move(cassette) : std::make_shared<Cassette>()),
        mode_(mode),
        prompts_(std::move(prompts)),
        options_(options) {
    if (options_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    if (options_.max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
    for (const auto& [model_id, client] : clients_) {
      if (!client) throw ConfigError("no client for model " + model_id);
      slots_.emplace(model_id, std::make_unique<std::counting_semaphore<1024>>(
                                   std::min(options_.max_in_flight, 1024)));
    }
  }

  CassetteMode mode() const noexcept { return mode_; }
  const PromptLibrary& prompts() const noexcept { return prompts_; }
  const Cassette& cassette() const noexcept { return *cassette_; }

  GatewayStats stats() const {
    return {hits_.load(), live_.load(), retries_.load(), prompt_tokens_.load(), completion_tokens_.load()};
  }

  SignalTriple extract_signals(const Elicitation& query, const ModelProfile& model) {
    if (query.text().empty()) throw ValidationError("query text is empty");
    nlohmann::json payload = {{"query", query.text()}};
    return run(roles::kExtractSignals, model, {{"query", query.text()}}, payload, model.temperature,
               [](const nlohmann::json& j) { return io::decode_signals(j); });
  }

  /// Decoded intentions get ids D1..Dn in reply order.
  IntentionSet generate_intentions(const Elicitation& query, const SignalTriple& signals,
                                   const ModelProfile& model) {
    const auto signals_json = io::encode(signals);
    nlohmann::json payload = {{"query", query.text()}, {"signals", nlohmann::json::parse(signals_json.dump())}};
    return run(roles::kGenerateIntentions, model, {{"query", query.text()}, {"signals_json", signals_json.dump(2)}},
               payload, model.temperature, [](const nlohmann::json& j) {
                 const auto& list = j.at("intentions");
                 if (!list.is_array() || list.empty()) throw ParseError("'intentions' must be a non-empty array");
                 std::vector<Intention> items;
                 for (std::size_t k = 0; k < list.size(); ++k) {
                   items.push_back({"D" + std::to_string(k + 1), io::decode_signals(list[k]), {}});
                 }
                 return IntentionSet(std::move(items));
               });
  }

  /// `context` is optional free text shown alongside the intention.
  Workflow generate_workflow_with_intention(const Intention& intention, const ModelProfile& model,
                                            const std::string& context = "") {
    if (!intention.is_complete()) throw ValidationError("intention " + intention.id + " is incomplete");
    const auto body = io::encode(intention.signals);
    nlohmann::json payload = {{"intention", nlohmann::json::parse(body.dump())}};
    return run(roles::kWorkflowWithIntention, model,
               {{"context", context.empty() ? "(none)" : context}, {"intention_json", body.dump(2)}}, payload,
               model.temperature, [](const nlohmann::json& j) { return detail::checked_workflow(j); });
  }

  WorkflowSet generate_workflows_without_intention(const Elicitation& query, const ModelProfile& model) {
    if (query.kind() != ElicitationKind::mixed) throw ValidationError("baseline generation needs a mixed query");
    nlohmann::json payload = {{"query", query.text()}};
    return run(roles::kWorkflowsWithoutIntention, model, {{"query", query.text()}}, payload, model.temperature,
               [](const nlohmann::json& j) {
                 const auto& list = j.at("workflows");
                 if (!list.is_array() || list.empty()) throw ParseError("'workflows' must be a non-empty array");
                 WorkflowSet out;
                 for (const auto& w : list) out.push_back(detail::checked_workflow(w));
                 return out;
               });
  }

  /// The reply must mention every element, verbatim (case-insensitive) or
  /// through a declared paraphrase that occurs in the text.
  Elicitation synthesize_singular_elicitation(const Intention& intention, const ModelProfile& model) {
    if (!intention.is_complete()) throw ValidationError("intention " + intention.id + " is incomplete");
    const auto body = io::encode(intention.signals);
    nlohmann::json payload = {{"intention", nlohmann::json::parse(body.dump())}};
    return run(roles::kSingularElicitation, model, {{"intention_json", body.dump(2)}}, payload,
               options_.synthesis_temperature, [&](const nlohmann::json& j) {
                 const auto text = trim(j.at("elicitation").get<std::string>());
                 if (text.empty()) throw ParseError("empty elicitation");
                 const auto haystack = detail::lower(text);
                 std::map<std::string, std::string> paraphrases;
                 if (auto p = j.find("paraphrases"); p != j.end() && p->is_object()) {
                   for (auto it = p->begin(); it != p->end(); ++it) {
                     if (it->is_string()) paraphrases[detail::lower(it.key())] = detail::lower(it->get<std::string>());
                   }
                 }
                 for (auto c : kComponents) {
                   for (const auto& e : intention.signals.component(c)) {
                     const auto needle = detail::lower(e.text());
                     if (haystack.find(needle) != std::string::npos) continue;
                     auto it = paraphrases.find(needle);
                     if (it != paraphrases.end() && !it->second.empty() &&
                         haystack.find(it->second) != std::string::npos) {
                       continue;
                     }
                     throw ParseError("elicitation does not mention '" + e.text() + "'");
                   }
                 }
                 return Elicitation(text, ElicitationKind::singular, {intention.id});
               });
  }

  /// A single source is passed through unchanged (as a mixed query) without
  /// a model call.
  Elicitation synthesize_mixed_elicitation(const std::vector<Elicitation>& singulars, const ModelProfile& model) {
    if (singulars.empty()) throw ValidationError("mixed elicitation needs at least one singular elicitation");
    std::vector<std::string> ids;
    for (const auto& s : singulars) {
      ids.insert(ids.end(), s.source_intention_ids().begin(), s.source_intention_ids().end());
    }
    if (singulars.size() == 1) return Elicitation(singulars.front().text(), ElicitationKind::mixed, ids);
    std::string listing;
    nlohmann::json texts = nlohmann::json::array();
    for (std::size_t k = 0; k < singulars.size(); ++k) {
      listing += std::to_string(k + 1) + ". " + singulars[k].text() + "\n";
      texts.push_back(singulars[k].text());
    }
    nlohmann::json payload = {{"singulars", texts}};
    return run(roles::kMixedElicitation, model, {{"singular_queries", listing}}, payload,
               options_.synthesis_temperature, [&](const nlohmann::json& j) {
                 const auto text = trim(j.at("elicitation").get<std::string>());
                 if (text.empty()) throw ParseError("empty elicitation");
                 return Elicitation(text, ElicitationKind::mixed, ids);
               });
  }

  /// Scores outside [0,10] are clamped and flagged.
  JudgeResult judge(const Workflow& decoded, const Workflow& reference, const ModelProfile& model) {
    for (const auto* w : {&decoded, &reference}) {
      if (!is_valid_workflow(*w)) throw ValidationError("judge needs valid workflows");
    }
    const auto d = io::encode(decoded), r = io::encode(reference);
    nlohmann::json payload = {{"decoded", nlohmann::json::parse(d.dump())},
                              {"reference", nlohmann::json::parse(r.dump())}};
    return run(roles::kJudge, model,
               {{"decoded_workflow", canonical_serialize(decoded)},
                {"reference_workflow", canonical_serialize(reference)}},
               payload, model.temperature, [&](const nlohmann::json& j) {
                 JudgeResult out;
                 auto take = [&](const char* key) {
                   const double raw = detail::parse_score(j, key);
                   if (!std::isfinite(raw)) throw ParseError(std::string("judge score '") + key + "' not finite");
                   const double v = std::clamp(raw, 0.0, 10.0);
                   if (v != raw) {
                     spdlog::warn("judge {} score {} out of range for model {}, clamped to {}", key, raw,
                                  model.model_id, v);
                     out.clamped = true;
                   }
                   return v;
                 };
                 out.scores = {take("coverage"), take("consistency"), take("integration"), take("total")};
                 if (auto it = j.find("rationale"); it != j.end() && it->is_string()) out.rationale = *it;
                 return out;
               });
  }

 private:
  template <typename Parse>
  auto run(const std::string& role, const ModelProfile& model, const PromptValues& values,
           const nlohmann::json& payload, double temperature, Parse&& parse) -> decltype(parse(nlohmann::json{})) {
    const std::string base = prompts_.render(role, values);
    std::string prompt = base;
    std::string last_text, last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
      last_text = exchange(role, model, prompt, payload, temperature);
      try {
        return parse(parse_structured_reply(last_text));
      } catch (const CassetteMiss&) {
        throw;
      } catch (const std::exception& e) {
        last_error = e.what();
      }
      spdlog::debug("{} attempt {} for {} failed: {}", role, attempt, model.model_id, last_error);
      if (attempt < options_.max_attempts) {
        ++retries_;
        prompt = base + "\n\n" + prompts_.render("format_correction", {{"error", last_error}});
      }
    }
    throw RoleError(role, "no usable reply after " + std::to_string(options_.max_attempts) +
                              " attempts (" + last_error + ")",
                    last_text);
  }

  std::string exchange(const std::string& role, const ModelProfile& model, const std::string& prompt,
                       const nlohmann::json& payload, double temperature) {
    const auto key = exchange_key(role, model.model_id, prompt);
    if (mode_ != CassetteMode::live) {
      if (auto hit = cassette_->find(key)) {
        ++hits_;
        return hit->response;
      }
      if (mode_ == CassetteMode::replay) throw CassetteMiss(key);
    }
    auto client = clients_.find(model.model_id);
    if (client == clients_.end()) throw ConfigError("no client configured for model " + model.model_id);

    ChatRequest request{role, prompt, model.model_id, temperature, model.max_output_tokens, payload};
    ChatResponse response;
    auto& slot = *slots_.at(model.model_id);
    for (int attempt = 0;; ++attempt) {
      try {
        slot.acquire();
        struct Release {
          std::counting_semaphore<1024>& s;
          ~Release() { s.release(); }
        } release{slot};
        response = client->second->complete(request);
        break;
      } catch (const TransportError& e) {
        if (!e.retryable() || attempt >= options_.transport_retries) throw;
        const auto wait = options_.backoff_base * (1 << attempt);
        spdlog::warn("{} request to {} failed ({}); retrying in {} ms", role, model.model_id, e.what(),
                     wait.count());
        std::this_thread::sleep_for(wait);
      }
    }
    ++live_;
    prompt_tokens_ += response.usage.prompt_tokens;
    completion_tokens_ += response.usage.completion_tokens;
    if (mode_ == CassetteMode::record) {
      cassette_->append({key, role, model.model_id, sha256_hex(prompt), prompt, response.text, response.usage});
    }
    return response.text;
  }

  ClientMap clients_;
  std::map<std::string, std::unique_ptr<std::counting_semaphore<1024>>> slots_;
  std::shared_ptr<Cassette> cassette_;
  CassetteMode mode_;
  PromptLibrary prompts_;
  GatewayOptions options_;
  std::atomic<std::size_t> hits_{0}, live_{0}, retries_{0};
  std::atomic<std::int64_t> prompt_tokens_{0}, completion_tokens_{0};
};

}  // namespace intentcap::llm
