#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

#include "intentcap/errors.hpp"

namespace intentcap::llm {

enum class ProviderKind { openai_compatible, anthropic_compatible, scripted_stub };

inline std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::openai_compatible: return "openai-compatible";
    case ProviderKind::anthropic_compatible: return "anthropic-compatible";
    case ProviderKind::scripted_stub: return "scripted-stub";
  }
  return "?";
}

inline ProviderKind parse_provider_kind(std::string_view s) {
  if (s == "openai-compatible") return ProviderKind::openai_compatible;
  if (s == "anthropic-compatible") return ProviderKind::anthropic_compatible;
  if (s == "scripted-stub") return ProviderKind::scripted_stub;
  throw ConfigError("unknown provider kind '" + std::string(s) + "'");
}

struct ModelProfile {
  std::string model_id;
  ProviderKind provider_kind = ProviderKind::scripted_stub;
  std::int64_t max_output_tokens = 100000;  // L_output
  double temperature = 0.0;

  void validate() const {
    if (model_id.empty()) throw ConfigError("model_id must be non-empty");
    if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive for " + model_id);
  }
};

inline nlohmann::ordered_json encode_profile(const ModelProfile& m) {
  nlohmann::ordered_json j;
  j["model_id"] = m.model_id;
  j["provider_kind"] = std::string(to_string(m.provider_kind));
  j["max_output_tokens"] = m.max_output_tokens;
  j["temperature"] = m.temperature;
  return j;
}

/// Only model_id is required; the rest default as in ModelProfile.
inline ModelProfile decode_profile(const nlohmann::json& j) {
  ModelProfile m;
  try {
    m.model_id = j.at("model_id").get<std::string>();
    if (j.contains("provider_kind")) m.provider_kind = parse_provider_kind(j["provider_kind"].get<std::string>());
    m.max_output_tokens = j.value("max_output_tokens", m.max_output_tokens);
    m.temperature = j.value("temperature", m.temperature);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model profile: ") + e.what());
  }
  m.validate();
  return m;
}

/// Role names; also the prompt template names.
namespace roles {
inline constexpr const char* kExtractSignals = "extract_signals";
inline constexpr const char* kGenerateIntentions = "generate_intentions";
inline constexpr const char* kWorkflowWithIntention = "workflow_with_intention";
inline constexpr const char* kWorkflowsWithoutIntention = "workflows_without_intention";
inline constexpr const char* kSingularElicitation = "singular_elicitation";
inline constexpr const char* kMixedElicitation = "mixed_elicitation";
inline constexpr const char* kJudge = "judge";
}  // namespace roles

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatRequest {
  std::string role;
  std::string prompt;
  std::string model_id;
  double temperature = 0.0;
  std::int64_t max_output_tokens = 0;
  // Structured inputs the prompt was rendered from. Only scripted stubs read
  // it; live providers see the prompt text alone.
  nlohmann::json payload;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
};

/// One recorded exchange, response kept verbatim.
struct ChatExchange {
  std::string role_name;
  std::string prompt_text;
  std::string response_text;
  TokenUsage token_usage;
  bool from_cassette = false;
};

/// Model-agnostic completion client. Must be safe to call concurrently.
/// Rate limiting and transient failures are reported as retryable
/// TransportError.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

}  // namespace intentcap::llm
