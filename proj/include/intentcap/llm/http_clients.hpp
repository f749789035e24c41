#pragma once

// Live provider adapters. Needs the intentcap_http target (cpp-httplib with
// TLS). Credentials come from the environment only.

#include <chrono>
#include <cstdlib>
#include <map>
#include <memory>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "intentcap/errors.hpp"
#include "intentcap/llm/types.hpp"

namespace intentcap::http {

/// scheme://host[:port] plus an optional path prefix.
struct BaseUrl {
  std::string origin;
  std::string path;

  static BaseUrl parse(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL needs a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    BaseUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    if (out.origin.size() <= scheme_end + 3) throw ConfigError("base URL has no host: " + url);
    return out;
  }
};

struct Endpoint {
  std::string base_url;
  std::string api_key;
};

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

inline Endpoint endpoint_from_env(const char* url_var, const char* key_var, const std::string& default_url) {
  Endpoint e{env_or(url_var, default_url), env_or(key_var, "")};
  if (e.api_key.empty()) throw ConfigError(std::string("environment variable ") + key_var + " is not set");
  return e;
}

/// POST a JSON body; 429 and 5xx are retryable, other failures are not.
inline nlohmann::json post_json(const Endpoint& endpoint, const std::string& route, const nlohmann::json& body,
                                const httplib::Headers& headers,
                                std::chrono::seconds timeout = std::chrono::seconds(300)) {
  const auto base = BaseUrl::parse(endpoint.base_url);
  httplib::Client client(base.origin);
  client.set_connection_timeout(std::chrono::seconds(30));
  client.set_read_timeout(timeout);
  client.set_write_timeout(std::chrono::seconds(60));
  auto res = client.Post(base.path + route, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + endpoint.base_url + route + " failed: " + httplib::to_string(res.error()),
                         true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint.base_url + route, true,
                         res->status);
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint.base_url + route + ": " +
                             res->body.substr(0, 500),
                         false, res->status);
  }
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw TransportError("non-JSON body from " + endpoint.base_url + route, false, res->status);
  return j;
}

}  // namespace intentcap::http

namespace intentcap::llm {

/// POST {base}/chat/completions.
class OpenAiCompatibleClient final : public ChatClient {
 public:
  explicit OpenAiCompatibleClient(http::Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  static std::shared_ptr<OpenAiCompatibleClient> from_env() {
    return std::make_shared<OpenAiCompatibleClient>(
        http::endpoint_from_env("OPENAI_BASE_URL", "OPENAI_API_KEY", "https://api.openai.com/v1"));
  }

  ChatResponse complete(const ChatRequest& request) override {
    nlohmann::json body = {{"model", request.model_id},
                           {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
                           {"temperature", request.temperature},
                           {"max_tokens", request.max_output_tokens}};
    const auto reply =
        http::post_json(endpoint_, "/chat/completions", body, {{"Authorization", "Bearer " + endpoint_.api_key}});
    try {
      ChatResponse out;
      out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
        out.usage = {u->value("prompt_tokens", std::int64_t{0}), u->value("completion_tokens", std::int64_t{0})};
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("unexpected chat completion shape: ") + e.what(), false);
    }
  }

 private:
  http::Endpoint endpoint_;
};

/// POST {base}/v1/messages.
class AnthropicCompatibleClient final : public ChatClient {
 public:
  explicit AnthropicCompatibleClient(http::Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  static std::shared_ptr<AnthropicCompatibleClient> from_env() {
    return std::make_shared<AnthropicCompatibleClient>(
        http::endpoint_from_env("ANTHROPIC_BASE_URL", "ANTHROPIC_API_KEY", "https://api.anthropic.com"));
  }

  ChatResponse complete(const ChatRequest& request) override {
    nlohmann::json body = {{"model", request.model_id},
                           {"max_tokens", request.max_output_tokens},
                           {"temperature", request.temperature},
                           {"messages", {{{"role", "user"}, {"content", request.prompt}}}}};
    const auto reply = http::post_json(endpoint_, "/v1/messages", body,
                                       {{"x-api-key", endpoint_.api_key}, {"anthropic-version", "2023-06-01"}});
    try {
      ChatResponse out;
      for (const auto& block : reply.at("content")) {
        if (block.value("type", "") == "text") out.text += block.at("text").get<std::string>();
      }
      if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
        out.usage = {u->value("input_tokens", std::int64_t{0}), u->value("output_tokens", std::int64_t{0})};
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("unexpected messages shape: ") + e.what(), false);
    }
  }

 private:
  http::Endpoint endpoint_;
};

}  // namespace intentcap::llm
