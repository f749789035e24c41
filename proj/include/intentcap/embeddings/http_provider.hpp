#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentcap/embeddings/provider.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/llm/http_clients.hpp"

namespace intentcap {

/// OpenAI-compatible POST {base}/embeddings. The dimension is declared up
/// front and every reply is checked against it.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(http::Endpoint endpoint, std::string model, std::size_t dimension)
      : endpoint_(std::move(endpoint)), model_(std::move(model)), dimension_(dimension) {
    if (model_.empty()) throw ConfigError("embedding model name is empty");
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
  }

  static std::shared_ptr<HttpEmbeddingProvider> from_env(std::string model, std::size_t dimension) {
    return std::make_shared<HttpEmbeddingProvider>(
        http::endpoint_from_env("OPENAI_BASE_URL", "OPENAI_API_KEY", "https://api.openai.com/v1"), std::move(model),
        dimension);
  }

  std::string name() const override { return "openai-compatible:" + model_; }
  std::string version() const override { return model_ + "/dim=" + std::to_string(dimension_); }
  std::size_t dimension() const override { return dimension_; }

  std::vector<float> raw_embedding(std::string_view text) const override {
    const nlohmann::json body = {{"model", model_}, {"input", std::string(text)}};
    const auto reply =
        http::post_json(endpoint_, "/embeddings", body, {{"Authorization", "Bearer " + endpoint_.api_key}});
    try {
      return reply.at("data").at(0).at("embedding").get<std::vector<float>>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("unexpected embeddings shape: ") + e.what(), false);
    }
  }

 private:
  http::Endpoint endpoint_;
  std::string model_;
  std::size_t dimension_;
};

}  // namespace intentcap
