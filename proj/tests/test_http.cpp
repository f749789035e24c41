#include <catch_amalgamated.hpp>

#include <thread>

#include "intentcap/embeddings/http_provider.hpp"
#include "intentcap/llm/http_clients.hpp"

using namespace intentcap;

namespace {

/// Local stand-in for the provider APIs on an ephemeral port.
class FakeProvider {
 public:
  FakeProvider() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth = req.get_header_value("Authorization");
      last_body = nlohmann::json::parse(req.body);
      if (status != 200) {
        res.status = status;
        return;
      }
      res.set_content(R"({"choices": [{"message": {"content": "hi there"}}],
                          "usage": {"prompt_tokens": 5, "completion_tokens": 2}})",
                      "application/json");
    });
    server_.Post("/v1/messages", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth = req.get_header_value("x-api-key");
      last_version = req.get_header_value("anthropic-version");
      last_body = nlohmann::json::parse(req.body);
      res.set_content(R"({"content": [{"type": "text", "text": "part one, "}, {"type": "text", "text": "part two"}],
                          "usage": {"input_tokens": 7, "output_tokens": 3}})",
                      "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = nlohmann::json::parse(req.body);
      res.set_content(R"({"data": [{"embedding": [0.5, 0.25, -1.0]}]})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  int status = 200;
  std::string last_auth, last_version;
  nlohmann::json last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

llm::ChatRequest request() {
  llm::ChatRequest r;
  r.role = "judge";
  r.prompt = "hello";
  r.model_id = "model-x";
  r.temperature = 0.25;
  r.max_output_tokens = 123;
  return r;
}

}  // namespace

TEST_CASE("base url parsing") {
  const auto u = http::BaseUrl::parse("https://api.example.com/v1/");
  CHECK(u.origin == "https://api.example.com");
  CHECK(u.path == "/v1");
  CHECK(http::BaseUrl::parse("http://h:8080").path.empty());
  CHECK_THROWS_AS(http::BaseUrl::parse("api.example.com"), ConfigError);
  CHECK_THROWS_AS(http::BaseUrl::parse("ftp://x"), ConfigError);
}

TEST_CASE("credentials come from the environment") {
  ::unsetenv("INTENTCAP_TEST_KEY");
  CHECK_THROWS_AS(http::endpoint_from_env("INTENTCAP_TEST_URL", "INTENTCAP_TEST_KEY", "http://x"), ConfigError);
  ::setenv("INTENTCAP_TEST_KEY", "secret", 1);
  const auto e = http::endpoint_from_env("INTENTCAP_TEST_URL", "INTENTCAP_TEST_KEY", "http://x");
  CHECK(e.api_key == "secret");
  CHECK(e.base_url == "http://x");
  ::unsetenv("INTENTCAP_TEST_KEY");
}

TEST_CASE("openai-compatible chat client") {
  FakeProvider fake;
  llm::OpenAiCompatibleClient client({fake.url(), "k1"});
  const auto r = client.complete(request());
  CHECK(r.text == "hi there");
  CHECK(r.usage.prompt_tokens == 5);
  CHECK(r.usage.completion_tokens == 2);
  CHECK(fake.last_auth == "Bearer k1");
  CHECK(fake.last_body["model"] == "model-x");
  CHECK(fake.last_body["temperature"] == 0.25);
  CHECK(fake.last_body["max_tokens"] == 123);
  CHECK(fake.last_body["messages"][0]["content"] == "hello");

  fake.status = 429;
  try {
    (void)client.complete(request());
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.retryable());
    CHECK(e.status() == 429);
  }
  fake.status = 401;
  try {
    (void)client.complete(request());
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK_FALSE(e.retryable());
  }
}

TEST_CASE("anthropic-compatible chat client") {
  FakeProvider fake;
  // The messages route carries its own /v1 prefix.
  llm::AnthropicCompatibleClient client({fake.url().substr(0, fake.url().size() - 3), "k2"});
  const auto r = client.complete(request());
  CHECK(r.text == "part one, part two");
  CHECK(r.usage.prompt_tokens == 7);
  CHECK(r.usage.completion_tokens == 3);
  CHECK(fake.last_auth == "k2");
  CHECK(fake.last_version == "2023-06-01");
  CHECK(fake.last_body["max_tokens"] == 123);
}

TEST_CASE("unreachable endpoints are retryable") {
  llm::OpenAiCompatibleClient client({"http://127.0.0.1:1", "k"});
  try {
    (void)client.complete(request());
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.retryable());
  }
}

TEST_CASE("http embedding provider") {
  FakeProvider fake;
  HttpEmbeddingProvider p({fake.url(), "k"}, "embed-small", 3);
  CHECK(p.raw_embedding("text") == std::vector<float>{0.5f, 0.25f, -1.0f});
  CHECK(fake.last_body["input"] == "text");
  CHECK(fake.last_body["model"] == "embed-small");
  CHECK(p.name() == "openai-compatible:embed-small");
  HttpEmbeddingProvider wrong({fake.url(), "k"}, "embed-small", 4);
  CHECK_THROWS_AS(embed("text", wrong), ValidationError);
}
