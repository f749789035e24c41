#include <catch_amalgamated.hpp>

#include <fstream>

#include "intentcap/llm/cassette.hpp"
#include "intentcap/llm/gateway.hpp"
#include "intentcap/llm/scripted_stub.hpp"
#include "intentcap/llm/structured.hpp"
#include "support.hpp"

using namespace intentcap;
using namespace intentcap::llm;

namespace {

/// Records every request and answers from a queue (the last repeats).
class QueueClient final : public ChatClient {
 public:
  explicit QueueClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  ChatResponse complete(const ChatRequest& r) override {
    std::lock_guard lock(mutex_);
    requests.push_back(r);
    const auto& text = replies_[std::min(requests.size() - 1, replies_.size() - 1)];
    return {text, {1, 1}};
  }
  std::vector<ChatRequest> requests;

 private:
  std::vector<std::string> replies_;
  std::mutex mutex_;
};

/// Fails `failures` times with the given retryability, then delegates.
class FlakyClient final : public ChatClient {
 public:
  FlakyClient(int failures, bool retryable) : failures_(failures), retryable_(retryable) {}
  ChatResponse complete(const ChatRequest& r) override {
    ++calls;
    if (calls <= failures_) throw TransportError("HTTP 503", retryable_, 503);
    return inner_.complete(r);
  }
  int calls = 0;

 private:
  int failures_;
  bool retryable_;
  ScriptedStubClient inner_;
};

Gateway gateway_with(std::shared_ptr<ChatClient> client, CassetteMode mode = CassetteMode::live,
                     std::shared_ptr<Cassette> cassette = nullptr, GatewayOptions options = {}) {
  options.backoff_base = std::chrono::milliseconds(1);
  return Gateway({{"m", std::move(client)}}, std::move(cassette), mode, {}, options);
}

const Intention kInvoice = testing::intention("I1", {"invoice PDF"}, {"extract totals"}, {"ledger entry"});
const Intention kForecast =
    testing::intention("I2", {"sales history", "calendar"}, {"forecast demand"}, {"order plan"});

Workflow simple_workflow(const std::string& name) { return stub::workflow_for(SignalTriple({"in"}, {name}, {"out"})); }

}  // namespace

TEST_CASE("structured reply parsing") {
  CHECK(parse_structured_reply(R"({"a": 1})")["a"] == 1);
  CHECK(parse_structured_reply("Sure!\n```json\n{\"a\": {\"b\": \"}\"}}\n```")["a"]["b"] == "}");
  CHECK(parse_structured_reply("{broken then {\"ok\": true}")["ok"] == true);
  CHECK_THROWS_AS(parse_structured_reply("no json here"), ParseError);
  CHECK_THROWS_AS(parse_structured_reply("[1, 2]"), ParseError);
}

TEST_CASE("prompt library renders every built-in template") {
  const PromptLibrary lib;
  CHECK(lib.version() == "v1");
  const auto text = lib.render("extract_signals", {{"query", "QUERY-TEXT"}});
  CHECK(text.find("QUERY-TEXT") != std::string::npos);
  CHECK(text.find("{{") == std::string::npos);
  CHECK_THROWS_AS(lib.render("extract_signals", {}), ConfigError);
  CHECK_THROWS_AS(lib.raw("missing"), ConfigError);
  for (const char* name : {"generate_intentions", "workflow_with_intention", "workflows_without_intention",
                           "singular_elicitation", "mixed_elicitation", "judge", "format_correction"}) {
    CHECK_NOTHROW(lib.raw(name));
  }
}

TEST_CASE("prompt overrides replace templates and tag the version") {
  testing::TempDir dir("prompts");
  std::ofstream(dir.path() / "judge.tmpl") << "Judge {{decoded_workflow}} vs {{reference_workflow}}";
  const auto lib = PromptLibrary::with_overrides(dir.path());
  CHECK(lib.render("judge", {{"decoded_workflow", "A"}, {"reference_workflow", "B"}}) == "Judge A vs B");
  CHECK(lib.version().rfind("v1+", 0) == 0);
  CHECK_THROWS_AS(PromptLibrary::with_overrides(dir.path() / "nope"), ConfigError);
}

TEST_CASE("cassette keys, dedup and verification") {
  CHECK(exchange_key("judge", "m1", "hello") == "431ec7db8e6886fe20ad845711fe64a1c6b7512cee85443c30bb6523a6bf808b");
  testing::TempDir dir("cassette");
  const auto path = dir.path() / "c.jsonl";
  {
    auto c = Cassette::open(path);
    const CassetteEntry e{exchange_key("r", "m", "p"), "r", "m", sha256_hex("p"), "p", "reply", {3, 4}};
    CHECK(c.append(e));
    CHECK_FALSE(c.append(e));
    CHECK(c.size() == 1);
  }
  CHECK(verify_cassette_file(path).empty());
  const auto reopened = Cassette::open(path);
  REQUIRE(reopened.find(exchange_key("r", "m", "p")));
  CHECK(reopened.find(exchange_key("r", "m", "p"))->usage.completion_tokens == 4);

  // Tamper: edited prompt, duplicated line, garbage line.
  std::string line;
  std::getline(std::ifstream(path), line);
  auto j = nlohmann::json::parse(line);
  j["prompt"] = "edited";
  std::ofstream(path, std::ios::app) << line << "\n" << j.dump() << "\nnot json\n";
  const auto problems = verify_cassette_file(path);
  // The edited line keeps its old key, so it is also a duplicate.
  REQUIRE(problems.size() == 5);
  CHECK(problems[0] == "line 2: duplicate key first seen on line 1");
  CHECK(problems[1] == "line 3: prompt hash mismatch");
  CHECK(problems[2] == "line 3: exchange key mismatch");
  CHECK(problems[3] == "line 3: duplicate key first seen on line 1");
  CHECK(problems[4].rfind("line 4: unparseable", 0) == 0);
  CHECK_THROWS_AS(Cassette::open(path), ParseError);
}

TEST_CASE("stub phrasings parse back to their triples") {
  const SignalTriple a({"invoice PDF", "receipt"}, {"extract totals"}, {"ledger entry"});
  const SignalTriple b({"sales history"}, {"forecast demand", "review"}, {"order plan"});
  for (std::size_t v = 0; v < 3; ++v) {
    const auto text = stub::phrase_intention(a, v) + " " + stub::phrase_intention(b, v + 1);
    const auto parsed = stub::parse_phrased_intentions(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0] == a);
    CHECK(parsed[1] == b);
  }
  CHECK(stub::parse_phrased_intentions("nothing to see").empty());
}

TEST_CASE("stub workflows are valid and judged faithfully") {
  const SignalTriple s({"a", "b"}, {"p1", "p2"}, {"o"});
  const auto w = stub::workflow_for(s);
  CHECK(is_valid_workflow(w));
  const auto same = stub::faithful_judge(w, w);
  CHECK(same == std::array<double, 4>{10, 10, 10, 10});
  const auto other = stub::faithful_judge(stub::workflow_for(SignalTriple({"x"}, {"y"}, {"z"})), w);
  CHECK(other[0] == 0.0);
  CHECK(other[3] < 10.0);
}

TEST_CASE("stub script loading") {
  const auto s = StubScript::from_json(nlohmann::json::parse(
      R"({"intentions": "merge", "without_intention": "split", "judge": [1, 2, 3, 4]})"));
  CHECK(s.intentions == StubScript::Grouping::merge);
  CHECK(s.without_intention == StubScript::Grouping::split);
  CHECK(s.fixed_judge == std::array<double, 4>{1, 2, 3, 4});
  CHECK_THROWS_AS(StubScript::from_json(nlohmann::json::parse(R"({"intentions": "both"})")), ConfigError);
  CHECK_THROWS_AS(StubScript::load(testing::fixtures() / "missing.json"), ConfigError);
  CHECK_NOTHROW(StubScript::load(testing::fixtures() / "stub_split_merge.json"));
}

TEST_CASE("gateway roles against the scripted stub") {
  auto gw = testing::stub_gateway({{"m", {}}});
  const auto model = testing::stub_model("m");

  const auto singular = gw.synthesize_singular_elicitation(kInvoice, model);
  CHECK(singular.kind() == ElicitationKind::singular);
  CHECK(singular.source_intention_ids() == std::vector<std::string>{"I1"});
  const auto singular2 = gw.synthesize_singular_elicitation(kForecast, model);
  const auto mixed = gw.synthesize_mixed_elicitation({singular, singular2}, model);
  CHECK(mixed.source_intention_ids() == std::vector<std::string>{"I1", "I2"});

  const auto signals = gw.extract_signals(mixed, model);
  CHECK(signals == merge_signals({kInvoice.signals, kForecast.signals}));

  const auto decoded = gw.generate_intentions(mixed, signals, model);
  REQUIRE(decoded.size() == 2);
  CHECK(decoded.ids() == std::vector<std::string>{"D1", "D2"});
  CHECK(decoded[1].signals == kForecast.signals);

  const auto with = gw.generate_workflow_with_intention(decoded[0], model);
  CHECK(with == stub::workflow_for(kInvoice.signals));
  const auto without = gw.generate_workflows_without_intention(mixed, model);
  CHECK(without.size() == 1);  // the default stub merges
  CHECK_THROWS_AS(gw.generate_workflows_without_intention(singular, model), ValidationError);

  const auto verdict = gw.judge(with, with, model);
  CHECK(verdict.scores.total == 10.0);
  CHECK_FALSE(verdict.clamped);
}

TEST_CASE("a single singular query passes through without a model call") {
  auto client = std::make_shared<QueueClient>(std::vector<std::string>{"{}"});
  auto gw = gateway_with(client);
  const Elicitation s("just one", ElicitationKind::singular, {"I1"});
  const auto mixed = gw.synthesize_mixed_elicitation({s}, testing::stub_model("m"));
  CHECK(mixed.kind() == ElicitationKind::mixed);
  CHECK(mixed.text() == "just one");
  CHECK(client->requests.empty());
}

TEST_CASE("temperatures: evaluation roles use the model, synthesis uses the option") {
  auto client = std::make_shared<QueueClient>(std::vector<std::string>{
      R"({"elicitation": "Use the \"invoice PDF\" to extract totals and a ledger entry."})",
      R"({"input": ["a"], "process": ["b"], "output": ["c"]})"});
  auto gw = gateway_with(client);
  auto model = testing::stub_model("m");
  model.temperature = 0.1;
  (void)gw.synthesize_singular_elicitation(kInvoice, model);
  (void)gw.extract_signals(Elicitation("q", ElicitationKind::mixed, {"x"}), model);
  REQUIRE(client->requests.size() == 2);
  CHECK(client->requests[0].temperature == 0.7);
  CHECK(client->requests[1].temperature == 0.1);
  CHECK(client->requests[1].max_output_tokens == model.max_output_tokens);
}

TEST_CASE("parse failures are retried with a correction suffix") {
  auto client = std::make_shared<QueueClient>(
      std::vector<std::string>{"not json", R"({"input": ["a"], "process": ["b"], "output": ["c"]})"});
  auto gw = gateway_with(client);
  const auto s = gw.extract_signals(Elicitation("q", ElicitationKind::mixed, {"x"}), testing::stub_model("m"));
  CHECK(s.input().front().text() == "a");
  REQUIRE(client->requests.size() == 2);
  CHECK(client->requests[1].prompt.size() > client->requests[0].prompt.size());
  CHECK(client->requests[1].prompt.rfind(client->requests[0].prompt, 0) == 0);
  CHECK(gw.stats().parse_retries == 1);
}

TEST_CASE("persistent parse failures surface as a role error") {
  auto client = std::make_shared<QueueClient>(std::vector<std::string>{"still not json"});
  auto gw = gateway_with(client);
  try {
    (void)gw.extract_signals(Elicitation("q", ElicitationKind::mixed, {"x"}), testing::stub_model("m"));
    FAIL("expected a role error");
  } catch (const RoleError& e) {
    CHECK(e.role() == roles::kExtractSignals);
    CHECK(e.raw_response() == "still not json");
  }
  CHECK(client->requests.size() == 3);
}

TEST_CASE("invalid workflows and unmentioned elements are rejected") {
  auto cyclic = std::make_shared<QueueClient>(std::vector<std::string>{
      R"({"nodes": [{"id": "t", "kind": "task", "name": "x", "steps": ["s"]}], "edges": [{"from": "t", "to": "t"}]})"});
  auto gw = gateway_with(cyclic);
  CHECK_THROWS_AS(gw.generate_workflow_with_intention(kInvoice, testing::stub_model("m")), RoleError);

  auto vague = std::make_shared<QueueClient>(std::vector<std::string>{R"({"elicitation": "Do the usual thing."})"});
  auto gw2 = gateway_with(vague);
  CHECK_THROWS_AS(gw2.synthesize_singular_elicitation(kInvoice, testing::stub_model("m")), RoleError);

  auto paraphrased = std::make_shared<QueueClient>(std::vector<std::string>{
      R"({"elicitation": "Take my bill scan, extract totals, give me a ledger entry.",
          "paraphrases": {"invoice PDF": "bill scan"}})"});
  auto gw3 = gateway_with(paraphrased);
  CHECK_NOTHROW(gw3.synthesize_singular_elicitation(kInvoice, testing::stub_model("m")));
}

TEST_CASE("judge scores outside [0,10] are clamped and flagged") {
  auto client = std::make_shared<QueueClient>(std::vector<std::string>{
      R"({"coverage": "11", "consistency": 7.5, "integration": -2, "total": "8"})"});
  auto gw = gateway_with(client);
  const auto w = simple_workflow("p");
  const auto r = gw.judge(w, w, testing::stub_model("m"));
  CHECK(r.clamped);
  CHECK(r.scores.coverage == 10.0);
  CHECK(r.scores.consistency == 7.5);
  CHECK(r.scores.integration == 0.0);
  CHECK(r.scores.total == 8.0);
}

TEST_CASE("record then replay without clients") {
  auto cassette = std::make_shared<Cassette>();
  const auto model = testing::stub_model("m");
  Intention in = kForecast;
  Workflow recorded;
  {
    auto gw = gateway_with(std::make_shared<ScriptedStubClient>(), CassetteMode::record, cassette);
    recorded = gw.generate_workflow_with_intention(in, model, "context text");
    CHECK(gw.stats().live_calls == 1);
  }
  CHECK(cassette->size() == 1);

  Gateway replay({}, cassette, CassetteMode::replay);
  CHECK(replay.generate_workflow_with_intention(in, model, "context text") == recorded);
  CHECK(replay.stats().cassette_hits == 1);
  CHECK(replay.stats().live_calls == 0);
  CHECK_THROWS_AS(replay.generate_workflow_with_intention(in, model, "other context"), CassetteMiss);

  // Live mode ignores the cassette and never appends to it.
  auto client = std::make_shared<ScriptedStubClient>();
  auto live = gateway_with(client, CassetteMode::live, cassette);
  (void)live.generate_workflow_with_intention(in, model, "context text");
  CHECK(client->calls() == 1);
  CHECK(cassette->size() == 1);
}

TEST_CASE("unknown model in record mode is a configuration error") {
  auto gw = gateway_with(std::make_shared<ScriptedStubClient>(), CassetteMode::record);
  CHECK_THROWS_AS(gw.extract_signals(Elicitation("q", ElicitationKind::mixed, {"x"}), testing::stub_model("other")),
                  ConfigError);
}

TEST_CASE("transport retries") {
  const auto model = testing::stub_model("m");
  const Elicitation q(stub::phrase_intention(kInvoice.signals, 0), ElicitationKind::mixed, {"I1"});

  auto flaky = std::make_shared<FlakyClient>(2, true);
  auto gw = gateway_with(flaky);
  CHECK(gw.extract_signals(q, model) == kInvoice.signals);
  CHECK(flaky->calls == 3);

  auto hopeless = std::make_shared<FlakyClient>(10, true);
  auto gw2 = gateway_with(hopeless);
  CHECK_THROWS_AS(gw2.extract_signals(q, model), TransportError);
  CHECK(hopeless->calls == 4);  // first try plus three retries

  auto fatal = std::make_shared<FlakyClient>(1, false);
  auto gw3 = gateway_with(fatal);
  CHECK_THROWS_AS(gw3.extract_signals(q, model), TransportError);
  CHECK(fatal->calls == 1);
}

TEST_CASE("canned stub rules match role, prompt text and payload") {
  StubScript script;
  CannedRule rule;
  rule.role = roles::kJudge;
  rule.responses = {R"({"coverage": 1, "consistency": 2, "integration": 3, "total": 2})",
                    R"({"coverage": 4, "consistency": 4, "integration": 4, "total": 4})"};
  script.canned.push_back(rule);
  auto gw = gateway_with(std::make_shared<ScriptedStubClient>(script));
  const auto a = simple_workflow("a"), b = simple_workflow("b");
  const auto model = testing::stub_model("m");
  CHECK(gw.judge(a, b, model).scores.total == 2.0);
  CHECK(gw.judge(b, a, model).scores.total == 4.0);
  CHECK(gw.judge(a, a, model).scores.total == 4.0);  // the last reply repeats
}
