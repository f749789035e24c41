#include <catch_amalgamated.hpp>

#include <random>

#include "intentcap/core/json_io.hpp"
#include "intentcap/core/sample.hpp"
#include "intentcap/digest.hpp"
#include "intentcap/rng.hpp"
#include "support.hpp"

using namespace intentcap;

namespace {

Workflow chain() {
  Workflow w;
  w.nodes = {{"i1", NodeKind::input, "invoice PDF", "", {}},
             {"t1", NodeKind::task, "extract totals", "", {"read", "sum"}},
             {"o1", NodeKind::output, "summary", "", {}}};
  w.edges = {{"i1", "t1"}, {"t1", "o1"}};
  return w;
}

bool mentions(const std::vector<std::string>& report, const std::string& needle) {
  return std::any_of(report.begin(), report.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("semantic elements are trimmed and non-empty") {
  CHECK(SemanticElement("  invoice PDF \n").text() == "invoice PDF");
  CHECK_THROWS_AS(SemanticElement("   "), ValidationError);
}

TEST_CASE("signal triples drop duplicates and merge by first occurrence") {
  SignalTriple a({"invoice PDF", "invoice PDF"}, {"extract"}, {"csv"});
  CHECK(a.input().size() == 1);
  SignalTriple b({"receipt", "invoice PDF"}, {"extract"}, {"report"});
  const auto m = merge_signals({a, b});
  REQUIRE(m.input().size() == 2);
  CHECK(m.input()[0].text() == "invoice PDF");
  CHECK(m.input()[1].text() == "receipt");
  CHECK(m.process().size() == 1);
  CHECK(m.output().size() == 2);
}

TEST_CASE("intention sets reject duplicate ids") {
  const auto i = testing::intention("A", {"x"}, {"y"}, {"z"});
  CHECK_THROWS_AS(IntentionSet({i, i}), ValidationError);
  CHECK(IntentionSet({i}).ids() == std::vector<std::string>{"A"});
}

TEST_CASE("elicitation source counts follow the kind") {
  CHECK_THROWS_AS(Elicitation("q", ElicitationKind::singular, {"a", "b"}), ValidationError);
  CHECK_THROWS_AS(Elicitation("q", ElicitationKind::mixed, {}), ValidationError);
  CHECK_NOTHROW(Elicitation("q", ElicitationKind::mixed, {"a", "b"}));
}

TEST_CASE("workflow validation") {
  CHECK(is_valid_workflow(chain()));

  SECTION("cycle") {
    auto w = chain();
    w.nodes.push_back({"t2", NodeKind::task, "check", "", {"look"}});
    w.edges.push_back({"t1", "t2"});
    w.edges.push_back({"t2", "t1"});
    CHECK(mentions(validate_workflow(w), "cycle"));
  }
  SECTION("task with no path to an output") {
    auto w = chain();
    w.nodes.push_back({"t2", NodeKind::task, "dead end", "", {"stop"}});
    w.edges.push_back({"i1", "t2"});
    CHECK(mentions(validate_workflow(w), "unreachable output"));
  }
  SECTION("task not fed by an input") {
    auto w = chain();
    w.nodes.push_back({"t2", NodeKind::task, "orphan", "", {"x"}});
    w.edges.push_back({"t2", "o1"});
    CHECK(mentions(validate_workflow(w), "unreachable input"));
  }
  SECTION("edges into inputs and out of outputs") {
    auto w = chain();
    w.edges.push_back({"o1", "i1"});
    const auto r = validate_workflow(w);
    CHECK(mentions(r, "terminates at an input"));
    CHECK(mentions(r, "originates at an output"));
  }
  SECTION("dangling edge and task without steps") {
    auto w = chain();
    w.nodes[1].steps.clear();
    w.edges.push_back({"t1", "nowhere"});
    const auto r = validate_workflow(w);
    CHECK(mentions(r, "has no steps"));
    CHECK(mentions(r, "'nowhere' is not a node"));
  }
}

TEST_CASE("output reachability agrees with exhaustive path search") {
  // Random DAGs over a fixed topological order; the reference enumerates
  // simple paths from each task.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 4);
    Workflow w;
    std::vector<NodeKind> kinds(n);
    for (int i = 0; i < n; ++i) {
      kinds[i] = i == 0 ? NodeKind::input : i == n - 1 ? NodeKind::output : static_cast<NodeKind>(rng() % 3);
      w.nodes.push_back({"n" + std::to_string(i), kinds[i], "node " + std::to_string(i), "",
                         kinds[i] == NodeKind::task ? std::vector<std::string>{"s"} : std::vector<std::string>{}});
    }
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (kinds[a] != NodeKind::output && kinds[b] != NodeKind::input && rng() % 2)
          w.edges.push_back({"n" + std::to_string(a), "n" + std::to_string(b)});

    std::function<bool(int)> to_output = [&](int u) {
      if (kinds[u] == NodeKind::output) return true;
      for (const auto& e : w.edges)
        if (e.from == "n" + std::to_string(u) && to_output(std::stoi(e.to.substr(1)))) return true;
      return false;
    };
    const auto report = validate_workflow(w);
    for (int i = 0; i < n; ++i) {
      if (kinds[i] != NodeKind::task) continue;
      const bool flagged = mentions(report, "'n" + std::to_string(i) + "' has no path to an output");
      CHECK(flagged == !to_output(i));
    }
  }
}

TEST_CASE("canonical serialization ignores node and edge order") {
  auto w = chain();
  w.nodes.push_back({"i0", NodeKind::input, "bank feed", "daily", {}});
  w.edges.push_back({"i0", "t1"});
  auto shuffled = w;
  std::reverse(shuffled.nodes.begin(), shuffled.nodes.end());
  std::reverse(shuffled.edges.begin(), shuffled.edges.end());
  CHECK(canonical_serialize(w) == canonical_serialize(shuffled));
  CHECK(canonical_serialize(w) ==
        "INPUT | bank feed | daily |\n"
        "INPUT | invoice PDF |  |\n"
        "TASK | extract totals |  | read; sum\n"
        "OUTPUT | summary |  |\n"
        "i0 -> t1\n"
        "i1 -> t1\n"
        "t1 -> o1\n");
  w.edges.push_back({"o1", "t1"});
  CHECK_THROWS_AS(canonical_serialize(w), ValidationError);
}

TEST_CASE("json round trips") {
  const auto w = chain();
  CHECK(io::decode_workflow(nlohmann::json::parse(io::encode(w).dump())) == w);

  auto i = testing::intention("I1", {"a", "b"}, {"p"}, {"c"});
  i.source_tags = {"Retail/Forecast"};
  CHECK(io::decode_intention(nlohmann::json::parse(io::encode(i).dump())) == i);

  Sample s;
  s.id = "L1-S1";
  s.level = 1;
  s.reference_intentions = IntentionSet({i});
  s.singular_elicitations = {Elicitation("do it", ElicitationKind::singular, {"I1"})};
  s.reference_workflows = {w};
  s.mixed_elicitation = Elicitation("do it", ElicitationKind::mixed, {"I1"});
  CHECK(validate_sample(s).empty());
  CHECK(io::decode_sample(nlohmann::json::parse(io::encode(s).dump())) == s);
}

TEST_CASE("sample validation reports each broken invariant") {
  Sample s;
  s.level = 2;
  s.reference_intentions = IntentionSet({testing::intention("I1", {"a"}, {"p"}, {})});
  s.mixed_elicitation = Elicitation("q", ElicitationKind::mixed, {"other"});
  const auto r = validate_sample(s);
  CHECK(mentions(r, "reference intention count"));
  CHECK(mentions(r, "incomplete"));
  CHECK(mentions(r, "sources differ"));
}

TEST_CASE("hashes and derived seeds match independent values") {
  CHECK(stable_hash64("abc") == 13436514500253700074ULL);
  CHECK(field_digest(std::string("judge"), std::string("m1"), std::string("hello")) ==
        "431ec7db8e6886fe20ad845711fe64a1c6b7512cee85443c30bb6523a6bf808b");
  CHECK(derive_seed(7, 2, 1) == 6791275548301991325ULL);
}

TEST_CASE("seeded helpers") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    CHECK(uniform_index(rng, 7) < 7);
    const double u = uniform_unit(rng);
    CHECK((u >= 0.0 && u < 1.0));
  }
  auto picks = sample_without_replacement(rng, 10, 4);
  std::sort(picks.begin(), picks.end());
  CHECK(std::adjacent_find(picks.begin(), picks.end()) == picks.end());
  CHECK(picks.size() == 4);
}
