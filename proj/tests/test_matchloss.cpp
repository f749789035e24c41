#include <catch_amalgamated.hpp>

#include <random>

#include "intentcap/matchloss/losses.hpp"
#include "support.hpp"

using namespace intentcap;
using Catch::Matchers::WithinAbs;

namespace {

testing::Matrix to_rows(const WeightMatrix& w) {
  testing::Matrix m(w.rows(), std::vector<double>(w.cols()));
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) m[i][j] = w(i, j);
  return m;
}

WeightMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, int levels) {
  return WeightMatrix::from_function(r, c, [&](std::size_t, std::size_t) {
    return static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) / (levels - 1);
  });
}

bool is_injective(const Matching& m) {
  std::set<std::size_t> d, r;
  for (const auto& p : m.pairs) {
    if (!d.insert(p.decoded).second || !r.insert(p.reference).second) return false;
  }
  return true;
}

// Hand-set vectors: x1, x2 and y coincide; "far" is antipodal to "near".
const OracleStubProvider& oracle() {
  static const OracleStubProvider p(3, {{"x1", {1, 0, 0}},
                                        {"x2", {1, 0, 0}},
                                        {"y", {1, 0, 0}},
                                        {"proc", {0, 1, 0}},
                                        {"near", {0, 0, 1}},
                                        {"far", {0, 0, -1}},
                                        {"side", {0, 1, 0}}});
  return p;
}

}  // namespace

TEST_CASE("rectangular assignment matches the scipy optimum") {
  const auto w = WeightMatrix::from_function(8, 11, [](std::size_t i, std::size_t j) {
    return static_cast<double>((i * 7 + j * 13 + i * j) % 17) / 16.0;
  });
  const auto m = max_weight_injection(w);
  CHECK_THAT(m.total, WithinAbs(7.1875, 1e-12));
  CHECK(m.pairs.size() == 8);
  CHECK(is_injective(m));
  CHECK_THAT(max_weight_injection(w.transposed()).total, WithinAbs(7.1875, 1e-12));
}

TEST_CASE("solvers agree with enumeration, including tie-breaks") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    // Few distinct weights so that ties are common.
    const auto w = random_matrix(rng, r, c, 3 + static_cast<int>(rng() % 3));
    const auto ex = max_weight_injection_exhaustive(w);
    const auto hu = max_weight_injection_hungarian(w);
    CHECK_THAT(ex.total, WithinAbs(testing::brute_best_injection(to_rows(w)), 1e-12));
    CHECK_THAT(hu.total, WithinAbs(ex.total, 1e-12));
    REQUIRE(ex.pairs.size() == std::min(r, c));
    REQUIRE(hu.pairs.size() == ex.pairs.size());
    for (std::size_t k = 0; k < ex.pairs.size(); ++k) {
      CHECK(ex.pairs[k].decoded == hu.pairs[k].decoded);
      CHECK(ex.pairs[k].reference == hu.pairs[k].reference);
    }
    CHECK(is_injective(hu));
  }
}

TEST_CASE("tie-break takes the lowest partner index") {
  const WeightMatrix flat(2, 3, 0.5);
  const auto m = max_weight_injection(flat);
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0].reference == 0);
  CHECK(m.pairs[1].reference == 1);
}

TEST_CASE("hungarian handles sizes beyond enumeration") {
  std::mt19937_64 rng(23);
  const auto w = random_matrix(rng, 9, 12, 1000);
  const auto m = max_weight_injection(w);
  CHECK(is_injective(m));
  CHECK(m.pairs.size() == 9);
  // Any single swap of partners cannot improve an optimal assignment.
  for (std::size_t a = 0; a < m.pairs.size(); ++a)
    for (std::size_t b = a + 1; b < m.pairs.size(); ++b) {
      const auto& p = m.pairs[a];
      const auto& q = m.pairs[b];
      CHECK(w(p.decoded, q.reference) + w(q.decoded, p.reference) <= p.weight + q.weight + 1e-12);
    }
}

TEST_CASE("best function matching agrees with enumeration over functions") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const auto w = random_matrix(rng, 1 + rng() % 4, 1 + rng() % 4, 50);
    CHECK_THAT(best_function_matching(w).total, WithinAbs(testing::brute_best_function(to_rows(w)), 1e-12));
  }
}

TEST_CASE("element loss conventions") {
  const auto& p = oracle();
  CHECK(element_loss({}, {}, p).squared == 0.0);
  CHECK(element_loss(make_elements({"x1"}), {}, p).squared == 1.0);
  CHECK(element_loss({}, make_elements({"y"}), p).squared == 1.0);
  CHECK_THAT(element_loss(make_elements({"x1"}), make_elements({"y"}), p).squared, WithinAbs(0.0, 1e-12));
  CHECK_THAT(element_loss(make_elements({"near"}), make_elements({"far"}), p).squared, WithinAbs(1.0, 1e-12));
}

TEST_CASE("granularity mismatch is normalized by the larger list") {
  const auto l = element_loss(make_elements({"x1", "x2"}), make_elements({"y"}), oracle());
  CHECK_THAT(l.squared, WithinAbs(0.5, 1e-12));
  CHECK_THAT(l.root, WithinAbs(0.70710678118654752, 1e-9));
  // Swapping the roles gives the same value when sizes differ.
  CHECK_THAT(element_loss(make_elements({"y"}), make_elements({"x1", "x2"}), oracle()).squared,
             WithinAbs(0.5, 1e-12));
}

TEST_CASE("signal loss is the weighted sum of component losses") {
  const SignalTriple decoded({"x1", "x2"}, {"proc"}, {"near"});
  const SignalTriple reference({"y"}, {"proc"}, {"far"});
  const auto l = signal_loss(decoded, reference, LossWeights::equal(), oracle());
  CHECK_THAT(l.squared, WithinAbs(0.5, 1e-12));
  CHECK_THAT(signal_loss(decoded, reference, LossWeights(0, 1, 0), oracle()).squared, WithinAbs(0.0, 1e-12));
  CHECK_THAT(signal_loss(decoded, reference, LossWeights(0, 0, 1), oracle()).squared, WithinAbs(1.0, 1e-12));
  CHECK_THAT(signal_loss(decoded, decoded, LossWeights::equal(), oracle()).squared, WithinAbs(0.0, 1e-12));
}

TEST_CASE("loss weights must be a distribution") {
  CHECK_THROWS_AS(LossWeights(0.5, 0.5, 0.5), ValidationError);
  CHECK_THROWS_AS(LossWeights(-0.1, 0.6, 0.5), ValidationError);
  CHECK_NOTHROW(LossWeights(0.2, 0.3, 0.5));
}

TEST_CASE("reference signals aggregate as a set union") {
  const IntentionSet refs({testing::intention("A", {"invoice PDF"}, {"extract"}, {"csv"}),
                           testing::intention("B", {"invoice PDF", "receipt"}, {"file"}, {"csv"})});
  const auto merged = aggregate_reference_signals(refs);
  CHECK(merged.input().size() == 2);
  CHECK(merged.process().size() == 2);
  CHECK(merged.output().size() == 1);
  CHECK_THROWS_AS(aggregate_reference_signals(IntentionSet()), ValidationError);
}

TEST_CASE("intention loss") {
  const auto& p = oracle();
  const auto w = LossWeights::equal();
  const auto a = testing::intention("A", {"y"}, {"proc"}, {"near"});
  const auto b = testing::intention("B", {"side"}, {"near"}, {"far"});

  CHECK(intention_loss(IntentionSet(), IntentionSet({a}), w, p).squared == 1.0);
  CHECK(intention_loss(IntentionSet({a}), IntentionSet(), w, p).squared == 1.0);
  CHECK(intention_loss(IntentionSet(), IntentionSet(), w, p).squared == 1.0);

  CHECK_THAT(intention_loss(IntentionSet({a, b}), IntentionSet({b, a}), w, p).squared, WithinAbs(0.0, 1e-12));
  CHECK_THAT(intention_loss(IntentionSet({a}), IntentionSet({a, b}), w, p).squared, WithinAbs(0.5, 1e-12));
}

TEST_CASE("set similarity") {
  const auto by_name = [](const Workflow& x, const Workflow& y) {
    return x.nodes.front().name == y.nodes.front().name ? 1.0 : 0.0;
  };
  auto wf = [](const std::string& name) {
    Workflow w;
    w.nodes = {{"i", NodeKind::input, name, "", {}}};
    return w;
  };
  CHECK(set_similarity({}, {wf("a")}, by_name).squared == 0.0);
  CHECK(set_similarity({wf("a")}, {}, by_name).score == 0.0);
  const auto s = set_similarity({wf("a")}, {wf("b"), wf("a")}, by_name);
  CHECK_THAT(s.squared, WithinAbs(0.5, 1e-12));
  CHECK_THAT(s.score, WithinAbs(0.70710678118654752, 1e-9));
  REQUIRE(s.matching.pairs.size() == 1);
  CHECK(s.matching.pairs[0].reference == 1);

  const auto bad = [](const Workflow&, const Workflow&) { return 1.5; };
  CHECK_THROWS_AS(set_similarity({wf("a")}, {wf("a")}, bad), ValidationError);
}

TEST_CASE("random 3x4 set similarity equals the best injection") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    testing::Matrix s(3, std::vector<double>(4));
    for (auto& row : s)
      for (auto& x : row) x = static_cast<double>(rng() % 1000) / 999.0;
    WorkflowSet a(3), b(4);
    for (std::size_t k = 0; k < 3; ++k) a[k].nodes = {{std::to_string(k), NodeKind::input, "a", "", {}}};
    for (std::size_t k = 0; k < 4; ++k) b[k].nodes = {{std::to_string(k), NodeKind::input, "b", "", {}}};
    const auto pair = [&](const Workflow& x, const Workflow& y) {
      return s[std::stoul(x.nodes[0].id)][std::stoul(y.nodes[0].id)];
    };
    testing::Matrix sq = s;
    for (auto& row : sq)
      for (auto& x : row) x *= x;
    CHECK_THAT(set_similarity(a, b, pair).squared, WithinAbs(testing::brute_best_injection(sq) / 4.0, 1e-12));
  }
}
