#include <catch2/catch_amalgamated.hpp>

#include "cpda/cpdm.hpp"

using namespace cpda;

namespace {

DependenceScore dd(int i, int j, double v, bool flagged = false) {
  DependenceScore d;
  d.source = i;
  d.target = j;
  d.kind = DependenceScore::Kind::Direct;
  d.value = v;
  d.flagged = flagged;
  return d;
}

Cpdm sample_model() {
  CausalStructure s(4);
  s.parents[2] = {1};
  s.parents[3] = {1, 2};
  s.parents[4] = {3};
  std::vector<DependenceScore> w{dd(1, 2, 0.9), dd(1, 3, 0.15), dd(2, 3, 0.5), dd(3, 4, 0.2)};
  std::vector<Node> nodes(4);
  for (int i = 1; i <= 4; ++i) {
    nodes[static_cast<std::size_t>(i - 1)].index = i;
    nodes[static_cast<std::size_t>(i - 1)].variable = std::string(1, static_cast<char>('a' + i - 1));
    nodes[static_cast<std::size_t>(i - 1)].function = "main";
  }
  return build_cpdm(s, w, nodes, Provenance{"suite", 20, 7});
}

}  // namespace

TEST_CASE("empty structure builds an empty model") {
  Cpdm m = build_cpdm(CausalStructure(3), {});
  CHECK(m.weights.empty());
  CHECK(m.node_count() == 3);
}

TEST_CASE("missing edge weight is an error") {
  CausalStructure s(2);
  s.parents[2] = {1};
  REQUIRE_THROWS_AS(build_cpdm(s, {}), std::invalid_argument);
}

TEST_CASE("band filtering keeps strictly-inside weights") {
  Cpdm m = sample_model();
  Cpdm mid = filter_band(m, 0.2, 0.8);
  REQUIRE(mid.weights.size() == 1);
  CHECK(mid.weights.count({2, 3}) == 1);
  // boundary weight 0.2 is excluded by the strict bound, included when asked
  Cpdm with_lo = filter_band(m, 0.2, 0.8, /*include_lo=*/true);
  CHECK(with_lo.weights.size() == 2);
  CHECK(with_lo.weights.count({3, 4}) == 1);
  REQUIRE_THROWS_AS(filter_band(m, 0.8, 0.2), std::invalid_argument);
}

TEST_CASE("the full band is the identity") {
  Cpdm m = sample_model();
  Cpdm all = filter_band(m, 0.0, 1.0 + 1e-9, true, true);
  CHECK(all.weights.size() == m.weights.size());
  CHECK(all.structure.edges() == m.structure.edges());
}

TEST_CASE("standard bands partition the positive edges") {
  Cpdm m = sample_model();
  Cpdm low = filter_band(m, 0.0, 0.2, false, true);
  Cpdm mid = filter_band(m, 0.2, 0.8, false, false);
  Cpdm high = filter_band(m, 0.8, 1.0, true, true);
  std::size_t positive = 0;
  for (const auto& [e, d] : m.weights)
    if (d.value > 0.0 && d.value <= 1.0) ++positive;
  CHECK(low.weights.size() + mid.weights.size() + high.weights.size() == positive);
  for (const auto& [e, d] : low.weights) CHECK(mid.weights.count(e) == 0);
  for (const auto& [e, d] : mid.weights) CHECK(high.weights.count(e) == 0);
}

TEST_CASE("diffing a model with itself leaves only shared edges") {
  Cpdm m = sample_model();
  ModelDiff d = diff_models(m, m);
  CHECK(d.only_in_a.empty());
  CHECK(d.only_in_b.empty());
  CHECK(d.in_both.size() == m.weights.size());
}

TEST_CASE("diff is antisymmetric") {
  Cpdm a = sample_model();
  Cpdm b = filter_band(a, 0.1, 0.8);  // drops 1->2 (0.9) and keeps 0.15/0.5/0.2
  ModelDiff ab = diff_models(a, b);
  ModelDiff ba = diff_models(b, a);
  CHECK(ab.only_in_a == ba.only_in_b);
  CHECK(ab.only_in_b == ba.only_in_a);
  REQUIRE(ab.in_both.size() == ba.in_both.size());
  for (const auto& [e, w] : ab.in_both) {
    REQUIRE(ba.in_both.count(e) == 1);
    CHECK(ba.in_both.at(e).first == w.second);
    CHECK(ba.in_both.at(e).second == w.first);
  }
  CHECK(ab.only_in_a == std::set<Edge>{{1, 2}});
}

TEST_CASE("mismatched node universes are rejected") {
  Cpdm a = sample_model();
  Cpdm b = build_cpdm(CausalStructure(3), {});
  REQUIRE_THROWS_AS(diff_models(a, b), std::invalid_argument);
}

TEST_CASE("dot export is byte-stable and sorted") {
  Cpdm m = sample_model();
  std::string d1 = export_dot(m);
  std::string d2 = export_dot(m);
  CHECK(d1 == d2);
  CHECK(d1.find("digraph") == 0);
  // nodes and edges appear in index order
  CHECK(d1.find("n1 ") < d1.find("n2 "));
  CHECK(d1.find("n1 -> n2") < d1.find("n1 -> n3"));
  CHECK(d1.find("n1 -> n3") < d1.find("n2 -> n3"));
}

TEST_CASE("empty model exports a minimal digraph") {
  Cpdm m = build_cpdm(CausalStructure(2), {});
  std::string dot = export_dot(m);
  CHECK(dot.find("digraph") == 0);
  CHECK(dot.find("->") == std::string::npos);
}

TEST_CASE("pen width classes are monotone in the weight") {
  CausalStructure s(2);
  s.parents[2] = {1};
  Cpdm strong = build_cpdm(s, {dd(1, 2, 0.9)});
  std::string dot = export_dot(strong);
  CHECK(dot.find("penwidth=5") != std::string::npos);
  CHECK(dot.find("gray0") != std::string::npos);

  Cpdm weak = build_cpdm(s, {dd(1, 2, 0.05)});
  std::string weak_dot = export_dot(weak);
  CHECK(weak_dot.find("penwidth=1") != std::string::npos);

  // negative estimates clamp to the floor class
  Cpdm negative = build_cpdm(s, {dd(1, 2, -0.3, true)});
  std::string neg_dot = export_dot(negative);
  CHECK(neg_dot.find("penwidth=1") != std::string::npos);
  CHECK(neg_dot.find("flagged") != std::string::npos);
}

TEST_CASE("diff export styles the three partitions") {
  Cpdm a = sample_model();
  Cpdm b = filter_band(a, 0.4, 1.0, false, true);  // drops 1->3 and 3->4
  ModelDiff d = diff_models(a, b);
  std::string dot = export_dot(a, d);
  CHECK(dot.find("color=red") != std::string::npos);
  CHECK(dot.find("color=gray50") != std::string::npos);
  CHECK(dot.find("color=blue") == std::string::npos);  // b adds nothing
  ModelDiff rev = diff_models(b, a);
  std::string rev_dot = export_dot(a, rev);
  CHECK(rev_dot.find("color=blue") != std::string::npos);
}

TEST_CASE("json round trip preserves the model") {
  Cpdm m = sample_model();
  auto j = cpdm_to_json(m);
  Cpdm back = cpdm_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.node_count() == m.node_count());
  CHECK(back.structure.edges() == m.structure.edges());
  REQUIRE(back.weights.size() == m.weights.size());
  for (const auto& [e, d] : m.weights) {
    REQUIRE(back.weights.count(e) == 1);
    CHECK(back.weights.at(e).value == d.value);
    CHECK(back.weights.at(e).flagged == d.flagged);
  }
  CHECK(back.provenance.suite_id == "suite");
  CHECK(back.provenance.nmpn == 20);
  CHECK(back.provenance.seed == 7);
  CHECK(back.nodes.size() == m.nodes.size());
}
