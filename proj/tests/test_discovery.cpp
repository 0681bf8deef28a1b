#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "cpda/discovery.hpp"
#include "cpda/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace cpda;
using namespace cpda::testsupport;

namespace {

Observation obs(int mutated, std::vector<std::uint8_t> bits) {
  Observation o;
  o.mutated = mutated;
  o.test_id = "t0";
  o.weight = Rational(1);
  o.bits = std::move(bits);
  return o;
}

std::string read_corpus(const std::string& name) {
  std::ifstream in(std::string(CPDA_CORPUS_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("intervention parents from a two-node chain") {
  // mutating node 1 changes node 2; nothing reaches node 3
  ObservationSet s(3, {obs(1, {1, 1, 0, 0}), obs(2, {0, 1, 0, 0}), obs(3, {0, 0, 0, 0})});
  CHECK(intervention_parents(s, 2) == std::vector<int>{1});
  CHECK(intervention_parents(s, 3).empty());
  // self-mutations never make a node its own parent
  CHECK(intervention_parents(s, 1).empty());
}

TEST_CASE("safe parents: same function, callee returns, callers' parameters") {
  Program p = parse(read_corpus("wc.mini"));
  auto nodes = index_nodes(p);
  // node 10 receives isLetter's return value
  auto spa10 = as_set(safe_parents(p, nodes, 10));
  CHECK(spa10.count(19) == 1);
  CHECK(spa10.count(20) == 1);
  for (int i = 1; i <= 16; ++i) CHECK(spa10.count(i) == 1);  // same-method nodes
  // node 18 lives in isLetter; its own function plus nothing else applies
  auto spa18 = as_set(safe_parents(p, nodes, 18));
  CHECK(spa18.count(17) == 1);
  CHECK(spa18.count(18) == 1);
  CHECK(spa18.count(7) == 0);
}

TEST_CASE("safe parents in a single-function program cover every node") {
  Program p = parse("def main() { a = 1\nb = a\nc = b }");
  auto nodes = index_nodes(p);
  CHECK(as_set(safe_parents(p, nodes, 3)) == std::set<int>{1, 2, 3});
}

TEST_CASE("safe parents include every assignment of a global the site reads") {
  Program p = parse("# global g\n"
                    "def main() { x = helper()\ny = g + 1 }\n"
                    "def helper() { g = 2\nreturn g }");
  auto nodes = index_nodes(p);
  // node 2 is y = g + 1 in main; node 3 is g = 2 in helper
  REQUIRE(nodes[1].variable == "y");
  REQUIRE(nodes[2].variable == "g");
  auto spa = as_set(safe_parents(p, nodes, 2));
  CHECK(spa.count(3) == 1);
}

TEST_CASE("distance order ranks earlier-executed nodes farther") {
  RunResult r;
  r.trajectories.resize(5);
  r.trace = {1, 2, 3, 2, 4};  // node 4 is the child; 2 re-executes after 3
  auto d = DistanceOrder::for_child(4, 4, {&r});
  // last occurrence before 4's first: node 1 at 0, node 3 at 2, node 2 at 3
  CHECK(d.order() == std::vector<int>{1, 3, 2});
  CHECK(d.farthest({1, 2, 3}) == 1);
  CHECK(d.farthest({2, 3}) == 3);
}

TEST_CASE("single-candidate branch keeps a dependent parent") {
  // P(2|1=1) = 1 vs P(2|1=0) = 0
  ObservationSet s(2, {obs(1, {1, 1, 0}), obs(2, {0, 1, 0}), obs(1, {1, 1, 0}),
                       obs(0, {0, 0, 0})});
  auto pa = markovian_parents({1}, DistanceOrder::explicit_order({1}), s, 2);
  CHECK(pa == std::set<int>{1});
}

TEST_CASE("chain screening removes the indirect ancestor") {
  SyntheticScm scm = make_scm(3, {{1, 2}, {2, 3}}, 17);
  ObservationSet o = exact_interventional_obs(scm);
  auto ipa = intervention_parents(o, 3);
  CHECK(as_set(ipa) == std::set<int>{1, 2});
  auto pa = markovian_parents(ipa, DistanceOrder::explicit_order({1, 2}), o, 3);
  CHECK(pa == std::set<int>{2});
  CHECK(pa == brute_force_markovian(o, ipa, 3));
}

TEST_CASE("collider keeps both parents") {
  SyntheticScm scm = make_scm(3, {{1, 3}, {2, 3}}, 23);
  ObservationSet o = exact_interventional_obs(scm);
  auto ipa = intervention_parents(o, 3);
  CHECK(as_set(ipa) == std::set<int>{1, 2});
  auto pa = markovian_parents(ipa, DistanceOrder::explicit_order({1, 2}), o, 3);
  CHECK(pa == std::set<int>{1, 2});
  CHECK(pa == brute_force_markovian(o, ipa, 3));
}

TEST_CASE("diamond screens the root but keeps both mediators") {
  SyntheticScm scm = make_scm(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}}, 31);
  ObservationSet o = exact_interventional_obs(scm);
  auto ipa = intervention_parents(o, 4);
  CHECK(as_set(ipa) == std::set<int>{1, 2, 3});
  auto pa = markovian_parents(ipa, DistanceOrder::explicit_order({1, 2, 3}), o, 4);
  CHECK(pa == std::set<int>{2, 3});
  CHECK(pa == brute_force_markovian(o, ipa, 4));
}

TEST_CASE("markovian parents stay within the candidate set") {
  for (std::uint64_t seed : {3u, 9u, 27u}) {
    SyntheticScm scm = make_scm(4, {{1, 2}, {2, 3}, {1, 4}, {3, 4}}, seed);
    ObservationSet o = exact_interventional_obs(scm);
    for (int j = 2; j <= 4; ++j) {
      auto ipa = intervention_parents(o, j);
      auto pa = markovian_parents(ipa, DistanceOrder::explicit_order({1, 2, 3, 4}), o, j);
      for (int k : pa) CHECK(std::count(ipa.begin(), ipa.end(), k) == 1);
    }
  }
}

TEST_CASE("screened-out ancestors stay conditionally independent post hoc") {
  SyntheticScm scm = make_scm(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}}, 57);
  ObservationSet o = exact_interventional_obs(scm);
  auto ipa = intervention_parents(o, 4);
  auto pa = markovian_parents(ipa, DistanceOrder::explicit_order({1, 2, 3}), o, 4);
  std::vector<int> pa_sorted(pa.begin(), pa.end());
  for (int removed : ipa) {
    if (pa.count(removed)) continue;
    for (const auto& r : o.realizations_of(pa_sorted)) {
      Assignment c0, c1;
      for (std::size_t k = 0; k < pa_sorted.size(); ++k) c0[pa_sorted[k]] = c1[pa_sorted[k]] = r[k];
      c0[removed] = false;
      c1[removed] = true;
      Prob p0 = cond_prob_change(o, 4, c0);
      Prob p1 = cond_prob_change(o, 4, c1);
      if (p0.defined && p1.defined)
        CHECK(Rational::approx_equal(p0.value, p1.value));
    }
  }
}

TEST_CASE("straight-line program discovers the pure chain") {
  std::string src = "def main() { a = read()\nb = a\nc = b\nprint(c) }";
  std::string suite = "t1 | 3 | 3\nt2 | 10 | 10\nt3 | 25 | 25\n";
  AnalysisOptions opt;
  opt.nmpn = 8;
  opt.seed = 5;
  Analysis a = analyze_text(src, parse_suite(suite, "chain"), opt);
  auto edges = a.structure.edges();
  CHECK(edges == std::vector<std::pair<int, int>>{{1, 2}, {2, 3}});
}

TEST_CASE("mutual intervention removes both edge directions and is recorded") {
  // nodes 1 and 2 always change together under either mutation
  ObservationSet s(3, {obs(1, {1, 1, 0, 0}), obs(2, {1, 1, 0, 0}), obs(3, {0, 0, 0, 0})});
  Program p = parse("def main() { a = read()\nb = read()\nc = 1 }");
  auto nodes = index_nodes(p);
  RunResult trace_run;
  trace_run.trajectories.resize(4);
  trace_run.trajectories[1] = {std::int64_t(1)};
  trace_run.trajectories[2] = {std::int64_t(1)};
  trace_run.trajectories[3] = {std::int64_t(1)};
  trace_run.trace = {1, 2, 3};
  DiscoveryDiagnostics diag;
  CausalStructure st = build_structure(p, nodes, s, {trace_run}, &diag);
  CHECK(!st.has_edge(1, 2));
  CHECK(!st.has_edge(2, 1));
  REQUIRE(diag.mutual_removals.size() == 2);
  CHECK(diag.mutual_removals[0] == std::pair<int, int>(1, 2));
  CHECK(diag.mutual_removals[1] == std::pair<int, int>(2, 1));
  CHECK(st.acyclic());
}

TEST_CASE("surviving cycles fall back to weakest-edge removal") {
  // rock-paper-scissors intervention pattern plus a vacuous fourth node
  ObservationSet s(4, {obs(1, {1, 1, 0, 0, 0}), obs(2, {0, 1, 1, 0, 0}),
                       obs(3, {1, 0, 1, 0, 0}), obs(4, {0, 0, 0, 0, 0})});
  Program p = parse("def main() { a = read()\nb = read()\nc = read()\nd = 1 }");
  auto nodes = index_nodes(p);
  RunResult trace_run;
  trace_run.trajectories.resize(5);
  for (int i = 1; i <= 4; ++i)
    trace_run.trajectories[static_cast<std::size_t>(i)] = {std::int64_t(1)};
  trace_run.trace = {1, 2, 3, 4};
  DiscoveryDiagnostics diag;
  CausalStructure st = build_structure(p, nodes, s, {trace_run}, &diag);
  CHECK(st.acyclic());
  REQUIRE(diag.cycle_removals.size() == 1);
  CHECK(diag.cycle_removals[0] == std::pair<int, int>(1, 2));
  CHECK(st.has_edge(2, 3));
  CHECK(st.has_edge(3, 1));
}

TEST_CASE("structure edge list round-trips sorted") {
  CausalStructure s(4);
  s.parents[3] = {1, 2};
  s.parents[4] = {3};
  std::string text = structure_to_edgelist(s);
  CHECK(text == "1 3\n2 3\n3 4\n");
  CausalStructure back = structure_from_edgelist(text, 4);
  CHECK(back.edges() == s.edges());
}
