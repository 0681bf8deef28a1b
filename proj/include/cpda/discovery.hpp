#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpda/minilang.hpp"
#include "cpda/observations.hpp"

namespace cpda {

// ---------------------------------------------------------------------------
// Causal structure

struct CausalStructure {
  int node_count = 0;
  std::vector<std::vector<int>> parents;  // 1-based child -> sorted parent list

  explicit CausalStructure(int n = 0)
      : node_count(n), parents(static_cast<std::size_t>(n) + 1) {}

  const std::vector<int>& parents_of(int j) const {
    return parents[static_cast<std::size_t>(j)];
  }

  bool has_edge(int i, int j) const {
    const auto& p = parents_of(j);
    return std::binary_search(p.begin(), p.end(), i);
  }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int j = 1; j <= node_count; ++j)
      for (int i : parents_of(j)) out.emplace_back(i, j);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool acyclic() const {
    std::vector<int> state(static_cast<std::size_t>(node_count) + 1, 0);
    for (int start = 1; start <= node_count; ++start) {
      if (state[static_cast<std::size_t>(start)] != 0) continue;
      // iterative DFS over parent edges
      std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
      state[static_cast<std::size_t>(start)] = 1;
      while (!stack.empty()) {
        auto& [v, k] = stack.back();
        const auto& ps = parents_of(v);
        if (k < ps.size()) {
          int u = ps[k++];
          int& st = state[static_cast<std::size_t>(u)];
          if (st == 1) return false;
          if (st == 0) {
            st = 1;
            stack.emplace_back(u, 0);
          }
        } else {
          state[static_cast<std::size_t>(v)] = 2;
          stack.pop_back();
        }
      }
    }
    return true;
  }
};

inline std::string structure_to_edgelist(const CausalStructure& s) {
  std::ostringstream os;
  for (auto [i, j] : s.edges()) os << i << ' ' << j << '\n';
  return os.str();
}

inline CausalStructure structure_from_edgelist(const std::string& text, int node_count) {
  CausalStructure s(node_count);
  std::istringstream in(text);
  int i, j;
  while (in >> i >> j) s.parents[static_cast<std::size_t>(j)].push_back(i);
  for (auto& p : s.parents) std::sort(p.begin(), p.end());
  return s;
}

// ---------------------------------------------------------------------------
// Intervention parents (Def. 4)

/// k is an intervention parent of j when some observation that mutates k
/// records a change at j.
inline std::vector<int> intervention_parents(const ObservationSet& o, int j) {
  std::set<int> out;
  for (const auto& obs : o.observations()) {
    if (obs.mutated == 0 || obs.mutated == j) continue;
    if (obs.bit(j, o.node_count())) out.insert(obs.mutated);
  }
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// Safe parents (call-graph heuristics)

namespace detail {

struct NodeSite {
  std::string function;
  std::vector<std::string> calls;  // callees in the defining expression
  std::vector<std::string> reads;  // variables read by the defining expression
};

inline void collect_expr(const Expr& e, std::vector<std::string>& calls,
                         std::vector<std::string>& reads) {
  switch (e.kind) {
    case Expr::Kind::Var: reads.push_back(e.name); break;
    case Expr::Kind::Call: calls.push_back(e.name); break;
    default: break;
  }
  for (const auto& a : e.args) collect_expr(*a, calls, reads);
}

class SiteWalker {
 public:
  explicit SiteWalker(const Program& p) {
    for (const auto& f : p.functions) {
      fn_ = f.name;
      for (std::size_t i = 0; i < f.params.size(); ++i)
        sites_[f.param_node_index[i]] = NodeSite{fn_, {}, {}};
      walk(f.body);
    }
  }
  const std::map<int, NodeSite>& sites() const { return sites_; }

 private:
  void add_site(int node, const Expr* def) {
    NodeSite s;
    s.function = fn_;
    if (def) collect_expr(*def, s.calls, s.reads);
    sites_[node] = std::move(s);
  }

  void walk(const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (s.kind == Stmt::Kind::Assign) add_site(s.node_index, s.expr.get());
      if ((s.kind == Stmt::Kind::If || s.kind == Stmt::Kind::While) && s.node_index)
        add_site(s.node_index, s.expr.get());
      if (s.kind == Stmt::Kind::Return && s.has_expr) add_site(s.node_index, s.expr.get());
      if (s.expr) walk_getchar(*s.expr);
      walk(s.body);
      walk(s.else_body);
    }
  }

  void walk_getchar(const Expr& e) {
    if (e.kind == Expr::Kind::GetChar) add_site(e.node_index, nullptr);
    for (const auto& a : e.args) walk_getchar(*a);
  }

  std::string fn_;
  std::map<int, NodeSite> sites_;
};

inline std::map<std::string, std::set<std::string>> call_graph(const Program& p) {
  std::map<std::string, std::set<std::string>> calls;  // caller -> callees
  for (const auto& f : p.functions) {
    std::vector<const std::vector<Stmt>*> todo{&f.body};
    while (!todo.empty()) {
      const auto* body = todo.back();
      todo.pop_back();
      for (const auto& s : *body) {
        if (s.expr) {
          std::vector<std::string> cs, rs;
          collect_expr(*s.expr, cs, rs);
          for (auto& c : cs) calls[f.name].insert(c);
        }
        if (!s.body.empty()) todo.push_back(&s.body);
        if (!s.else_body.empty()) todo.push_back(&s.else_body);
      }
    }
  }
  return calls;
}

}  // namespace detail

/// Safe-parent candidate filter: nodes of S_j's own function plus the
/// parameters of direct callers (and, for parameter nodes, every node of the
/// direct callers, where the argument values are computed); return nodes of
/// functions invoked by S_j's defining expression; every assignment node of
/// any global the defining expression reads.
inline std::vector<int> safe_parents(const Program& p, const std::vector<Node>& nodes, int j) {
  detail::SiteWalker walker(p);
  auto site_it = walker.sites().find(j);
  const Node& nj = nodes[static_cast<std::size_t>(j - 1)];
  std::string fn = nj.function;
  std::set<int> out;

  auto calls = detail::call_graph(p);
  std::set<std::string> callers;
  for (const auto& [caller, callees] : calls)
    if (callees.count(fn)) callers.insert(caller);

  for (const auto& n : nodes) {
    if (n.function == fn) out.insert(n.index);
    if (n.kind == NodeKind::Parameter && callers.count(n.function)) out.insert(n.index);
    if (nj.kind == NodeKind::Parameter && callers.count(n.function)) out.insert(n.index);
  }

  if (site_it != walker.sites().end()) {
    const auto& site = site_it->second;
    for (const auto& callee : site.calls) {
      for (const auto& n : nodes)
        if (n.kind == NodeKind::Return && n.function == callee) out.insert(n.index);
    }
    for (const auto& var : site.reads) {
      if (!p.globals.count(var)) continue;
      for (const auto& n : nodes)
        if (n.kind == NodeKind::AssignLhs && n.variable == var) out.insert(n.index);
    }
  }
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// Distance order

/// Candidates ranked by the position of their last occurrence before the
/// child's first occurrence in the concatenated oracle trace of covering
/// tests: the earlier a node last executed, the farther it ranks. Nodes with
/// no occurrence before the child rank nearest. Ties break by node index.
class DistanceOrder {
 public:
  DistanceOrder() = default;

  static DistanceOrder for_child(int j, int node_count,
                                 const std::vector<const RunResult*>& covering_oracles) {
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> last_before(static_cast<std::size_t>(node_count) + 1, kInf);
    std::vector<std::int64_t> last_seen(static_cast<std::size_t>(node_count) + 1, -1);
    std::int64_t pos = 0;
    bool found = false;
    for (const RunResult* r : covering_oracles) {
      for (int hit : r->trace) {
        if (hit == j) { found = true; break; }
        last_seen[static_cast<std::size_t>(hit)] = pos;
        ++pos;
      }
      if (found) break;
    }
    for (int k = 1; k <= node_count; ++k)
      if (last_seen[static_cast<std::size_t>(k)] >= 0)
        last_before[static_cast<std::size_t>(k)] = last_seen[static_cast<std::size_t>(k)];
    DistanceOrder d;
    for (int k = 1; k <= node_count; ++k)
      if (k != j) d.order_.push_back(k);
    std::sort(d.order_.begin(), d.order_.end(), [&](int a, int b) {
      auto ka = last_before[static_cast<std::size_t>(a)];
      auto kb = last_before[static_cast<std::size_t>(b)];
      if (ka != kb) return ka < kb;
      return a < b;
    });
    return d;
  }

  /// Explicit order for synthetic setups; farthest first.
  static DistanceOrder explicit_order(std::vector<int> farthest_first) {
    DistanceOrder d;
    d.order_ = std::move(farthest_first);
    return d;
  }

  int farthest(const std::set<int>& remain) const {
    for (int k : order_)
      if (remain.count(k)) return k;
    return *remain.begin();
  }

  const std::vector<int>& order() const { return order_; }

 private:
  std::vector<int> order_;
};

// ---------------------------------------------------------------------------
// Algorithm: Markovian parents from intervention parents

/// Farthest-first single-pass removal with full reset on every removal.
/// Comparisons where either side is undefined carry no evidence and count as
/// equal; both-undefined also counts as equal. Probability equality uses
/// absolute tolerance 1e-9 on the exact rational values.
inline std::set<int> markovian_parents(const std::vector<int>& candidates,
                                       const DistanceOrder& dist, const ObservationSet& o,
                                       int j) {
  std::set<int> cand(candidates.begin(), candidates.end());
  std::set<int> pa;
  auto differs = [](const Prob& a, const Prob& b) {
    if (!a.defined || !b.defined) return false;  // no evidence
    return !Rational::approx_equal(a.value, b.value);
  };
  while (!cand.empty() && cand != pa) {
    std::set<int> remain;
    for (int k : cand)
      if (!pa.count(k)) remain.insert(k);
    int d = dist.farthest(remain);
    bool is_parent = false;
    if (cand.size() == 1) {
      Prob p0 = cond_prob_change(o, j, {{d, false}});
      Prob p1 = cond_prob_change(o, j, {{d, true}});
      is_parent = differs(p0, p1);
    } else {
      std::vector<int> other(cand.begin(), cand.end());
      other.erase(std::find(other.begin(), other.end(), d));
      for (const auto& r : o.realizations_of(other)) {
        Assignment cond0, cond1;
        for (std::size_t k = 0; k < other.size(); ++k)
          cond0[other[k]] = cond1[other[k]] = r[k];
        cond0[d] = false;
        cond1[d] = true;
        Prob p0 = cond_prob_change(o, j, cond0);
        Prob p1 = cond_prob_change(o, j, cond1);
        if (differs(p0, p1)) {
          is_parent = true;
          break;
        }
      }
    }
    if (is_parent) {
      pa.insert(d);
    } else {
      cand.erase(d);
      pa.clear();
    }
  }
  return pa;
}

// ---------------------------------------------------------------------------
// Whole-structure construction with cycle elimination

struct DiscoveryDiagnostics {
  std::vector<std::pair<int, int>> mutual_removals;  // (i, j): i removed from PA_j
  std::vector<std::pair<int, int>> cycle_removals;
  std::vector<int> uncovered_nodes;
};

namespace detail {

/// Edges of one directed cycle (parent -> child traversal), smallest node
/// first for determinism. Only called when the structure is known cyclic.
inline std::vector<std::pair<int, int>> find_cycle(const CausalStructure& s) {
  int n = s.node_count;
  std::vector<int> state(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> parent_in_dfs(static_cast<std::size_t>(n) + 1, 0);
  for (int start = 1; start <= n; ++start) {
    if (state[static_cast<std::size_t>(start)] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    state[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      auto& [v, k] = stack.back();
      const auto& ps = s.parents_of(v);
      if (k < ps.size()) {
        int u = ps[k++];
        int& st = state[static_cast<std::size_t>(u)];
        if (st == 1) {
          // DFS walks child -> parent, so stack step a-1 -> a is structure
          // edge (stack[a] -> stack[a-1]); the back edge closes u -> v.
          std::size_t pos = stack.size() - 1;
          while (pos > 0 && stack[pos].first != u) --pos;
          std::vector<std::pair<int, int>> edges;
          for (std::size_t a = pos + 1; a < stack.size(); ++a)
            edges.emplace_back(stack[a].first, stack[a - 1].first);
          edges.emplace_back(u, stack.back().first);
          return edges;
        }
        if (st == 0) {
          st = 1;
          stack.emplace_back(u, 0);
        }
      } else {
        state[static_cast<std::size_t>(v)] = 2;
        stack.pop_back();
      }
    }
  }
  return {};
}

}  // namespace detail

inline CausalStructure build_structure(const Program& p, const std::vector<Node>& nodes,
                                       const ObservationSet& o,
                                       const std::vector<RunResult>& oracle_runs,
                                       DiscoveryDiagnostics* diag = nullptr) {
  int n = static_cast<int>(nodes.size());
  CausalStructure s(n);
  std::vector<std::vector<int>> ipa(static_cast<std::size_t>(n) + 1);
  for (int j = 1; j <= n; ++j)
    ipa[static_cast<std::size_t>(j)] = intervention_parents(o, j);

  for (int j = 1; j <= n; ++j) {
    std::vector<const RunResult*> covering;
    std::vector<int> covering_tests;
    for (std::size_t t = 0; t < oracle_runs.size(); ++t) {
      if (oracle_runs[t].covered(j)) {
        covering.push_back(&oracle_runs[t]);
        covering_tests.push_back(static_cast<int>(t));
      }
    }
    if (covering.empty()) {
      if (diag) diag->uncovered_nodes.push_back(j);
      continue;
    }
    std::vector<int> spa = safe_parents(p, nodes, j);
    std::vector<int> cands;
    std::set_intersection(ipa[static_cast<std::size_t>(j)].begin(),
                          ipa[static_cast<std::size_t>(j)].end(), spa.begin(), spa.end(),
                          std::back_inserter(cands));
    cands.erase(std::remove(cands.begin(), cands.end(), j), cands.end());
    if (cands.empty()) continue;

    std::vector<Observation> filtered;
    std::set<int> cover(covering_tests.begin(), covering_tests.end());
    for (const auto& obs : o.observations())
      if (cover.count(obs.test_index)) filtered.push_back(obs);
    ObservationSet o_cov(o.node_count(), std::move(filtered), o.scope());

    DistanceOrder dist = DistanceOrder::for_child(j, n, covering);
    std::set<int> pa = markovian_parents(cands, dist, o_cov, j);
    s.parents[static_cast<std::size_t>(j)].assign(pa.begin(), pa.end());
  }

  // Mutual-intervention rule: drop i from PA_j when j also intervenes on i.
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      auto& pj = s.parents[static_cast<std::size_t>(j)];
      if (!std::binary_search(pj.begin(), pj.end(), i)) continue;
      const auto& ii = ipa[static_cast<std::size_t>(i)];
      if (std::binary_search(ii.begin(), ii.end(), j)) {
        pj.erase(std::find(pj.begin(), pj.end(), i));
        if (diag) diag->mutual_removals.emplace_back(i, j);
      }
    }
  }

  // Deterministic fallback: while a cycle survives, remove the in-cycle edge
  // with the smallest unconditional dependence gap.
  while (!s.acyclic()) {
    auto cyc = detail::find_cycle(s);
    double best_gap = std::numeric_limits<double>::infinity();
    std::pair<int, int> best{0, 0};
    for (auto [i, j] : cyc) {
      Prob p1 = cond_prob_change(o, j, {{i, true}});
      Prob p0 = cond_prob_change(o, j, {{i, false}});
      double gap = (p1.defined && p0.defined)
                       ? std::abs((p1.value - p0.value).to_double())
                       : 0.0;
      if (gap < best_gap || (gap == best_gap && std::pair(i, j) < best)) {
        best_gap = gap;
        best = {i, j};
      }
    }
    auto& pj = s.parents[static_cast<std::size_t>(best.second)];
    pj.erase(std::find(pj.begin(), pj.end(), best.first));
    if (diag) diag->cycle_removals.push_back(best);
  }
  return s;
}

}  // namespace cpda
