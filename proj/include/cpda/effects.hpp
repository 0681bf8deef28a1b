#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpda/discovery.hpp"
#include "cpda/observations.hpp"

namespace cpda {

/// Result of a do-calculus estimate. Undefined means every adjustment term
/// fell on unobserved strata; skipped_mass means some terms did.
struct EffectEstimate {
  bool defined = false;
  double value = 0.0;
  bool skipped_mass = false;

  static EffectEstimate undefined() { return {}; }
};

struct DependenceScore {
  int source = 0;
  int target = 0;
  enum class Kind { Causal, Direct } kind = Kind::Causal;
  double value = 0.0;
  bool flagged = false;  // undefined or partially-skipped estimate
};

/// Conditional probability tables fitted per node from an observation set
/// (Def. 3 semantics: a node's own mutations are excluded from its rows),
/// evaluated with the truncated factorization of the causal structure. The
/// adjustment formula of Def. 6 is this evaluation: probabilities are read
/// from the fitted Markov model, under which the formula and the truncated
/// product agree term by term.
class CausalModel {
 public:
  /// `sink_parents` endows the synthetic output channel (target id 0) with a
  /// parent set so effects toward the program output can be estimated for
  /// entry functions that print rather than return.
  CausalModel(const ObservationSet& o, const CausalStructure& s,
              std::vector<int> sink_parents = {})
      : node_count_(s.node_count) {
    cpts_.resize(static_cast<std::size_t>(node_count_) + 1);
    for (int j = 1; j <= node_count_; ++j)
      fit_node(o, j, s.parents_of(j));
    if (!sink_parents.empty()) {
      std::sort(sink_parents.begin(), sink_parents.end());
      fit_node(o, kOutputChannel, sink_parents);
      has_sink_ = true;
    }
    topo_order_ = topo_sort(s);
  }

  /// Synthetic model from explicit tables; rows map parent realizations
  /// (sorted by parent index) to P(node = 1 | pa).
  static CausalModel from_tables(const CausalStructure& s,
                                 const std::map<int, std::map<std::vector<bool>, double>>& tables) {
    CausalModel m;
    m.node_count_ = s.node_count;
    m.cpts_.resize(static_cast<std::size_t>(m.node_count_) + 1);
    for (int j = 1; j <= m.node_count_; ++j) {
      Cpt& c = m.cpt(j);
      c.parents = s.parents_of(j);
      auto it = tables.find(j);
      if (it == tables.end()) continue;
      for (const auto& [r, p] : it->second) c.rows[r] = p;
    }
    m.topo_order_ = topo_sort(s);
    return m;
  }

  int node_count() const { return node_count_; }
  bool has_sink() const { return has_sink_; }

  const std::vector<int>& parents_of(int id) const { return cpt(id).parents; }

  /// P(id = 1 | parent realization); undefined when the stratum was never
  /// observed.
  EffectEstimate cpt_row(int id, const std::vector<bool>& realization) const {
    const Cpt& c = cpt(id);
    auto it = c.rows.find(realization);
    if (it == c.rows.end()) return EffectEstimate::undefined();
    return {true, it->second, false};
  }

  /// P(targets | do(x)): truncated factorization over the ancestors of the
  /// targets, cut at intervened nodes (barren nodes marginalize to one and
  /// are never enumerated). Strata with missing table rows contribute
  /// nothing and are flagged.
  EffectEstimate do_prob(const Assignment& x, const Assignment& targets) const {
    for (const auto& [id, _] : targets)
      if (x.count(id)) throw std::invalid_argument("do_prob: intervention and target overlap");
    // ancestors of the targets; interventions cut incoming edges
    std::set<int> closure;
    std::vector<int> work;
    for (const auto& [id, _] : targets) work.push_back(id);
    while (!work.empty()) {
      int id = work.back();
      work.pop_back();
      if (!closure.insert(id).second) continue;
      if (x.count(id)) continue;
      for (int p : cpt(id).parents) work.push_back(p);
    }
    // processing order: structure nodes in topological order, sink last
    std::vector<int> order;
    for (int id : topo_order_)
      if (closure.count(id) && !x.count(id)) order.push_back(id);
    if (closure.count(kOutputChannel) && !x.count(kOutputChannel))
      order.push_back(kOutputChannel);

    State st;
    st.x = &x;
    st.targets = &targets;
    enumerate(order, 0, x, 1.0, st);
    if (!st.any_defined) return EffectEstimate::undefined();
    return {true, st.total, st.skipped};
  }

  /// Pearl's adjustment for P(target = 1 | do(x)).
  EffectEstimate causal_effect(const Assignment& x, int target) const {
    return do_prob(x, {{target, true}});
  }

 private:
  struct Cpt {
    std::vector<int> parents;
    std::map<std::vector<bool>, double> rows;
  };

  struct State {
    const Assignment* x = nullptr;
    const Assignment* targets = nullptr;
    double total = 0.0;
    bool skipped = false;
    bool any_defined = false;
  };

  CausalModel() = default;

  Cpt& cpt(int id) { return cpts_[slot(id)]; }
  const Cpt& cpt(int id) const { return cpts_[slot(id)]; }
  std::size_t slot(int id) const {
    return static_cast<std::size_t>(id == kOutputChannel ? node_count_ : id - 1);
  }

  void fit_node(const ObservationSet& o, int id, const std::vector<int>& parents) {
    Cpt& c = cpt(id);
    c.parents = parents;
    if (o.empty()) return;
    if (parents.empty()) {
      Prob p = cond_prob_joint(o, {{id, true}}, {});
      if (p.defined) c.rows[{}] = p.value.to_double();
      return;
    }
    for (const auto& r : o.realizations_of(parents)) {
      Assignment cond;
      for (std::size_t k = 0; k < parents.size(); ++k) cond[parents[k]] = r[k];
      Prob p = cond_prob_joint(o, {{id, true}}, cond);
      if (p.defined) c.rows[r] = p.value.to_double();
    }
  }

  static std::vector<int> topo_sort(const CausalStructure& s) {
    int n = s.node_count;
    std::vector<int> indeg(static_cast<std::size_t>(n) + 1, 0);
    for (int j = 1; j <= n; ++j) indeg[static_cast<std::size_t>(j)] = static_cast<int>(s.parents_of(j).size());
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n) + 1);
    for (int j = 1; j <= n; ++j)
      for (int i : s.parents_of(j)) children[static_cast<std::size_t>(i)].push_back(j);
    std::set<int> ready;
    for (int j = 1; j <= n; ++j)
      if (indeg[static_cast<std::size_t>(j)] == 0) ready.insert(j);
    std::vector<int> order;
    while (!ready.empty()) {
      int v = *ready.begin();
      ready.erase(ready.begin());
      order.push_back(v);
      for (int c : children[static_cast<std::size_t>(v)])
        if (--indeg[static_cast<std::size_t>(c)] == 0) ready.insert(c);
    }
    return order;
  }

  void enumerate(const std::vector<int>& order, std::size_t idx, Assignment assign,
                 double product, State& st) const {
    if (product == 0.0) { st.any_defined = true; return; }
    if (idx == order.size()) {
      st.total += product;
      st.any_defined = true;
      return;
    }
    int id = order[idx];
    const Cpt& c = cpt(id);
    std::vector<bool> r;
    r.reserve(c.parents.size());
    for (int p : c.parents) {
      auto it = assign.find(p);
      if (it == assign.end()) throw std::logic_error("enumeration order broke topology");
      r.push_back(it->second);
    }
    auto row = c.rows.find(r);
    if (row == c.rows.end()) {
      st.skipped = true;  // unobserved stratum contributes nothing
      return;
    }
    double p1 = row->second;
    auto tgt = st.targets->find(id);
    if (tgt != st.targets->end()) {
      assign[id] = tgt->second;
      enumerate(order, idx + 1, assign, product * (tgt->second ? p1 : 1.0 - p1), st);
      return;
    }
    assign[id] = true;
    enumerate(order, idx + 1, assign, product * p1, st);
    assign[id] = false;
    enumerate(order, idx + 1, assign, product * (1.0 - p1), st);
  }

  int node_count_ = 0;
  bool has_sink_ = false;
  std::vector<Cpt> cpts_;  // nodes 1..n, then the output channel
  std::vector<int> topo_order_;
};

// ---------------------------------------------------------------------------
// Def. 6 / Def. 7: causal effect and causal dependence

/// P(S_j = 1 | do(x)) with the adjustment over the intervened nodes'
/// Markovian parents, evaluated in the fitted model.
inline EffectEstimate causal_effect(const ObservationSet& o, const CausalStructure& s,
                                    const Assignment& x, int j) {
  if (x.count(j)) throw std::invalid_argument("causal_effect: target inside intervention set");
  CausalModel m(o, s);
  return m.causal_effect(x, j);
}

inline DependenceScore causal_dependence(const CausalModel& m, int i, int target) {
  if (i == target) throw std::invalid_argument("causal_dependence: source equals target");
  EffectEstimate p1 = m.causal_effect({{i, true}}, target);
  EffectEstimate p0 = m.causal_effect({{i, false}}, target);
  DependenceScore d;
  d.source = i;
  d.target = target;
  d.kind = DependenceScore::Kind::Causal;
  if (!p1.defined || !p0.defined) {
    d.flagged = true;
    return d;
  }
  d.value = p1.value - p0.value;
  d.flagged = p1.skipped_mass || p0.skipped_mass;
  return d;
}

inline DependenceScore causal_dependence(const ObservationSet& o, const CausalStructure& s,
                                         int i, int j) {
  CausalModel m(o, s);
  return causal_dependence(m, i, j);
}

// ---------------------------------------------------------------------------
// Def. 9 via the natural-direct-effect reduction

/// DD_I(S_i -> S_j) = mean over covering inputs of
///   sum_z [P(S_j=1 | S_i=1, z) - P(S_j=1 | S_i=0, z)] * P(z | do(S_i=0)),
/// with Z = PA_j \ {S_i}; z ranges over realizations observed in that
/// input's observations, and undefined inner terms are skipped.
inline DependenceScore direct_dependence(const std::vector<const ObservationSet*>& covering_inputs,
                                         const std::vector<const CausalModel*>& models,
                                         const CausalStructure& s, int i, int j) {
  const auto& pa = s.parents_of(j);
  if (!std::binary_search(pa.begin(), pa.end(), i))
    throw std::invalid_argument("direct_dependence: not a structure edge");
  std::vector<int> mediators;
  for (int p : pa)
    if (p != i) mediators.push_back(p);

  DependenceScore d;
  d.source = i;
  d.target = j;
  d.kind = DependenceScore::Kind::Direct;
  if (covering_inputs.empty()) {
    d.flagged = true;
    return d;
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < covering_inputs.size(); ++t) {
    const ObservationSet& ot = *covering_inputs[t];
    const CausalModel& mt = *models[t];
    double nde = 0.0;
    std::vector<std::vector<bool>> zs;
    if (mediators.empty()) zs.push_back({});
    else zs = ot.realizations_of(mediators);
    for (const auto& z : zs) {
      // CPT rows of j: assignment over PA_j = {i} union Z
      std::vector<bool> row1, row0;
      std::size_t zi = 0;
      for (int p : pa) {
        if (p == i) { row1.push_back(true); row0.push_back(false); }
        else { row1.push_back(z[zi]); row0.push_back(z[zi]); ++zi; }
      }
      EffectEstimate pj1 = mt.cpt_row(j, row1);
      EffectEstimate pj0 = mt.cpt_row(j, row0);
      if (!pj1.defined || !pj0.defined) {
        d.flagged = true;
        continue;
      }
      double weight = 1.0;
      if (!mediators.empty()) {
        Assignment zt;
        for (std::size_t k = 0; k < mediators.size(); ++k) zt[mediators[k]] = z[k];
        EffectEstimate pz = mt.do_prob({{i, false}}, zt);
        if (!pz.defined) {
          d.flagged = true;
          continue;
        }
        if (pz.skipped_mass) d.flagged = true;
        weight = pz.value;
      }
      nde += (pj1.value - pj0.value) * weight;
    }
    sum += nde;
  }
  d.value = sum / static_cast<double>(covering_inputs.size());
  return d;
}

// ---------------------------------------------------------------------------
// Theorem-1 sanity report

struct FactorizationReport {
  double truncated_sum = 0.0;       // over realizations consistent with x
  double inconsistent_mass = 0.0;   // must be exactly 0 by construction
  bool complete = true;             // false when a needed row was missing
};

/// Sums the truncated product over every joint realization. With proper
/// tables the consistent realizations sum to 1 and realizations inconsistent
/// with x receive probability 0.
inline FactorizationReport verify_truncated_factorization(const CausalStructure& s,
                                                          const CausalModel& m,
                                                          const Assignment& x) {
  FactorizationReport rep;
  int n = s.node_count;
  if (n > 20) throw std::invalid_argument("verify_truncated_factorization: too many nodes");
  std::vector<bool> assign(static_cast<std::size_t>(n) + 1, false);
  for (std::uint64_t code = 0; code < (1ULL << n); ++code) {
    for (int j = 1; j <= n; ++j) assign[static_cast<std::size_t>(j)] = (code >> (j - 1)) & 1;
    bool consistent = true;
    for (const auto& [id, v] : x)
      if (assign[static_cast<std::size_t>(id)] != v) consistent = false;
    if (!consistent) continue;  // truncated product assigns 0 by definition
    double prod = 1.0;
    bool ok = true;
    for (int j = 1; j <= n && ok; ++j) {
      if (x.count(j)) continue;
      std::vector<bool> r;
      for (int p : s.parents_of(j)) r.push_back(assign[static_cast<std::size_t>(p)]);
      EffectEstimate row = m.cpt_row(j, r);
      if (!row.defined) { ok = false; rep.complete = false; break; }
      prod *= assign[static_cast<std::size_t>(j)] ? row.value : 1.0 - row.value;
    }
    if (ok) rep.truncated_sum += prod;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Score export

inline std::string scores_to_csv(const std::vector<DependenceScore>& scores) {
  std::ostringstream os;
  os << "source,target,kind,value,diagnostics-flag\n";
  for (const auto& d : scores) {
    os << d.source << ',' << d.target << ','
       << (d.kind == DependenceScore::Kind::Causal ? "causal" : "direct") << ','
       << format_double(d.value) << ',' << (d.flagged ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace cpda
