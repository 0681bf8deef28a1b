#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpda/effects.hpp"
#include "cpda/minilang.hpp"

#include "json.hpp"

namespace cpda {

using Edge = std::pair<int, int>;  // (parent, child)

struct Provenance {
  std::string suite_id;
  int nmpn = 0;
  std::uint64_t seed = 0;
};

/// The causal structure annotated with direct-dependence edge weights.
struct Cpdm {
  CausalStructure structure;
  std::map<Edge, DependenceScore> weights;
  std::vector<Node> nodes;  // labels; indices 1..n
  Provenance provenance;

  int node_count() const { return structure.node_count; }
};

inline Cpdm build_cpdm(const CausalStructure& s, const std::vector<DependenceScore>& dd,
                       std::vector<Node> nodes = {}, Provenance prov = {}) {
  Cpdm m;
  m.structure = s;
  m.nodes = std::move(nodes);
  m.provenance = std::move(prov);
  std::map<Edge, DependenceScore> by_edge;
  for (const auto& d : dd) by_edge[{d.source, d.target}] = d;
  for (auto e : s.edges()) {
    auto it = by_edge.find(e);
    if (it == by_edge.end())
      throw std::invalid_argument("build_cpdm: missing weight for edge " +
                                  std::to_string(e.first) + "->" + std::to_string(e.second));
    m.weights[e] = it->second;
  }
  return m;
}

/// Keeps edges whose weight falls between the bounds; both bounds are strict
/// by default, mirroring the threshold semantics the rendered figures use.
inline Cpdm filter_band(const Cpdm& m, double lo, double hi, bool include_lo = false,
                        bool include_hi = false) {
  if (!(lo < hi)) throw std::invalid_argument("filter_band: need lo < hi");
  Cpdm out;
  out.nodes = m.nodes;
  out.provenance = m.provenance;
  out.structure = CausalStructure(m.structure.node_count);
  for (const auto& [e, d] : m.weights) {
    double w = d.value;
    bool in = (w > lo || (include_lo && w == lo)) && (w < hi || (include_hi && w == hi));
    if (!in) continue;
    out.structure.parents[static_cast<std::size_t>(e.second)].push_back(e.first);
    out.weights[e] = d;
  }
  for (auto& p : out.structure.parents) std::sort(p.begin(), p.end());
  return out;
}

struct ModelDiff {
  std::set<Edge> only_in_a;
  std::set<Edge> only_in_b;
  std::map<Edge, std::pair<double, double>> in_both;  // weight in A, weight in B
};

inline ModelDiff diff_models(const Cpdm& a, const Cpdm& b) {
  if (a.node_count() != b.node_count())
    throw std::invalid_argument("diff_models: node universes differ");
  for (std::size_t i = 0; i < a.nodes.size() && i < b.nodes.size(); ++i)
    if (a.nodes[i].variable != b.nodes[i].variable)
      throw std::invalid_argument("diff_models: node universes differ");
  ModelDiff d;
  for (const auto& [e, w] : a.weights) {
    auto it = b.weights.find(e);
    if (it == b.weights.end()) d.only_in_a.insert(e);
    else d.in_both[e] = {w.value, it->second.value};
  }
  for (const auto& [e, w] : b.weights)
    if (!a.weights.count(e)) d.only_in_b.insert(e);
  return d;
}

// ---------------------------------------------------------------------------
// DOT export

struct DotStyle {
  std::string graph_name = "cpdm";
  bool weight_tooltips = true;
};

namespace detail {

inline std::string dot_label(const Cpdm& m, int index) {
  std::string label = "<" + std::to_string(index) + ">";
  if (index >= 1 && index <= static_cast<int>(m.nodes.size())) {
    label += " " + m.nodes[static_cast<std::size_t>(index - 1)].variable;
  }
  return label;
}

/// Five discrete pen-width / gray classes, monotone in the weight. Negative
/// estimates clamp to the floor class.
inline int weight_class(double w) {
  double c = std::clamp(w, 0.0, 1.0);
  int cls = static_cast<int>(c * 5.0);
  return std::min(cls, 4);
}

inline const char* class_gray(int cls) {
  static const char* level[] = {"gray80", "gray60", "gray40", "gray20", "gray0"};
  return level[cls];
}

inline void emit_nodes(const Cpdm& m, const std::set<int>& used, std::ostringstream& os) {
  for (int idx : used)
    os << "  n" << idx << " [label=\"" << dot_label(m, idx) << "\"];\n";
}

}  // namespace detail

inline std::string export_dot(const Cpdm& m, const DotStyle& style = {}) {
  std::ostringstream os;
  os << "digraph " << style.graph_name << " {\n";
  os << "  rankdir=TB;\n  node [shape=ellipse, fontsize=11];\n";
  std::set<int> used;
  for (const auto& [e, d] : m.weights) {
    used.insert(e.first);
    used.insert(e.second);
  }
  detail::emit_nodes(m, used, os);
  for (const auto& [e, d] : m.weights) {
    int cls = detail::weight_class(d.value);
    os << "  n" << e.first << " -> n" << e.second << " [penwidth=" << (1 + cls)
       << ", color=" << detail::class_gray(cls);
    if (style.weight_tooltips)
      os << ", tooltip=\"dd=" << format_double(d.value) << (d.flagged ? " (flagged)" : "")
         << "\"";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

/// A - B rendering: edges only in A solid red, only in B dashed blue, shared
/// edges gray.
inline std::string export_dot(const Cpdm& universe, const ModelDiff& d,
                              const DotStyle& style = {}) {
  std::ostringstream os;
  os << "digraph " << style.graph_name << " {\n";
  os << "  rankdir=TB;\n  node [shape=ellipse, fontsize=11];\n";
  std::set<int> used;
  for (const auto& e : d.only_in_a) { used.insert(e.first); used.insert(e.second); }
  for (const auto& e : d.only_in_b) { used.insert(e.first); used.insert(e.second); }
  for (const auto& [e, w] : d.in_both) { used.insert(e.first); used.insert(e.second); }
  detail::emit_nodes(universe, used, os);
  std::map<Edge, std::string> styled;
  for (const auto& e : d.only_in_a)
    styled[e] = "[color=red, style=solid, penwidth=2]";
  for (const auto& e : d.only_in_b)
    styled[e] = "[color=blue, style=dashed, penwidth=2]";
  for (const auto& [e, w] : d.in_both)
    styled[e] = "[color=gray50, style=solid, penwidth=1]";
  for (const auto& [e, attr] : styled)
    os << "  n" << e.first << " -> n" << e.second << " " << attr << ";\n";
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON persistence

inline nlohmann::ordered_json cpdm_to_json(const Cpdm& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["node_count"] = m.node_count();
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : m.nodes) {
    nodes.push_back({{"index", n.index},
                     {"kind", node_kind_name(n.kind)},
                     {"variable", n.variable},
                     {"function", n.function},
                     {"line", n.pos.line},
                     {"col", n.pos.col}});
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [e, d] : m.weights) {
    edges.push_back({{"parent", e.first},
                     {"child", e.second},
                     {"dd", d.value},
                     {"flagged", d.flagged}});
  }
  j["edges"] = std::move(edges);
  j["provenance"] = {{"suite", m.provenance.suite_id},
                     {"nmpn", m.provenance.nmpn},
                     {"seed", m.provenance.seed}};
  return j;
}

inline Cpdm cpdm_from_json(const nlohmann::json& j) {
  Cpdm m;
  int n = j.at("node_count").get<int>();
  m.structure = CausalStructure(n);
  for (const auto& nj : j.at("nodes")) {
    Node node;
    node.index = nj.at("index").get<int>();
    std::string kind = nj.at("kind").get<std::string>();
    if (kind == "assign-lhs") node.kind = NodeKind::AssignLhs;
    else if (kind == "parameter") node.kind = NodeKind::Parameter;
    else if (kind == "predicate") node.kind = NodeKind::Predicate;
    else node.kind = NodeKind::Return;
    node.variable = nj.at("variable").get<std::string>();
    node.function = nj.at("function").get<std::string>();
    node.pos.line = nj.at("line").get<int>();
    node.pos.col = nj.at("col").get<int>();
    m.nodes.push_back(node);
  }
  for (const auto& ej : j.at("edges")) {
    int p = ej.at("parent").get<int>();
    int c = ej.at("child").get<int>();
    DependenceScore d;
    d.source = p;
    d.target = c;
    d.kind = DependenceScore::Kind::Direct;
    d.value = ej.at("dd").get<double>();
    d.flagged = ej.at("flagged").get<bool>();
    m.structure.parents[static_cast<std::size_t>(c)].push_back(p);
    m.weights[{p, c}] = d;
  }
  for (auto& ps : m.structure.parents) std::sort(ps.begin(), ps.end());
  const auto& prov = j.at("provenance");
  m.provenance.suite_id = prov.at("suite").get<std::string>();
  m.provenance.nmpn = prov.at("nmpn").get<int>();
  m.provenance.seed = prov.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace cpda
