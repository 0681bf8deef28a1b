#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpda/effects.hpp"
#include "cpda/minilang.hpp"

namespace cpda {

struct RankedEntry {
  int id = 0;       // node index (CDFL) or source line (SBFL)
  int line = 0;
  double score = 0.0;
  bool flagged = false;
};

struct SuspiciousnessRanking {
  std::string method;
  std::vector<RankedEntry> entries;  // descending score; equal scores by id
  int raw_tie_count = 0;             // adjacent equal raw scores before id tiebreak
};

enum class TiePolicy { Avg, Min, Max, LineOrder };

inline const char* tie_policy_name(TiePolicy p) {
  switch (p) {
    case TiePolicy::Avg: return "avg";
    case TiePolicy::Min: return "min";
    case TiePolicy::Max: return "max";
    case TiePolicy::LineOrder: return "line-order";
  }
  return "?";
}

struct FaultSpec {
  std::vector<int> nodes;
  std::string description;
};

// ---------------------------------------------------------------------------
// Output node selection

/// Default S_out: the entry function's only return node; entry functions
/// that print (or have several returns) use the synthetic output channel,
/// whose trajectory is the printed sequence.
inline int select_output_node(const Program& p, const std::vector<Node>& nodes,
                              std::optional<int> override_node = std::nullopt) {
  if (override_node) {
    if (*override_node != kOutputChannel &&
        (*override_node < 1 || *override_node > static_cast<int>(nodes.size())))
      throw std::invalid_argument("output node override out of range");
    return *override_node;
  }
  const FunctionDef& entry = p.entry_fn();
  std::vector<int> entry_returns;
  for (const auto& n : nodes)
    if (n.kind == NodeKind::Return && n.function == entry.name)
      entry_returns.push_back(n.index);
  if (entry.returns_value && entry_returns.size() == 1) return entry_returns.front();

  bool has_print = false;
  std::vector<const std::vector<Stmt>*> todo;
  for (const auto& f : p.functions) todo.push_back(&f.body);
  while (!todo.empty() && !has_print) {
    const auto* body = todo.back();
    todo.pop_back();
    for (const auto& s : *body) {
      if (s.kind == Stmt::Kind::Print) { has_print = true; break; }
      if (!s.body.empty()) todo.push_back(&s.body);
      if (!s.else_body.empty()) todo.push_back(&s.else_body);
    }
  }
  if (!has_print && entry_returns.empty())
    throw std::invalid_argument("program has no output site (no return in entry, no print)");
  return kOutputChannel;
}

// ---------------------------------------------------------------------------
// CDFL scores

/// susp(S_i) = mean over failing tests of CD_{O_t}(S_i, S_out) minus the mean
/// over passing tests. S_out's own entry is not ranked. Raw ties are counted
/// and then broken by ascending node index.
inline SuspiciousnessRanking cdfl_scores(const std::vector<const CausalModel*>& per_test_models,
                                         const std::vector<int>& fail_tests,
                                         const std::vector<int>& pass_tests, int out,
                                         const std::vector<Node>& nodes) {
  if (fail_tests.empty()) throw std::invalid_argument("cdfl_scores: no failing tests");
  SuspiciousnessRanking r;
  r.method = "cdfl";
  int n = static_cast<int>(nodes.size());
  for (int i = 1; i <= n; ++i) {
    if (i == out) continue;
    double fail_sum = 0.0, pass_sum = 0.0;
    bool flagged = false;
    for (int t : fail_tests) {
      DependenceScore cd = causal_dependence(*per_test_models[static_cast<std::size_t>(t)], i, out);
      fail_sum += cd.value;
      flagged = flagged || cd.flagged;
    }
    for (int t : pass_tests) {
      DependenceScore cd = causal_dependence(*per_test_models[static_cast<std::size_t>(t)], i, out);
      pass_sum += cd.value;
      flagged = flagged || cd.flagged;
    }
    RankedEntry e;
    e.id = i;
    e.line = nodes[static_cast<std::size_t>(i - 1)].pos.line;
    e.score = fail_sum / static_cast<double>(fail_tests.size()) -
              (pass_tests.empty() ? 0.0
                                  : pass_sum / static_cast<double>(pass_tests.size()));
    e.flagged = flagged;
    r.entries.push_back(e);
  }
  std::sort(r.entries.begin(), r.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  for (std::size_t k = 1; k < r.entries.size(); ++k)
    if (r.entries[k].score == r.entries[k - 1].score) ++r.raw_tie_count;
  return r;
}

// ---------------------------------------------------------------------------
// SBFL baseline (Ochiai over statements)

/// Statement-level Ochiai: nodes collapse onto their source lines, a line is
/// covered when any of its nodes executed. The S_out node does not rank.
inline SuspiciousnessRanking sbfl_ochiai(const std::vector<Node>& nodes,
                                         const std::vector<std::vector<bool>>& node_coverage,
                                         const std::vector<bool>& test_passes, int out_node) {
  std::map<int, std::vector<int>> line_nodes;
  for (const auto& n : nodes) {
    if (n.index == out_node) continue;
    line_nodes[n.pos.line].push_back(n.index);
  }
  SuspiciousnessRanking r;
  r.method = "sbfl-ochiai";
  std::size_t tests = test_passes.size();
  for (const auto& [line, members] : line_nodes) {
    double ef = 0, ep = 0, nf = 0;
    for (std::size_t t = 0; t < tests; ++t) {
      bool covered = false;
      for (int m : members)
        if (node_coverage[t][static_cast<std::size_t>(m)]) covered = true;
      if (covered && !test_passes[t]) ef += 1;
      if (covered && test_passes[t]) ep += 1;
      if (!covered && !test_passes[t]) nf += 1;
    }
    double den = std::sqrt((ef + nf) * (ef + ep));
    RankedEntry e;
    e.id = line;
    e.line = line;
    e.score = den == 0.0 ? 0.0 : ef / den;
    r.entries.push_back(e);
  }
  std::sort(r.entries.begin(), r.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  for (std::size_t k = 1; k < r.entries.size(); ++k)
    if (r.entries[k].score == r.entries[k - 1].score) ++r.raw_tie_count;
  return r;
}

// ---------------------------------------------------------------------------
// Tiebreakers and acc@n

/// Rank of the best faulty element under a tie policy. Entries are assumed
/// sorted by descending score. `fault_ids` are node indices for CDFL
/// rankings and source lines for SBFL rankings.
inline double apply_tiebreaker(const SuspiciousnessRanking& r, TiePolicy policy,
                               const std::vector<int>& fault_ids) {
  if (r.entries.empty()) throw std::invalid_argument("apply_tiebreaker: empty ranking");
  std::set<int> fault(fault_ids.begin(), fault_ids.end());
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  std::size_t i = 0;
  while (i < r.entries.size()) {
    std::size_t block_end = i + 1;
    while (block_end < r.entries.size() && r.entries[block_end].score == r.entries[i].score)
      ++block_end;
    // block covers ranks [i+1, block_end] (1-based)
    std::vector<std::size_t> members;
    for (std::size_t k = i; k < block_end; ++k)
      if (fault.count(r.entries[k].id)) members.push_back(k);
    if (!members.empty()) {
      double rank;
      double lo = static_cast<double>(i + 1);
      double hi = static_cast<double>(block_end);
      switch (policy) {
        case TiePolicy::Min: rank = lo; break;
        case TiePolicy::Max: rank = hi; break;
        case TiePolicy::Avg: rank = (lo + hi) / 2.0; break;
        case TiePolicy::LineOrder: {
          // order the tied block by source position, independent of scores
          std::vector<std::size_t> block;
          for (std::size_t k = i; k < block_end; ++k) block.push_back(k);
          std::stable_sort(block.begin(), block.end(), [&](std::size_t a, std::size_t b) {
            if (r.entries[a].line != r.entries[b].line) return r.entries[a].line < r.entries[b].line;
            return r.entries[a].id < r.entries[b].id;
          });
          rank = hi;
          for (std::size_t pos = 0; pos < block.size(); ++pos) {
            if (fault.count(r.entries[block[pos]].id)) {
              rank = lo + static_cast<double>(pos);
              break;
            }
          }
          break;
        }
      }
      best = std::min(best, rank);
      found = true;
    }
    i = block_end;
  }
  if (!found) throw std::invalid_argument("apply_tiebreaker: faulty element not in ranking");
  return best;
}

/// Number of corpus entries whose best faulty element ranks within the top n.
inline int acc_at_n(const std::vector<double>& ranks, int n) {
  int count = 0;
  for (double r : ranks)
    if (r <= static_cast<double>(n)) ++count;
  return count;
}

// ---------------------------------------------------------------------------
// CSV export

inline std::string ranking_to_csv(const SuspiciousnessRanking& r) {
  std::ostringstream os;
  os << "rank,node-index,line,score,method\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    os << (i + 1) << ',' << e.id << ',' << e.line << ',' << format_double(e.score) << ','
       << r.method << '\n';
  }
  return os.str();
}

}  // namespace cpda
