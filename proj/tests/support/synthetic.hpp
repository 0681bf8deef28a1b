#pragma once

// Synthetic exact-mixture observation sets: for a small binary-change SCM we
// enumerate every interventional regime (each node forced to 0 and to 1) and
// record one observation per joint realization, weighted by its exact
// probability. Change semantics mirror the program world: roots never change
// unless intervened and a node with all-unchanged parents stays unchanged.

#include <map>
#include <set>
#include <vector>

#include "cpda/discovery.hpp"
#include "cpda/observations.hpp"
#include "cpda/rng.hpp"

namespace cpda::testsupport {

struct SyntheticScm {
  CausalStructure structure{0};
  // P(node = 1 | parent realization); realizations keyed over sorted parents
  std::map<int, std::map<std::vector<bool>, Rational>> rows;
};

inline SyntheticScm make_scm(int node_count,
                             const std::vector<std::pair<int, int>>& edges,
                             std::uint64_t seed) {
  SyntheticScm scm;
  scm.structure = CausalStructure(node_count);
  for (auto [i, j] : edges) scm.structure.parents[static_cast<std::size_t>(j)].push_back(i);
  for (auto& p : scm.structure.parents) std::sort(p.begin(), p.end());
  Rng rng(seed, 0, "synthetic-cpt");
  for (int j = 1; j <= node_count; ++j) {
    const auto& pa = scm.structure.parents_of(j);
    auto& table = scm.rows[j];
    if (pa.empty()) {
      table[{}] = Rational(0);  // roots change only under intervention
      continue;
    }
    // distinct numerators keep rows faithful (no accidental independence)
    std::set<std::int64_t> used;
    std::size_t count = 1ULL << pa.size();
    for (std::size_t code = 0; code < count; ++code) {
      std::vector<bool> r;
      for (std::size_t b = 0; b < pa.size(); ++b) r.push_back((code >> b) & 1);
      bool all_zero = std::none_of(r.begin(), r.end(), [](bool v) { return v; });
      if (all_zero) {
        table[r] = Rational(0);
        continue;
      }
      std::int64_t num = rng.next_int(3, 13);
      while (used.count(num)) num = rng.next_int(3, 13);
      used.insert(num);
      table[r] = Rational(num, 16);
    }
  }
  return scm;
}

/// All interventional regimes, exact probabilities as weights.
inline ObservationSet exact_interventional_obs(const SyntheticScm& scm) {
  int n = scm.structure.node_count;
  std::vector<Observation> obs;
  for (int k = 1; k <= n; ++k) {
    for (int forced = 0; forced < 2; ++forced) {
      std::size_t total = 1ULL << n;
      for (std::size_t code = 0; code < total; ++code) {
        std::vector<bool> s(static_cast<std::size_t>(n) + 1, false);
        for (int j = 1; j <= n; ++j) s[static_cast<std::size_t>(j)] = (code >> (j - 1)) & 1;
        if (s[static_cast<std::size_t>(k)] != static_cast<bool>(forced)) continue;
        Rational p(1);
        for (int j = 1; j <= n; ++j) {
          if (j == k) continue;  // intervened factor dropped
          std::vector<bool> r;
          for (int q : scm.structure.parents_of(j)) r.push_back(s[static_cast<std::size_t>(q)]);
          Rational p1 = scm.rows.at(j).at(r);
          p *= s[static_cast<std::size_t>(j)] ? p1 : Rational(1) - p1;
          if (p.is_zero()) break;
        }
        if (p.is_zero()) continue;
        Observation o;
        o.mutated = k;
        o.ordinal = forced;
        o.test_id = "t0";
        o.test_index = 0;
        o.weight = p;
        o.bits.assign(static_cast<std::size_t>(n) + 1, 0);
        for (int j = 1; j <= n; ++j)
          o.bits[static_cast<std::size_t>(j - 1)] = s[static_cast<std::size_t>(j)] ? 1 : 0;
        obs.push_back(std::move(o));
      }
    }
  }
  return ObservationSet(n, std::move(obs));
}

inline Prob marginal_over_exclusion(const ObservationSet& o, int j) {
  return cond_prob_joint(o, {{j, true}}, {});
}

/// Independent Def.-5 oracle: smallest subset T of IPA_j (by size, then
/// lexicographic) with P(S_j | t) = P(S_j | ipa_j) at every observed
/// realization; undefined conditionals are skipped on both sides.
inline std::set<int> brute_force_markovian(const ObservationSet& o, const std::vector<int>& ipa,
                                           int j) {
  auto realizations = o.realizations_of(ipa);
  std::size_t m = ipa.size();
  std::vector<std::vector<int>> subsets_by_size(m + 1);
  for (std::size_t code = 0; code < (1ULL << m); ++code) {
    int sz = 0;
    for (std::size_t b = 0; b < m; ++b)
      if ((code >> b) & 1) ++sz;
    subsets_by_size[static_cast<std::size_t>(sz)].push_back(static_cast<int>(code));
  }
  for (std::size_t sz = 0; sz <= m; ++sz) {
    std::sort(subsets_by_size[sz].begin(), subsets_by_size[sz].end());
    for (int code : subsets_by_size[sz]) {
      bool ok = true;
      for (const auto& r : realizations) {
        Assignment full, sub;
        for (std::size_t b = 0; b < m; ++b) {
          full[ipa[b]] = r[b];
          if ((static_cast<std::size_t>(code) >> b) & 1) sub[ipa[b]] = r[b];
        }
        Prob pf = full.empty() ? Prob::undefined() : cond_prob_change(o, j, full);
        Prob ps = sub.empty() ? marginal_over_exclusion(o, j) : cond_prob_change(o, j, sub);
        if (!pf.defined || !ps.defined) continue;
        if (!Rational::approx_equal(pf.value, ps.value)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        std::set<int> out;
        for (std::size_t b = 0; b < m; ++b)
          if ((static_cast<std::size_t>(code) >> b) & 1) out.insert(ipa[b]);
        return out;
      }
    }
  }
  return {ipa.begin(), ipa.end()};
}

}  // namespace cpda::testsupport
