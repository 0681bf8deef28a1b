#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpda/rational.hpp"
#include "cpda/runtime.hpp"

namespace cpda {

/// Target id of the synthetic output channel (printed values plus the entry
/// function's returned value). Real nodes are 1-based.
constexpr int kOutputChannel = 0;

/// One (mutated node, mutation value, test input) run reduced to a boolean
/// change vector. weight is the reciprocal of the number of mutation values
/// sampled for the mutated node. mutated == 0 marks synthetic observation
/// tables that never get the self-mutation exclusion.
struct Observation {
  int mutated = 0;
  int ordinal = 0;
  std::string test_id;
  int test_index = 0;
  Rational weight{1};
  std::vector<std::uint8_t> bits;  // nodes 1..n, then the output channel

  bool bit(int id, int node_count) const {
    return bits[static_cast<std::size_t>(id == kOutputChannel ? node_count : id - 1)] != 0;
  }
};

/// Behavior change per Def. 1: trajectories differ in length or in any
/// position; the last slot is the output-changed bit.
inline std::vector<std::uint8_t> diff_trajectories(const RunResult& oracle,
                                                   const RunResult& mutant, int node_count) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(node_count) + 1, 0);
  for (int i = 1; i <= node_count; ++i) {
    const auto& a = oracle.trajectories[static_cast<std::size_t>(i)];
    const auto& b = mutant.trajectories[static_cast<std::size_t>(i)];
    bits[static_cast<std::size_t>(i - 1)] = trajectory_equal(a, b) ? 0 : 1;
  }
  bits[static_cast<std::size_t>(node_count)] =
      trajectory_equal(oracle.output, mutant.output) ? 0 : 1;
  return bits;
}

/// Partial assignment over change variables, keyed by target id.
using Assignment = std::map<int, bool>;

/// Immutable after construction; all queries are const. Masses are computed
/// from per-target bit columns grouped by weight class, so a query costs a
/// few bitwise passes instead of a scan of every observation record.
class ObservationSet {
 public:
  ObservationSet() = default;

  ObservationSet(int node_count, std::vector<Observation> observations,
                 std::string scope = "all-inputs")
      : node_count_(node_count), obs_(std::move(observations)), scope_(std::move(scope)) {
    build_index();
  }

  int node_count() const { return node_count_; }
  const std::vector<Observation>& observations() const { return obs_; }
  const std::string& scope() const { return scope_; }
  bool empty() const { return obs_.empty(); }
  Rational total_mass() const { return total_mass_; }

  /// Weighted mass of observations satisfying `where`, skipping observations
  /// whose mutated node is in `exclude`.
  Rational mass(const Assignment& where, const std::vector<int>& exclude = {}) const {
    std::vector<std::uint64_t> sel(blocks_, ~0ULL);
    trim(sel);
    for (int id : exclude) {
      auto it = mutated_mask_.find(id);
      if (it == mutated_mask_.end()) continue;
      for (std::size_t b = 0; b < blocks_; ++b) sel[b] &= ~it->second[b];
    }
    for (const auto& [id, v] : where) {
      const auto& col = column(id);
      if (v) for (std::size_t b = 0; b < blocks_; ++b) sel[b] &= col[b];
      else for (std::size_t b = 0; b < blocks_; ++b) sel[b] &= ~col[b];
    }
    trim(sel);
    Rational m{0};
    for (const auto& [w, cls] : weight_class_) {
      std::int64_t count = 0;
      for (std::size_t b = 0; b < blocks_; ++b)
        count += std::popcount(sel[b] & cls[b]);
      if (count > 0) m += w * Rational(count);
    }
    return m;
  }

  /// Distinct realizations over `ids` present with positive mass, sorted.
  std::vector<std::vector<bool>> realizations_of(const std::vector<int>& ids) const {
    std::map<std::vector<bool>, bool> seen;
    for (const auto& o : obs_) {
      std::vector<bool> r;
      r.reserve(ids.size());
      for (int id : ids) r.push_back(o.bit(id, node_count_));
      seen[r] = true;
    }
    std::vector<std::vector<bool>> out;
    for (auto& [r, _] : seen) out.push_back(r);
    return out;
  }

  /// Per-input partition, in suite order. Weights carry over unchanged.
  std::vector<ObservationSet> split_per_input() const {
    std::map<int, std::vector<Observation>> by_test;
    for (const auto& o : obs_) by_test[o.test_index].push_back(o);
    std::vector<ObservationSet> out;
    for (auto& [idx, v] : by_test) {
      std::string id = v.front().test_id;
      out.emplace_back(node_count_, std::move(v), "per-input(" + id + ")");
    }
    return out;
  }

 private:
  void build_index() {
    blocks_ = (obs_.size() + 63) / 64;
    columns_.assign(static_cast<std::size_t>(node_count_) + 1,
                    std::vector<std::uint64_t>(blocks_, 0));
    total_mass_ = Rational(0);
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      const Observation& o = obs_[i];
      if (static_cast<int>(o.bits.size()) != node_count_ + 1)
        throw std::invalid_argument("observation bit vector has wrong length");
      if (!(o.weight > Rational(0)) || o.weight > Rational(1))
        throw std::invalid_argument("observation weight must be in (0, 1]");
      for (int id = 0; id <= node_count_; ++id) {
        std::size_t slot = static_cast<std::size_t>(id == kOutputChannel ? node_count_ : id - 1);
        if (o.bit(id, node_count_)) columns_[slot][i / 64] |= 1ULL << (i % 64);
      }
      auto& mm = mutated_mask_[o.mutated];
      if (mm.empty()) mm.assign(blocks_, 0);
      mm[i / 64] |= 1ULL << (i % 64);
      auto& wc = weight_class_[o.weight];
      if (wc.empty()) wc.assign(blocks_, 0);
      wc[i / 64] |= 1ULL << (i % 64);
      total_mass_ += o.weight;
    }
  }

  const std::vector<std::uint64_t>& column(int id) const {
    return columns_[static_cast<std::size_t>(id == kOutputChannel ? node_count_ : id - 1)];
  }

  void trim(std::vector<std::uint64_t>& sel) const {
    if (blocks_ == 0) return;
    std::size_t rem = obs_.size() % 64;
    if (rem) sel[blocks_ - 1] &= (1ULL << rem) - 1;
  }

  struct RationalLess {
    bool operator()(const Rational& a, const Rational& b) const { return a < b; }
  };

  int node_count_ = 0;
  std::vector<Observation> obs_;
  std::string scope_ = "all-inputs";
  std::size_t blocks_ = 0;
  std::vector<std::vector<std::uint64_t>> columns_;  // nodes 1..n then output
  std::map<int, std::vector<std::uint64_t>> mutated_mask_;
  std::map<Rational, std::vector<std::uint64_t>, RationalLess> weight_class_;
  Rational total_mass_{0};
};

// ---------------------------------------------------------------------------
// Def. 2 / Def. 3 probabilities

/// P_O(S_i = 1): weighted fraction of observations whose bit for `id` is set.
inline Rational prob_change(const ObservationSet& o, int id) {
  if (o.empty()) throw std::invalid_argument("prob_change on an empty observation set");
  return o.mass({{id, true}}) / o.total_mass();
}

/// Conditional change probability over O* (observations that do not mutate
/// any queried target). Zero conditioning mass yields the undefined signal.
inline Prob cond_prob_joint(const ObservationSet& o, const Assignment& targets,
                            const Assignment& condition) {
  std::vector<int> exclude;
  for (const auto& [id, _] : targets)
    if (id != kOutputChannel) exclude.push_back(id);
  Rational den = o.mass(condition, exclude);
  if (den.is_zero()) return Prob::undefined();
  Assignment both = condition;
  for (const auto& [id, v] : targets) both[id] = v;
  return Prob::of(o.mass(both, exclude) / den);
}

/// P_O(S_j = 1 | condition) per Def. 3.
inline Prob cond_prob_change(const ObservationSet& o, int j, const Assignment& condition) {
  if (condition.empty())
    throw std::invalid_argument("cond_prob_change needs a nonempty condition");
  return cond_prob_joint(o, {{j, true}}, condition);
}

/// Joint marginal per Def. 2 (no exclusion).
inline Prob marginal_prob(const ObservationSet& o, const Assignment& assignment) {
  if (o.empty()) return Prob::undefined();
  return Prob::of(o.mass(assignment) / o.total_mass());
}

// ---------------------------------------------------------------------------
// Persistence: CSV matrix + JSON-lines metadata (bit-exact round trip)

inline std::string observations_to_csv(const ObservationSet& o) {
  std::ostringstream os;
  os << "mutated,ordinal,test,weight,bits\n";
  for (const auto& obs : o.observations()) {
    os << obs.mutated << ',' << obs.ordinal << ',' << obs.test_id << ',' << obs.weight.str()
       << ',';
    for (std::uint8_t b : obs.bits) os << (b ? '1' : '0');
    os << '\n';
  }
  return os.str();
}

inline ObservationSet observations_from_csv(const std::string& csv,
                                            const std::vector<std::string>& test_order = {}) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty observations CSV");
  std::vector<Observation> obs;
  int node_count = -1;
  std::map<std::string, int> test_index;
  for (std::size_t i = 0; i < test_order.size(); ++i)
    test_index[test_order[i]] = static_cast<int>(i);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
      auto comma = line.find(',', start);
      if (comma == std::string::npos) throw std::runtime_error("malformed observations CSV row");
      f.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    f.push_back(line.substr(start));
    Observation o;
    o.mutated = std::stoi(f[0]);
    o.ordinal = std::stoi(f[1]);
    o.test_id = f[2];
    o.weight = Rational::parse(f[3]);
    for (char c : f[4]) o.bits.push_back(c == '1' ? 1 : 0);
    if (node_count < 0) node_count = static_cast<int>(o.bits.size()) - 1;
    auto it = test_index.find(o.test_id);
    if (it == test_index.end()) {
      int idx = static_cast<int>(test_index.size());
      it = test_index.emplace(o.test_id, idx).first;
    }
    o.test_index = it->second;
    obs.push_back(std::move(o));
  }
  if (node_count < 0) node_count = 0;
  return ObservationSet(node_count, std::move(obs));
}

}  // namespace cpda
