#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cpda/cdfl.hpp"
#include "cpda/cpdm.hpp"
#include "cpda/discovery.hpp"
#include "cpda/effects.hpp"
#include "cpda/minilang.hpp"
#include "cpda/observations.hpp"
#include "cpda/rng.hpp"
#include "cpda/runtime.hpp"
#include "cpda/suite.hpp"

#include "json.hpp"

namespace cpda {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& cause)
      : std::runtime_error("[" + stage + "] " + cause), stage_name(stage) {}
  std::string stage_name;
};

struct AnalysisOptions {
  int nmpn = 20;
  std::uint64_t seed = 1;
  std::int64_t step_budget = 1000000;
  int jobs = 1;
  std::optional<int> out_node;  // S_out override for localization
  std::string suite_id;

  void validate() const {
    if (nmpn < 1) throw ConfigError("nmpn must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (step_budget < 1) throw ConfigError("step budget must be >= 1");
  }
};

struct Diagnostics {
  DiscoveryDiagnostics discovery;
  int timeout_runs_dropped = 0;
  int error_runs_kept = 0;
  std::vector<int> unsampled_nodes;  // no resolvable domain or no observed values
  int dd_flagged_edges = 0;
  int cdfl_raw_ties = -1;  // -1 until localization runs
  int undefined_cd_scores = 0;
};

struct Analysis {
  Program program;
  std::vector<Node> nodes;
  TestSuite suite;
  std::vector<RunResult> oracle_runs;      // one per test, with traces
  std::vector<bool> verdict_pass;          // resolved verdicts
  std::vector<int> sample_counts;          // per node (1-based, 0 = unsampled)
  ObservationSet observations;             // all-inputs scope
  std::vector<ObservationSet> per_input;   // one per test, suite order
  CausalStructure structure{0};
  std::vector<DependenceScore> dd;         // one per structure edge
  Cpdm model;
  Diagnostics diagnostics;

  bool covered(int test, int node) const {
    return oracle_runs[static_cast<std::size_t>(test)].covered(node);
  }
};

// ---------------------------------------------------------------------------
// Verdicts

/// Explicit verdict wins; otherwise compare the run output against the
/// expected output; tests with neither count as passing.
inline bool resolve_verdict(const TestInput& t, const RunResult& oracle) {
  if (t.pass) return *t.pass;
  if (t.expected_output) return trajectory_equal(oracle.output, *t.expected_output);
  return true;
}

// ---------------------------------------------------------------------------
// Observation generation

namespace detail {

struct MutantJob {
  int node = 0;
  int ordinal = 0;
  MutationSpec spec;
};

inline Observation make_observation(const MutantJob& job, int test_index,
                                    const std::string& test_id, const Rational& weight,
                                    std::vector<std::uint8_t> bits) {
  Observation o;
  o.mutated = job.node;
  o.ordinal = job.ordinal;
  o.test_id = test_id;
  o.test_index = test_index;
  o.weight = weight;
  o.bits = std::move(bits);
  return o;
}

}  // namespace detail

/// Runs the full observation matrix: every sampled mutation value of every
/// node against every test. Runs whose mutated node never executes under a
/// test are provably identical to the oracle and are recorded as all-zero
/// change vectors without executing. Timeout runs are dropped (counted in
/// diagnostics); runtime-error runs are kept with partial trajectories.
inline void generate_observations(Analysis& a, const AnalysisOptions& opt) {
  int n = static_cast<int>(a.nodes.size());
  Interpreter interp(a.program, n, opt.step_budget);

  // pooled oracle values per node, suite order
  std::vector<std::vector<Value>> pooled(static_cast<std::size_t>(n) + 1);
  for (const auto& run : a.oracle_runs)
    for (int j = 1; j <= n; ++j)
      for (const auto& v : run.trajectories[static_cast<std::size_t>(j)])
        pooled[static_cast<std::size_t>(j)].push_back(v);

  std::vector<detail::MutantJob> jobs;
  a.sample_counts.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int j = 1; j <= n; ++j) {
    const Node& node = a.nodes[static_cast<std::size_t>(j - 1)];
    auto domain = resolve_domain(a.program, node, pooled[static_cast<std::size_t>(j)]);
    bool needs_values = domain && domain->kind != DomainSpec::Kind::Bool &&
                        domain->kind != DomainSpec::Kind::BoundedInt;
    if (!domain || (needs_values && pooled[static_cast<std::size_t>(j)].empty())) {
      a.diagnostics.unsampled_nodes.push_back(j);
      continue;
    }
    auto specs = sample_mutations(node, *domain, pooled[static_cast<std::size_t>(j)], opt.nmpn,
                                  opt.seed);
    a.sample_counts[static_cast<std::size_t>(j)] = static_cast<int>(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k)
      jobs.push_back({j, static_cast<int>(k), specs[k]});
  }

  int tests = static_cast<int>(a.suite.tests.size());
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    struct Out {
      std::vector<Observation> obs;
      int timeouts = 0;
      int errors = 0;
    };
    Out out;
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& job = jobs[k];
      Rational weight(1, a.sample_counts[static_cast<std::size_t>(job.node)]);
      for (int t = 0; t < tests; ++t) {
        const auto& oracle = a.oracle_runs[static_cast<std::size_t>(t)];
        const auto& test = a.suite.tests[static_cast<std::size_t>(t)];
        if (!oracle.covered(job.node)) {
          out.obs.push_back(detail::make_observation(
              job, t, test.id, weight,
              std::vector<std::uint8_t>(static_cast<std::size_t>(n) + 1, 0)));
          continue;
        }
        RunResult r = interp.run(test, &job.spec);
        if (r.status == RunStatus::Timeout) {
          ++out.timeouts;
          continue;
        }
        if (r.status == RunStatus::RuntimeError) ++out.errors;
        out.obs.push_back(
            detail::make_observation(job, t, test.id, weight, diff_trajectories(oracle, r, n)));
      }
    }
    return out;
  };

  std::vector<Observation> all;
  if (opt.jobs <= 1 || jobs.size() < 2) {
    auto out = run_range(0, jobs.size());
    all = std::move(out.obs);
    a.diagnostics.timeout_runs_dropped += out.timeouts;
    a.diagnostics.error_runs_kept += out.errors;
  } else {
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(opt.jobs), jobs.size());
    std::size_t chunk = (jobs.size() + workers - 1) / workers;
    std::vector<std::future<decltype(run_range(0, 0))>> futs;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t lo = w * chunk;
      std::size_t hi = std::min(jobs.size(), lo + chunk);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, run_range, lo, hi));
    }
    for (auto& f : futs) {
      auto out = f.get();
      all.insert(all.end(), std::make_move_iterator(out.obs.begin()),
                 std::make_move_iterator(out.obs.end()));
      a.diagnostics.timeout_runs_dropped += out.timeouts;
      a.diagnostics.error_runs_kept += out.errors;
    }
  }
  a.observations = ObservationSet(n, std::move(all));
}

inline void split_per_input(Analysis& a) {
  int n = static_cast<int>(a.nodes.size());
  std::vector<std::vector<Observation>> buckets(a.suite.tests.size());
  for (const auto& o : a.observations.observations())
    buckets[static_cast<std::size_t>(o.test_index)].push_back(o);
  a.per_input.clear();
  for (std::size_t t = 0; t < buckets.size(); ++t) {
    a.per_input.emplace_back(n, std::move(buckets[t]),
                             "per-input(" + a.suite.tests[t].id + ")");
  }
}

// ---------------------------------------------------------------------------
// Full analysis

inline Analysis analyze_text(const std::string& program_text, const TestSuite& suite,
                             const AnalysisOptions& opt,
                             const ObservationSet* cached_observations = nullptr) {
  opt.validate();
  Analysis a;
  try {
    a.program = parse(program_text);
    a.nodes = index_nodes(a.program);
  } catch (const std::exception& e) {
    throw StageError("parse", e.what());
  }
  a.suite = suite;
  if (a.suite.tests.empty()) throw StageError("suite", "test suite is empty");

  int n = static_cast<int>(a.nodes.size());
  try {
    Interpreter interp(a.program, n, opt.step_budget);
    for (const auto& t : a.suite.tests)
      a.oracle_runs.push_back(interp.run(t, nullptr, /*record_trace=*/true));
    for (std::size_t t = 0; t < a.suite.tests.size(); ++t)
      a.verdict_pass.push_back(resolve_verdict(a.suite.tests[t], a.oracle_runs[t]));
  } catch (const std::exception& e) {
    throw StageError("oracle", e.what());
  }

  try {
    if (cached_observations) {
      a.observations = *cached_observations;
      a.sample_counts.assign(static_cast<std::size_t>(n) + 1, 0);
      for (const auto& o : a.observations.observations()) {
        auto& c = a.sample_counts[static_cast<std::size_t>(o.mutated)];
        c = std::max(c, o.ordinal + 1);
      }
    } else {
      generate_observations(a, opt);
    }
    split_per_input(a);
  } catch (const std::exception& e) {
    throw StageError("observations", e.what());
  }

  try {
    a.structure = build_structure(a.program, a.nodes, a.observations, a.oracle_runs,
                                  &a.diagnostics.discovery);
  } catch (const std::exception& e) {
    throw StageError("discovery", e.what());
  }

  try {
    std::vector<CausalModel> models;
    models.reserve(a.per_input.size());
    for (const auto& ot : a.per_input) models.emplace_back(ot, a.structure);
    for (auto [i, j] : a.structure.edges()) {
      std::vector<const ObservationSet*> covering;
      std::vector<const CausalModel*> covering_models;
      for (std::size_t t = 0; t < a.per_input.size(); ++t) {
        if (a.covered(static_cast<int>(t), j)) {
          covering.push_back(&a.per_input[t]);
          covering_models.push_back(&models[t]);
        }
      }
      DependenceScore d = direct_dependence(covering, covering_models, a.structure, i, j);
      if (d.flagged) ++a.diagnostics.dd_flagged_edges;
      a.dd.push_back(d);
    }
    Provenance prov{opt.suite_id.empty() ? a.suite.name : opt.suite_id, opt.nmpn, opt.seed};
    a.model = build_cpdm(a.structure, a.dd, a.nodes, prov);
  } catch (const std::exception& e) {
    throw StageError("effects", e.what());
  }
  return a;
}

// ---------------------------------------------------------------------------
// Localization

struct LocalizationResult {
  bool skipped = false;  // no failing test
  std::string notice;
  int out = kOutputChannel;
  SuspiciousnessRanking cdfl;
  SuspiciousnessRanking sbfl;
  std::vector<int> fail_tests, pass_tests;
};

/// Markovian parents for the synthetic output channel: candidates are all
/// nodes whose mutation changed the output anywhere; the distance order uses
/// last execution position (the output is the program boundary).
inline std::vector<int> output_channel_parents(const Analysis& a) {
  std::set<int> ipa;
  for (const auto& o : a.observations.observations())
    if (o.mutated != 0 && o.bit(kOutputChannel, a.observations.node_count())) ipa.insert(o.mutated);

  int n = static_cast<int>(a.nodes.size());
  std::vector<std::int64_t> last(static_cast<std::size_t>(n) + 1, -1);
  std::int64_t pos = 0;
  for (const auto& run : a.oracle_runs)
    for (int hit : run.trace) last[static_cast<std::size_t>(hit)] = pos++;
  std::vector<int> order(ipa.begin(), ipa.end());
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (last[static_cast<std::size_t>(x)] != last[static_cast<std::size_t>(y)])
      return last[static_cast<std::size_t>(x)] < last[static_cast<std::size_t>(y)];
    return x < y;
  });
  std::vector<int> all_nodes(order);
  std::set<int> pa = markovian_parents(all_nodes, DistanceOrder::explicit_order(order),
                                       a.observations, kOutputChannel);
  return {pa.begin(), pa.end()};
}

inline LocalizationResult localize(const Analysis& a, std::optional<int> out_override) {
  LocalizationResult r;
  for (std::size_t t = 0; t < a.verdict_pass.size(); ++t) {
    if (a.verdict_pass[t]) r.pass_tests.push_back(static_cast<int>(t));
    else r.fail_tests.push_back(static_cast<int>(t));
  }
  if (r.fail_tests.empty()) {
    r.skipped = true;
    r.notice = "no failing test case exists; localization skipped";
    return r;
  }
  r.out = select_output_node(a.program, a.nodes, out_override);

  std::vector<int> sink;
  if (r.out == kOutputChannel) sink = output_channel_parents(a);
  std::vector<CausalModel> models;
  models.reserve(a.per_input.size());
  for (const auto& ot : a.per_input) models.emplace_back(ot, a.structure, sink);
  std::vector<const CausalModel*> model_ptrs;
  for (const auto& m : models) model_ptrs.push_back(&m);

  r.cdfl = cdfl_scores(model_ptrs, r.fail_tests, r.pass_tests, r.out, a.nodes);

  std::vector<std::vector<bool>> coverage(a.suite.tests.size(),
                                          std::vector<bool>(a.nodes.size() + 1, false));
  for (std::size_t t = 0; t < a.suite.tests.size(); ++t)
    for (int j = 1; j <= static_cast<int>(a.nodes.size()); ++j)
      coverage[t][static_cast<std::size_t>(j)] = a.covered(static_cast<int>(t), j);
  r.sbfl = sbfl_ochiai(a.nodes, coverage, a.verdict_pass, r.out);
  return r;
}

// ---------------------------------------------------------------------------
// Artifact IO

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string observations_meta_jsonl(const Analysis& a) {
  std::ostringstream os;
  nlohmann::ordered_json head;
  head["node_count"] = static_cast<int>(a.nodes.size());
  head["output_channel"] = "last bit";
  head["tests"] = nlohmann::ordered_json::array();
  for (const auto& t : a.suite.tests) head["tests"].push_back(t.id);
  os << head.dump() << "\n";
  for (const auto& n : a.nodes) {
    nlohmann::ordered_json j;
    j["index"] = n.index;
    j["kind"] = node_kind_name(n.kind);
    j["variable"] = n.variable;
    j["function"] = n.function;
    j["line"] = n.pos.line;
    j["col"] = n.pos.col;
    j["samples"] = a.sample_counts[static_cast<std::size_t>(n.index)];
    os << j.dump() << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json diagnostics_to_json(const Diagnostics& d) {
  nlohmann::ordered_json j;
  j["timeout_runs_dropped"] = d.timeout_runs_dropped;
  j["error_runs_kept"] = d.error_runs_kept;
  j["unsampled_nodes"] = d.unsampled_nodes;
  j["dd_flagged_edges"] = d.dd_flagged_edges;
  j["undefined_cd_scores"] = d.undefined_cd_scores;
  j["cdfl_raw_ties"] = d.cdfl_raw_ties;
  auto pairs = [](const std::vector<std::pair<int, int>>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (auto [i, k] : v) arr.push_back({i, k});
    return arr;
  };
  j["mutual_edge_removals"] = pairs(d.discovery.mutual_removals);
  j["cycle_fallback_removals"] = pairs(d.discovery.cycle_removals);
  j["uncovered_nodes"] = d.discovery.uncovered_nodes;
  return j;
}

/// Cache key covers everything that determines the observation matrix.
inline std::string observation_cache_key(const std::string& program_text,
                                         const TestSuite& suite, const AnalysisOptions& opt) {
  std::uint64_t h = fnv1a(program_text);
  h = fnv1a(serialize_suite(suite), h);
  h = fnv1a(std::to_string(opt.nmpn) + ":" + std::to_string(opt.seed) + ":" +
                std::to_string(opt.step_budget),
            h);
  return hash_hex(h);
}

struct ArtifactPaths {
  std::filesystem::path dir;
  std::filesystem::path observations_csv() const { return dir / "observations.csv"; }
  std::filesystem::path observations_meta() const { return dir / "observations.meta.jsonl"; }
  std::filesystem::path structure_edges() const { return dir / "structure.edges"; }
  std::filesystem::path cpdm_json() const { return dir / "cpdm.json"; }
  std::filesystem::path scores_csv() const { return dir / "scores.csv"; }
  std::filesystem::path diagnostics_json() const { return dir / "diagnostics.json"; }
  std::filesystem::path cache_stamp() const { return dir / "cache.key"; }
};

inline void write_artifacts(const Analysis& a, const ArtifactPaths& paths,
                            const std::string& cache_key) {
  std::filesystem::create_directories(paths.dir);
  detail::write_file(paths.observations_csv(), observations_to_csv(a.observations));
  detail::write_file(paths.observations_meta(), observations_meta_jsonl(a));
  detail::write_file(paths.structure_edges(), structure_to_edgelist(a.structure));
  detail::write_file(paths.cpdm_json(), cpdm_to_json(a.model).dump(2) + "\n");
  detail::write_file(paths.scores_csv(), scores_to_csv(a.dd));
  detail::write_file(paths.diagnostics_json(), diagnostics_to_json(a.diagnostics).dump(2) + "\n");
  detail::write_file(paths.cache_stamp(), cache_key + "\n");
}

/// Loads the observation matrix from a previous run when the cache key
/// matches; analysis stages downstream of the matrix are recomputed.
inline std::optional<ObservationSet> try_load_cached(const ArtifactPaths& paths,
                                                     const std::string& cache_key,
                                                     const std::vector<std::string>& test_order) {
  namespace fs = std::filesystem;
  if (!fs::exists(paths.cache_stamp()) || !fs::exists(paths.observations_csv()))
    return std::nullopt;
  std::string stamped = detail::read_file(paths.cache_stamp());
  if (!stamped.empty() && stamped.back() == '\n') stamped.pop_back();
  if (stamped != cache_key) return std::nullopt;
  return observations_from_csv(detail::read_file(paths.observations_csv()), test_order);
}

// ---------------------------------------------------------------------------
// Corpus manifest

struct CorpusEntry {
  std::string name;
  std::string program_path;
  std::string suite_path;
  FaultSpec fault;
};

inline std::vector<CorpusEntry> load_manifest(const std::filesystem::path& manifest_path) {
  auto j = nlohmann::json::parse(detail::read_file(manifest_path));
  std::vector<CorpusEntry> out;
  auto base = manifest_path.parent_path();
  for (const auto& e : j.at("entries")) {
    CorpusEntry c;
    c.name = e.at("name").get<std::string>();
    c.program_path = (base / e.at("program").get<std::string>()).string();
    c.suite_path = (base / e.at("suite").get<std::string>()).string();
    for (int nidx : e.at("fault_nodes")) c.fault.nodes.push_back(nidx);
    if (e.contains("description")) c.fault.description = e.at("description").get<std::string>();
    if (c.fault.nodes.empty())
      throw std::runtime_error("corpus entry '" + c.name + "' has no fault nodes");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cpda
