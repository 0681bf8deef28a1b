// Command-line front end: analyze / export / localize / corpus.
// Exit codes: 0 ok, 1 usage error, 2 analysis error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cpda/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cpda;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string program_path;
  std::string suite_path;
  std::string output_dir = "out";
  int nmpn = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string band;
  std::string out_node;
  std::string diff_path;
  std::string fault_nodes;
  bool ci = false;
};

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    auto t = line;
    auto h = t.find('#');
    if (h != std::string::npos) t = t.substr(0, h);
    auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

// config fills every option the command line left untouched; flags win
void merge_config(CLI::App* cmd, CommonOpts& o) {
  if (o.config_path.empty()) return;
  auto kv = load_config_file(o.config_path);
  auto fill = [&](const char* flag, auto& target) {
    auto it = kv.find(flag);
    if (it == kv.end()) return;
    auto* opt = cmd->get_option_no_throw(std::string("--") + flag);
    if (opt && opt->count() > 0) return;
    std::istringstream ss(it->second);
    ss >> target;
  };
  fill("program", o.program_path);
  fill("suite", o.suite_path);
  fill("output-dir", o.output_dir);
  fill("nmpn", o.nmpn);
  fill("seed", o.seed);
  fill("jobs", o.jobs);
  fill("band", o.band);
  fill("out-node", o.out_node);
  if (o.ci) {
    auto* seed_opt = cmd->get_option_no_throw("--seed");
    bool seed_given = (seed_opt && seed_opt->count() > 0) || kv.count("seed");
    if (!seed_given) throw CLI::ValidationError("--ci requires an explicit --seed");
  }
}

std::pair<double, double> parse_band(const std::string& band) {
  auto colon = band.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--band expects LO:HI");
  try {
    double lo = std::stod(band.substr(0, colon));
    double hi = std::stod(band.substr(colon + 1));
    if (!(lo < hi)) throw CLI::ValidationError("--band needs LO < HI");
    return {lo, hi};
  } catch (const CLI::Error&) {
    throw;
  } catch (const std::exception&) {
    throw CLI::ValidationError("--band expects numeric LO:HI");
  }
}

std::optional<int> parse_out_node(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "output") return kOutputChannel;
  return std::stoi(s);
}

AnalysisOptions to_options(const CommonOpts& o) {
  AnalysisOptions opt;
  opt.nmpn = o.nmpn;
  opt.seed = o.seed;
  opt.jobs = o.jobs;
  opt.out_node = parse_out_node(o.out_node);
  return opt;
}

std::string pipeline_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("io", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Analysis run_analyze(const CommonOpts& o, bool quiet = false) {
  std::string program_text = pipeline_read(o.program_path);
  TestSuite suite = load_suite(o.suite_path);
  AnalysisOptions opt = to_options(o);
  opt.validate();

  ArtifactPaths paths{fs::path(o.output_dir)};
  std::string key = observation_cache_key(program_text, suite, opt);
  std::vector<std::string> test_order;
  for (const auto& t : suite.tests) test_order.push_back(t.id);
  auto cached = try_load_cached(paths, key, test_order);
  if (cached && !quiet) std::cout << "cache hit: mutant runs skipped\n";

  Analysis a = analyze_text(program_text, suite, opt, cached ? &*cached : nullptr);
  write_artifacts(a, paths, key);
  if (!quiet) {
    std::cout << "nodes: " << a.nodes.size() << "\n"
              << "observations: " << a.observations.observations().size() << "\n"
              << "edges: " << a.structure.edges().size() << "\n"
              << "artifacts: " << o.output_dir << "\n";
  }
  return a;
}

int cmd_analyze(const CommonOpts& o) {
  run_analyze(o);
  return 0;
}

int cmd_export(const CommonOpts& o, const std::string& model_path, const std::string& out_path) {
  Cpdm m = cpdm_from_json(nlohmann::json::parse(pipeline_read(model_path)));
  double lo = -1e9, hi = 1e9;
  if (!o.band.empty()) std::tie(lo, hi) = parse_band(o.band);
  std::string dot;
  if (!o.diff_path.empty()) {
    Cpdm b = cpdm_from_json(nlohmann::json::parse(pipeline_read(o.diff_path)));
    Cpdm fa = filter_band(m, lo, hi);
    Cpdm fb = filter_band(b, lo, hi);
    dot = export_dot(fa, diff_models(fa, fb));
  } else {
    dot = export_dot(filter_band(m, lo, hi));
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << dot;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw StageError("export", "cannot write " + out_path);
    out << dot;
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_localize(const CommonOpts& o) {
  Analysis a = run_analyze(o, /*quiet=*/true);
  LocalizationResult loc = localize(a, parse_out_node(o.out_node));
  if (loc.skipped) {
    std::cout << "notice: " << loc.notice << "\n";
    return 0;
  }
  a.diagnostics.cdfl_raw_ties = loc.cdfl.raw_tie_count;
  ArtifactPaths paths{fs::path(o.output_dir)};
  detail::write_file(paths.dir / "cdfl_ranking.csv", ranking_to_csv(loc.cdfl));
  detail::write_file(paths.dir / "sbfl_ranking.csv", ranking_to_csv(loc.sbfl));
  detail::write_file(paths.diagnostics_json(),
                     diagnostics_to_json(a.diagnostics).dump(2) + "\n");
  std::cout << "S_out: "
            << (loc.out == kOutputChannel ? std::string("output-channel")
                                          : "node " + std::to_string(loc.out))
            << "\nfailing: " << loc.fail_tests.size() << ", passing: " << loc.pass_tests.size()
            << "\nCDFL raw ties: " << loc.cdfl.raw_tie_count << "\n";
  std::cout << "top CDFL entries:\n";
  for (std::size_t i = 0; i < loc.cdfl.entries.size() && i < 5; ++i) {
    const auto& e = loc.cdfl.entries[i];
    std::cout << "  " << (i + 1) << ". node " << e.id << " (line " << e.line
              << ") susp=" << format_double(e.score) << "\n";
  }
  if (!o.fault_nodes.empty()) {
    std::vector<int> fault;
    std::istringstream ss(o.fault_nodes);
    std::string tok;
    while (std::getline(ss, tok, ',')) fault.push_back(std::stoi(tok));
    std::vector<int> fault_lines;
    for (int nidx : fault)
      fault_lines.push_back(a.nodes[static_cast<std::size_t>(nidx - 1)].pos.line);
    std::cout << "tiebreaker table (rank of fault):\n";
    std::cout << "  cdfl avg: " << apply_tiebreaker(loc.cdfl, TiePolicy::Avg, fault) << "\n";
    for (auto p : {TiePolicy::Avg, TiePolicy::Min, TiePolicy::Max, TiePolicy::LineOrder})
      std::cout << "  sbfl " << tie_policy_name(p) << ": "
                << apply_tiebreaker(loc.sbfl, p, fault_lines) << "\n";
  }
  return 0;
}

int cmd_corpus(const CommonOpts& o, const std::string& manifest_path) {
  auto entries = load_manifest(manifest_path);
  std::vector<double> cdfl_ranks;
  std::map<TiePolicy, std::vector<double>> sbfl_ranks;
  int total_ties = 0;
  std::ostringstream csv;
  csv << "name,cdfl_rank,sbfl_avg,sbfl_min,sbfl_max,sbfl_lineorder,cdfl_raw_ties\n";
  for (const auto& entry : entries) {
    CommonOpts eo = o;
    eo.program_path = entry.program_path;
    eo.suite_path = entry.suite_path;
    eo.output_dir = (fs::path(o.output_dir) / entry.name).string();
    Analysis a = run_analyze(eo, /*quiet=*/true);
    LocalizationResult loc = localize(a, std::nullopt);
    if (loc.skipped) {
      std::cout << entry.name << ": " << loc.notice << "\n";
      continue;
    }
    std::vector<int> fault_lines;
    for (int nidx : entry.fault.nodes)
      fault_lines.push_back(a.nodes[static_cast<std::size_t>(nidx - 1)].pos.line);
    double cr = apply_tiebreaker(loc.cdfl, TiePolicy::Avg, entry.fault.nodes);
    cdfl_ranks.push_back(cr);
    total_ties += loc.cdfl.raw_tie_count;
    csv << entry.name << ',' << cr;
    for (auto p : {TiePolicy::Avg, TiePolicy::Min, TiePolicy::Max, TiePolicy::LineOrder}) {
      double r = apply_tiebreaker(loc.sbfl, p, fault_lines);
      sbfl_ranks[p].push_back(r);
      csv << ',' << r;
    }
    csv << ',' << loc.cdfl.raw_tie_count << "\n";
  }
  fs::create_directories(o.output_dir);
  detail::write_file(fs::path(o.output_dir) / "corpus_results.csv", csv.str());

  std::cout << "corpus: " << cdfl_ranks.size() << " localizable faults\n";
  std::cout << "CDFL raw ties across corpus: " << total_ties << "\n";
  std::cout << "acc@n      1    3    5   10\n";
  auto row = [&](const std::string& name, const std::vector<double>& ranks) {
    std::printf("%-9s", name.c_str());
    for (int n : {1, 3, 5, 10}) std::printf(" %4d", acc_at_n(ranks, n));
    std::printf("\n");
  };
  row("cdfl", cdfl_ranks);
  row("sbfl-avg", sbfl_ranks[TiePolicy::Avg]);
  row("sbfl-min", sbfl_ranks[TiePolicy::Min]);
  row("sbfl-max", sbfl_ranks[TiePolicy::Max]);
  row("sbfl-lo", sbfl_ranks[TiePolicy::LineOrder]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal program dependence analysis for the bundled mini language"};
  app.require_subcommand(1);

  CommonOpts o;
  auto add_common = [&](CLI::App* cmd, bool needs_program) {
    cmd->add_option("--config", o.config_path, "flat key=value config file (flags win)");
    if (needs_program) {
      cmd->add_option("--program", o.program_path, "mini-language source file");
      cmd->add_option("--suite", o.suite_path, "test suite file");
    }
    cmd->add_option("--nmpn", o.nmpn, "mutation samples per node");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--jobs", o.jobs, "parallel mutant-run workers");
    cmd->add_option("--output-dir", o.output_dir, "artifact directory");
    cmd->add_option("--out-node", o.out_node, "S_out override: node index or 'output'");
    cmd->add_flag("--ci", o.ci, "require an explicit seed");
  };

  auto* analyze = app.add_subcommand("analyze", "run the full analysis pipeline");
  add_common(analyze, true);

  std::string model_path, out_path, manifest_path;
  auto* exp = app.add_subcommand("export", "export a model (or model diff) as DOT");
  exp->add_option("--model", model_path, "cpdm.json to export")->required();
  exp->add_option("--diff", o.diff_path, "second cpdm.json; renders model-minus-diff");
  exp->add_option("--band", o.band, "keep edges with LO < dd < HI");
  exp->add_option("--output,-o", out_path, "output .dot path ('-' for stdout)");

  auto* loc = app.add_subcommand("localize", "rank fault suspects (CDFL + SBFL)");
  add_common(loc, true);
  loc->add_option("--fault-nodes", o.fault_nodes, "comma-separated node indices (tiebreak table)");

  auto* corpus = app.add_subcommand("corpus", "run localization across a fault corpus");
  add_common(corpus, false);
  corpus->add_option("--manifest", manifest_path, "corpus manifest JSON")->required();

  try {
    app.parse(argc, argv);
    if (analyze->parsed()) {
      merge_config(analyze, o);
      if (o.program_path.empty() || o.suite_path.empty())
        throw CLI::ValidationError("analyze needs --program and --suite");
      return cmd_analyze(o);
    }
    if (exp->parsed()) return cmd_export(o, model_path, out_path);
    if (loc->parsed()) {
      merge_config(loc, o);
      if (o.program_path.empty() || o.suite_path.empty())
        throw CLI::ValidationError("localize needs --program and --suite");
      return cmd_localize(o);
    }
    if (corpus->parsed()) {
      merge_config(corpus, o);
      return cmd_corpus(o, manifest_path);
    }
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
