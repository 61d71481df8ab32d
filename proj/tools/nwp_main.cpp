// Command-line front end: validate proof files, decide the GTC three ways,
// model-check mu-calculus formulas, solve well-founded proofs, run the
// descending-sequence recursion, and drive the random agreement corpora.
//
// Exit codes: 0 ok/holds, 1 GTC fails or corpus disagreement, 2 validation
// violations, 3 parse errors, 4 budget exceeded, 5 not well-founded.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nwp/corpus.hpp"
#include "nwp/proof_file.hpp"

namespace {

using namespace nwp;

constexpr int exit_ok = 0;
constexpr int exit_fails = 1;
constexpr int exit_violations = 2;
constexpr int exit_parse = 3;
constexpr int exit_budget = 4;
constexpr int exit_not_well_founded = 5;

std::string node_label(const io::proof_document& doc, node_id v) {
  if (v >= 0 && v < static_cast<int>(doc.node_names.size())) return doc.node_names[v];
  return "#" + std::to_string(v);
}

std::string show_lasso(const io::proof_document& doc, const lasso& l) {
  std::ostringstream out;
  out << "prefix:";
  for (const auto& [v, i] : l.prefix) out << " " << node_label(doc, v) << ":" << i;
  out << "\ncycle:";
  for (const auto& [v, i] : l.cycle) out << " " << node_label(doc, v) << ":" << i;
  return out.str();
}

io::proof_document load_or_exit(const std::string& path) {
  try {
    return io::load_proof_file(path);
  } catch (const error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    std::exit(exit_parse);
  }
}

int validate_or_report(const io::proof_document& doc) {
  validation_report report = validate_preproof(doc.sys, doc.proof);
  for (const violation& v : report.violations)
    std::cout << "violation at " << (v.node < 0 ? std::string("proof") : node_label(doc, v.node))
              << ": " << v.what << "\n";
  return report.ok() ? exit_ok : exit_violations;
}

mu::lts load_lts_or_exit(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open '" << path << "'\n";
    std::exit(exit_parse);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return mu::parse_lts(buffer.str());
  } catch (const error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    std::exit(exit_parse);
  }
}

void print_states(const mu::state_set& states) {
  bool first = true;
  for (int s : states) {
    if (!first) std::cout << " ";
    std::cout << s;
    first = false;
  }
  std::cout << "\n";
}

int run_check(const std::string& path) {
  io::proof_document doc = load_or_exit(path);
  int status = validate_or_report(doc);
  if (status != exit_ok) return status;
  if (doc.refutation) {
    if (!doc.structure) {
      std::cout << "refutation: no trace structure to check against\n";
      return exit_violations;
    }
    bool good = verify_refutation(doc.proof, *doc.structure, *doc.refutation);
    std::cout << "refutation: " << (good ? "verified" : "REJECTED") << "\n";
    if (!good) return exit_violations;
  }
  std::cout << "ok\n";
  return exit_ok;
}

int run_gtc(const std::string& path, const std::string& method, int bound,
            std::uint64_t lift_budget) {
  io::proof_document doc = load_or_exit(path);
  int status = validate_or_report(doc);
  if (status != exit_ok) return status;
  if (!doc.structure) {
    std::cerr << path << ": no trace structure declared\n";
    return exit_parse;
  }

  gtc_verdict verdict;
  try {
    if (method == "sct") {
      verdict = decide_gtc(doc.proof, *doc.structure);
    } else if (method == "brute") {
      int max_fml = 0;
      for (node_id v = 0; v < doc.proof.node_count(); ++v)
        max_fml = std::max(max_fml,
                           static_cast<int>(doc.structure->fml(doc.proof.judgements[v]).size()));
      int effective = bound > 0 ? bound : doc.proof.node_count() * (1 + max_fml);
      verdict = brute_force_gtc(doc.proof, *doc.structure, effective);
    } else {  // lift
      verdict = decide_gtc_via_lift(doc.proof, *doc.structure, lift_budget);
    }
  } catch (const budget_exceeded& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "advice: rerun with --method sct\n";
    return exit_budget;
  } catch (const error& e) {
    std::cerr << e.what() << "\n";
    return exit_parse;
  }

  if (verdict.holds) {
    std::cout << "gtc: holds\n";
    return exit_ok;
  }
  std::cout << "gtc: fails\n" << show_lasso(doc, *verdict.counterexample) << "\n";
  return exit_fails;
}

int run_mc(const std::string& formula_text, const std::string& lts_path,
           const std::string& ann_spec) {
  mu::lts model = load_lts_or_exit(lts_path);
  mu::formula_ptr formula;
  try {
    mu::parse_result parsed = mu::parse_formula(formula_text);
    for (const std::string& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
    formula = parsed.parsed;
  } catch (const error& e) {
    std::cerr << "formula: " << e.what() << "\n";
    return exit_parse;
  }
  if (ann_spec.empty()) {
    print_states(mu::semantics(formula, model));
    return exit_ok;
  }
  mu::nu_annotation annotation;
  std::istringstream in(ann_spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--ann expects var=stage pairs, got '" << item << "'\n";
      return exit_parse;
    }
    annotation[item.substr(0, eq)] = static_cast<std::uint32_t>(std::stoul(item.substr(eq + 1)));
  }
  print_states(mu::approximant_semantics(formula, annotation, model));
  return exit_ok;
}

int run_valid(const std::string& sequent_text, const std::string& lts_path) {
  mu::lts model = load_lts_or_exit(lts_path);
  try {
    bool valid = mu::is_valid_sequent(mu::parse_sequent(sequent_text), model);
    std::cout << (valid ? "valid" : "invalid") << "\n";
    return valid ? exit_ok : exit_fails;
  } catch (const budget_exceeded& e) {
    std::cerr << e.what() << "\n";
    return exit_budget;
  } catch (const error& e) {
    std::cerr << "sequent: " << e.what() << "\n";
    return exit_parse;
  }
}

int run_solve(const std::string& path, const std::string& lts_path) {
  io::proof_document doc = load_or_exit(path);
  if (doc.system != "mucalc") {
    std::cerr << "solve --algebra validity needs a mucalc proof file\n";
    return exit_parse;
  }
  int status = validate_or_report(doc);
  if (status != exit_ok) return status;
  mu::lts model = load_lts_or_exit(lts_path);

  algebra<bool> validity{[&model](const rule_instance& rule, const std::vector<bool>& children) {
    bool all = true;
    for (bool c : children) all = all && c;
    return all && mu::is_valid_sequent(mu::parse_sequent(rule.conclusion.text), model);
  }};
  try {
    std::vector<bool> values = solve(doc.proof, validity);
    for (node_id v = 0; v < doc.proof.node_count(); ++v)
      std::cout << node_label(doc, v) << ": " << (values[v] ? "valid" : "invalid") << "\n";
    return exit_ok;
  } catch (const not_well_founded& e) {
    std::cout << "not well-founded; cycle:";
    for (node_id v : e.cycle) std::cout << " " << node_label(doc, v);
    std::cout << "\n";
    return exit_not_well_founded;
  }
}

int run_ds(const std::string& prefix_csv, const std::string& period_csv, std::uint64_t n0,
           std::size_t count) {
  auto parse_csv = [](const std::string& text) {
    std::vector<std::uint64_t> values;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) values.push_back(std::stoull(item));
    return values;
  };
  ds::stream_spec spec;
  try {
    if (!prefix_csv.empty()) spec.prefix = parse_csv(prefix_csv);
    spec.period = parse_csv(period_csv);
  } catch (const std::exception&) {
    std::cerr << "--prefix/--period expect comma-separated numbers\n";
    return exit_parse;
  }
  if (spec.period.empty()) {
    std::cerr << "--period must be nonempty\n";
    return exit_parse;
  }
  try {
    std::vector<std::uint64_t> out = ds::coalgebraic(n0, spec, count);
    for (std::size_t i = 0; i < out.size(); ++i) std::cout << (i ? " " : "") << out[i];
    std::cout << "\n";
    return exit_ok;
  } catch (const budget_exceeded& e) {
    std::cerr << e.what() << "\n";
    return exit_budget;
  }
}

struct corpus_outcome {
  int checked = 0;
  int disagreements = 0;
};

corpus_outcome corpus_gtc(corpus::rng& gen, int count) {
  corpus_outcome outcome;
  for (int round = 0; round < count; ++round) {
    corpus::generated_instance inst = corpus::random_instance(gen, {});
    int bound = inst.proof.node_count() * (1 + inst.max_fml);
    ++outcome.checked;
    gtc_verdict closure = decide_gtc(inst.proof, inst.structure);
    gtc_verdict brute = brute_force_gtc(inst.proof, inst.structure, bound);
    if (closure.holds != brute.holds) {
      ++outcome.disagreements;
      const gtc_verdict& failing = closure.holds ? brute : closure;
      std::cout << "disagreement at round " << round << ", "
                << (closure.holds ? "brute" : "sct") << " found "
                << render_lasso(*failing.counterexample) << "\n";
    }
  }
  return outcome;
}

corpus_outcome corpus_lift(corpus::rng& gen, int count) {
  corpus_outcome outcome;
  corpus::instance_options options;
  options.max_nodes = 4;
  options.max_fml = 2;
  for (int round = 0; round < count; ++round) {
    corpus::generated_instance inst = corpus::random_instance(gen, options);
    ++outcome.checked;
    if (decide_gtc_via_lift(inst.proof, inst.structure).holds !=
        decide_gtc(inst.proof, inst.structure).holds)
      ++outcome.disagreements;
  }
  return outcome;
}

corpus_outcome corpus_recursive(corpus::rng& gen, int count) {
  corpus_outcome outcome;
  for (int round = 0; round < count; ++round) {
    pre_proof proof = corpus::random_preproof(gen, 6, 0.5);
    ++outcome.checked;
    if (check_recursive_via_gtc(proof) != is_well_founded(proof).well_founded)
      ++outcome.disagreements;
  }
  return outcome;
}

corpus_outcome corpus_base_change(corpus::rng& gen, int count) {
  corpus_outcome outcome;
  corpus::instance_options options;
  options.max_nodes = 4;
  options.max_fml = 2;
  options.prog_prob = 0.8;
  while (outcome.checked < count) {
    corpus::generated_instance inst = corpus::random_instance(gen, options);
    if (!decide_gtc(inst.proof, inst.structure).holds) continue;
    ++outcome.checked;
    proof_system_morphism f = corpus::random_morphism(gen, inst.proof, 2);
    pre_proof reindexed = reindex_preproof(f, inst.proof);
    trace_structure pulled = pullback_trace_structure(f, inst.structure);
    if (!decide_gtc(reindexed, pulled).holds) ++outcome.disagreements;
  }
  return outcome;
}

int run_corpus(std::uint64_t seed, int count, const std::string& kind) {
  corpus::rng gen(seed);
  bool all_ok = true;
  auto report = [&](const std::string& name, const corpus_outcome& outcome) {
    std::cout << name << ": " << outcome.checked - outcome.disagreements << "/" << outcome.checked
              << " agree\n";
    if (outcome.disagreements > 0) all_ok = false;
  };
  if (kind == "gtc" || kind == "all") report("gtc sct-vs-brute", corpus_gtc(gen, count));
  if (kind == "lift" || kind == "all") report("lift-vs-sct", corpus_lift(gen, count));
  if (kind == "recursive" || kind == "all")
    report("recursive-vs-wellfounded", corpus_recursive(gen, count));
  if (kind == "basechange" || kind == "all")
    report("base-change preservation", corpus_base_change(gen, count));
  return all_ok ? exit_ok : exit_fails;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"workbench for non-wellfounded proofs and global trace conditions"};
  app.require_subcommand(1);

  std::string path, method = "sct", formula_text, lts_path, sequent_text, algebra_name = "validity";
  std::string ann_spec, prefix_csv, period_csv, kind = "all";
  int bound = 0, count = 200;
  std::uint64_t lift_budget = 1'000'000, n0 = 1, seed = 1;
  std::size_t ds_count = 0;

  CLI::App* check = app.add_subcommand("check", "validate a proof file");
  check->add_option("file", path)->required();

  CLI::App* gtc = app.add_subcommand("gtc", "decide the global trace condition");
  gtc->add_option("file", path)->required();
  gtc->add_option("--method", method, "sct | lift | brute")
      ->check(CLI::IsMember({"sct", "lift", "brute"}));
  gtc->add_option("--bound", bound, "lasso length bound for --method brute");
  gtc->add_option("--lift-budget", lift_budget, "lifted-graph node budget");

  CLI::App* mc = app.add_subcommand("mc", "model-check a formula on an LTS");
  mc->add_option("formula", formula_text)->required();
  mc->add_option("lts", lts_path)->required();
  mc->add_option("--ann", ann_spec, "nu approximant stages, e.g. x0=2,x1=0");

  CLI::App* valid = app.add_subcommand("valid", "check sequent validity on an LTS");
  valid->add_option("sequent", sequent_text)->required();
  valid->add_option("lts", lts_path)->required();

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a well-founded proof");
  solve_cmd->add_option("file", path)->required();
  solve_cmd->add_option("--algebra", algebra_name)->check(CLI::IsMember({"validity"}));
  solve_cmd->add_option("--lts", lts_path)->required();

  CLI::App* ds_cmd = app.add_subcommand("ds", "run the descending-sequence recursion");
  ds_cmd->add_option("--prefix", prefix_csv, "comma-separated prefix");
  ds_cmd->add_option("--period", period_csv, "comma-separated period")->required();
  ds_cmd->add_option("--n", ds_count, "number of outputs")->required();
  ds_cmd->add_option("--n0", n0, "initial counter (default 1)");

  CLI::App* corpus_cmd = app.add_subcommand("corpus", "run the random agreement corpora");
  corpus_cmd->add_option("--seed", seed);
  corpus_cmd->add_option("--count", count);
  corpus_cmd->add_option("--kind", kind)
      ->check(CLI::IsMember({"gtc", "lift", "recursive", "basechange", "all"}));

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return run_check(path);
  if (gtc->parsed()) return run_gtc(path, method, bound, lift_budget);
  if (mc->parsed()) return run_mc(formula_text, lts_path, ann_spec);
  if (valid->parsed()) return run_valid(sequent_text, lts_path);
  if (solve_cmd->parsed()) return run_solve(path, lts_path);
  if (ds_cmd->parsed()) return run_ds(prefix_csv, period_csv, n0, ds_count);
  if (corpus_cmd->parsed()) return run_corpus(seed, count, kind);
  return exit_ok;
}
