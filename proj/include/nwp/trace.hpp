// Trace structures over a proof system, progress-annotated trace matrices,
// and the global trace condition: decided by size-change closure, by a
// brute-force lasso oracle, and transported along proof-system morphisms.

#pragma once

#include <functional>
#include <optional>
#include <set>

#include "nwp/core.hpp"

namespace nwp {

struct trace_step {
  formula_token source;  // over ccl(r)
  formula_token target;  // over prem(r, i)
  bool progressing = false;
  auto operator<=>(const trace_step&) const = default;
};

// fml assigns each judgement its finite formula set; steps assigns each
// (rule instance, premise index) its registered trace steps, sorted.
struct trace_structure {
  std::function<formula_set(const judgement&)> fml;
  std::function<std::vector<trace_step>(const rule_instance&, int premise)> steps;
};

struct trace_arc {
  formula_token source;
  formula_token target;
  bool progressing = false;
  auto operator<=>(const trace_arc&) const = default;
};

// A progress-annotated relation between two formula sets. A progressing and
// a non-progressing arc may coexist for the same pair: composition must not
// let a progressing witness mask a non-progressing one.
struct trace_matrix {
  formula_set domain;
  formula_set codomain;
  std::set<trace_arc> arcs;

  bool operator==(const trace_matrix&) const = default;
  auto operator<=>(const trace_matrix&) const = default;
};

// A finite path followed by a cycle, denoting the periodic path u.v^w.
// Entries are (node, premise index taken).
struct lasso {
  std::vector<std::pair<node_id, int>> prefix;
  std::vector<std::pair<node_id, int>> cycle;
};

struct gtc_verdict {
  bool holds = true;
  std::optional<lasso> counterexample;
};

trace_matrix step_matrix(const trace_structure& structure, const rule_instance& rule, int premise);

// (f,x,p) in the result iff some witness g has (f,g,p1) in m1 and (g,x,p2)
// in m2 with p = p1 or p2; a non-progressing witness additionally keeps the
// non-progressing arc.
trace_matrix compose(const trace_matrix& m1, const trace_matrix& m2);

trace_matrix identity_matrix(const formula_set& over);

// A trace structure backed by finite tables; judgements and rules that are
// not listed get empty formula sets and no steps.
trace_structure make_table_trace_structure(
    std::map<judgement, formula_set> fml,
    std::map<std::pair<std::string, int>, std::vector<trace_step>> steps);

// Every step must be well-typed against the rule instances of the pre-proof.
validation_report validate_trace_structure(const pre_proof& proof, const trace_structure& structure);

// Size-change decision: the composition closure of step matrices along paths
// fails iff some idempotent cycle matrix lacks a progressing self-arc.
gtc_verdict decide_gtc(const pre_proof& proof, const trace_structure& structure);

// Independent oracle: enumerates cycles of length <= bound and searches each
// product graph (position x formula) for a cycle containing a progressing
// arc. A lasso without one witnesses GTC failure.
gtc_verdict brute_force_gtc(const pre_proof& proof, const trace_structure& structure, int bound);

// Throws unless the lasso is a genuine path/cycle of the labelled graph.
void check_lasso(const pre_proof& proof, const lasso& l);

// Product-graph search on one periodic path: true iff some trace along a
// suffix of the lasso is infinitely progressing.
bool lasso_admits_progressing_trace(const pre_proof& proof, const trace_structure& structure,
                                    const lasso& l);

// The witness trace structure with one formula per judgement, the identity
// step everywhere and nothing progressing; its GTC is exactly
// well-foundedness.
trace_structure recursiveness_witness_structure();
bool check_recursive_via_gtc(const pre_proof& proof);

// A morphism of discrete proof systems, presented by finite tables over the
// upstairs (reindexed) system.
struct morphism_rule {
  rule_instance upstairs;
  rule_instance downstairs;
  std::vector<int> premise_map;  // upstairs premise index -> downstairs premise index
};

struct proof_system_morphism {
  std::vector<std::pair<judgement, judgement>> judgement_map;  // upstairs -> downstairs
  std::vector<morphism_rule> rules;

  std::vector<judgement> fibre(const judgement& downstairs) const;
  std::optional<judgement> image(const judgement& upstairs) const;
};

// Checks the commuting squares and, against a concrete pre-proof, the
// bijective correspondence of rules over each fibre judgement.
validation_report validate_morphism(const proof_system_morphism& f, const pre_proof& proof);

// Nodes of the result are all pairs (n, s') with s' in the fibre of
// judgement_of(n); projecting its labelled graph is a graph homomorphism
// onto the base labelled graph. Throws on morphism invariant violations.
pre_proof reindex_preproof(const proof_system_morphism& f, const pre_proof& proof);

trace_structure pullback_trace_structure(const proof_system_morphism& f,
                                         const trace_structure& structure);

std::string render_lasso(const lasso& l);

}  // namespace nwp
