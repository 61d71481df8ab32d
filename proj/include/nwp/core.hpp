// Core representation of abstract proof systems (discrete case): judgements,
// rule instances, finite pre-proofs as rooted derivation graphs, labelled
// graphs, well-foundedness and unique solutions for well-founded pre-proofs.

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nwp {

using node_id = int;

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A judgement is identified by its canonical rendering; equal judgements
// render identically by construction.
struct judgement {
  std::string text;
  auto operator<=>(const judgement&) const = default;
};

// A concrete rule instance: a schema token plus the metavariable assignment,
// flattened into conclusion and ordered premises.
struct rule_instance {
  std::string rule_id;
  std::string schema;
  judgement conclusion;
  std::vector<judgement> premises;

  int arity() const { return static_cast<int>(premises.size()); }
};

// A formula token is scoped to the judgement whose fml set it belongs to.
struct formula_token {
  std::string token;
  auto operator<=>(const formula_token&) const = default;
};

// Sorted, duplicate-free.
using formula_set = std::vector<formula_token>;

formula_set make_formula_set(std::vector<formula_token> tokens);

struct proof_system {
  std::string name;
  std::function<bool(const rule_instance&)> validate;
  // Formula sets per judgement; may be null for systems without a canonical
  // trace structure.
  std::function<formula_set(const judgement&)> fml;
};

// A finite pre-proof: the derivation graph of a coalgebra at finite carrier.
// Nodes are dense integers 0..node_count()-1.
struct pre_proof {
  std::vector<judgement> judgements;           // judgement per node
  std::vector<rule_instance> rules;            // rule instance per node
  std::vector<std::vector<node_id>> children;  // premise order, per node
  std::vector<node_id> roots;

  int node_count() const { return static_cast<int>(judgements.size()); }
};

struct labelled_edge {
  node_id source = 0;
  int premise = 0;
  node_id target = 0;
  auto operator<=>(const labelled_edge&) const = default;
};

struct labelled_graph {
  int node_count = 0;
  std::vector<labelled_edge> edges;  // sorted by (source, premise)
};

struct violation {
  node_id node = -1;  // -1 for proof-level problems
  std::string what;
};

struct validation_report {
  std::vector<violation> violations;
  bool ok() const { return violations.empty(); }
};

struct wf_verdict {
  bool well_founded = false;
  std::vector<node_id> cycle;  // one concrete cycle when not well-founded
};

struct not_well_founded : error {
  std::vector<node_id> cycle;
  explicit not_well_founded(std::vector<node_id> c);
};

struct algebra_failure : error {
  using error::error;
};

struct budget_exceeded : error {
  using error::error;
};

// Checks all structural invariants plus the system's per-rule predicate.
// Violations are data, not failures.
validation_report validate_preproof(const proof_system& system, const pre_proof& proof);

// Edges (n, i, children_of(n)[i]) in deterministic order. Requires a
// validated pre-proof.
labelled_graph make_labelled_graph(const pre_proof& proof);

// A finite derivation graph is well-founded iff it is acyclic.
wf_verdict is_well_founded(const pre_proof& proof);

// Children-first (dependencies before dependents); throws not_well_founded.
std::vector<node_id> topological_order(const pre_proof& proof);

// Shortest path from some root to `target`, as (node, premise index) steps.
std::vector<std::pair<node_id, int>> root_path(const pre_proof& proof, node_id target);

template <typename V>
struct algebra {
  std::function<V(const rule_instance&, const std::vector<V>&)> eval;
};

// The unique assignment node -> value with value(n) = eval(rule(n), child
// values), for well-founded pre-proofs. Throws not_well_founded otherwise;
// algebra_failure propagates from eval.
template <typename V>
std::vector<V> solve(const pre_proof& proof, const algebra<V>& alg) {
  std::vector<node_id> order = topological_order(proof);
  std::vector<V> values(proof.judgements.size());
  std::vector<bool> done(proof.judgements.size(), false);
  for (node_id n : order) {
    std::vector<V> child_values;
    child_values.reserve(proof.children[n].size());
    for (node_id m : proof.children[n]) child_values.push_back(values[m]);
    values[n] = alg.eval(proof.rules[n], child_values);
    done[n] = true;
  }
  for (bool b : done)
    if (!b) throw error("solve: node not covered by topological order");
  return values;
}

}  // namespace nwp
