// Small construction helpers shared by the test suites.

#pragma once

#include <string>
#include <vector>

#include "nwp/trace.hpp"

namespace nwp::testing {

// A pre-proof over the anonymous system: one judgement and one rule per
// node, premises read off the child lists.
inline pre_proof graph_proof(const std::vector<std::vector<node_id>>& children,
                             std::vector<node_id> roots = {0}) {
  pre_proof proof;
  for (std::size_t v = 0; v < children.size(); ++v) {
    judgement j{"J" + std::to_string(v)};
    rule_instance rule;
    rule.rule_id = "r" + std::to_string(v);
    rule.schema = "any";
    rule.conclusion = j;
    for (node_id child : children[v]) rule.premises.push_back({"J" + std::to_string(child)});
    proof.judgements.push_back(j);
    proof.rules.push_back(std::move(rule));
    proof.children.push_back(children[v]);
  }
  proof.roots = std::move(roots);
  return proof;
}

inline proof_system anything_goes() {
  proof_system system;
  system.name = "test";
  system.validate = [](const rule_instance&) { return true; };
  return system;
}

// One formula per node with explicitly listed steps.
struct step_spec {
  node_id node;
  int premise;
  std::string from;
  std::string to;
  bool progressing;
};

inline trace_structure steps_structure(const pre_proof& proof, const std::vector<step_spec>& specs,
                                       const std::vector<std::vector<std::string>>& fml_per_node) {
  std::map<judgement, formula_set> fml;
  for (std::size_t v = 0; v < fml_per_node.size(); ++v) {
    std::vector<formula_token> tokens;
    for (const std::string& t : fml_per_node[v]) tokens.push_back({t});
    fml[proof.judgements[v]] = make_formula_set(std::move(tokens));
  }
  std::map<std::pair<std::string, int>, std::vector<trace_step>> steps;
  for (const step_spec& s : specs)
    steps[{proof.rules[s.node].rule_id, s.premise}].push_back(
        {formula_token{s.from}, formula_token{s.to}, s.progressing});
  return make_table_trace_structure(std::move(fml), std::move(steps));
}

}  // namespace nwp::testing
