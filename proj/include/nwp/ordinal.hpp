// Ordinals below w^w in Cantor normal form, ordinal-annotated lifted
// derivation graphs, GTC refutation certificates, and heights of
// non-progressing lassos.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nwp/trace.hpp"

namespace nwp {

// Sum of w^exponent * coefficient terms with strictly decreasing exponents;
// the empty sum is zero. Canonical form is unique, so comparison is
// lexicographic on the term lists.
struct ordinal {
  std::vector<std::pair<std::uint32_t, std::uint64_t>> cnf;

  static ordinal zero() { return {}; }
  static ordinal from_nat(std::uint64_t n);
  static ordinal omega_power(std::uint32_t exponent, std::uint64_t coefficient = 1);
  bool is_zero() const { return cnf.empty(); }

  bool operator==(const ordinal&) const = default;
};

int ord_compare(const ordinal& a, const ordinal& b);  // -1, 0, +1
bool operator<(const ordinal& a, const ordinal& b);
bool operator<=(const ordinal& a, const ordinal& b);

ordinal ord_succ(const ordinal& a);
ordinal ord_sup(const std::vector<ordinal>& set);           // max; sup of {} is 0
ordinal ord_sup_plus_one(const std::vector<ordinal>& set);  // sup of {a+1}; {} gives 0

std::string to_string(const ordinal& a);  // e.g. "w^2*3 + w*1 + 4"
ordinal parse_ordinal(const std::string& text);

// Ordinal per formula of one judgement; total on its fml set.
using annotation = std::map<formula_token, ordinal>;

struct non_applicable : error {
  using error::error;
};

// True iff every registered step strictly decreases the annotation when
// progressing and weakly decreases otherwise. Throws on annotations that are
// not total on the respective fml sets.
bool lifted_edge_ok(const trace_structure& structure, const rule_instance& rule, int premise,
                    const annotation& on_conclusion, const annotation& on_premise);

struct lifted_graph {
  struct lifted_node {
    node_id base;
    std::vector<std::uint32_t> values;  // aligned with the sorted fml set of base
  };
  struct lifted_edge_entry {
    int source;
    int premise;
    int target;
  };
  std::vector<lifted_node> nodes;
  std::vector<lifted_edge_entry> edges;
};

// All (node, annotation) pairs with values below gamma, keeping exactly the
// base edges whose annotation pairs pass lifted_edge_ok. The node count is
// sum over nodes of gamma^|fml|; beyond the budget this throws
// budget_exceeded.
lifted_graph build_lifted_graph(const pre_proof& proof, const trace_structure& structure,
                                std::uint32_t gamma, std::uint64_t node_budget = 1'000'000);

struct refutation_certificate {
  std::vector<std::pair<node_id, int>> cycle;  // (node, premise index), closing back to front
  std::vector<annotation> annotations;         // one per cycle position
};

// A cycle in the lifted graph refutes the GTC for any gamma >= 1.
std::optional<refutation_certificate> refute_gtc_via_lift(const pre_proof& proof,
                                                          const trace_structure& structure,
                                                          std::uint32_t gamma,
                                                          std::uint64_t node_budget = 1'000'000);

// Decides the GTC through the lifted graph at the finite stage
// gamma* = nodes x (1 + max |fml|) + 1, cross-checked against decide_gtc by
// the acceptance suite.
gtc_verdict decide_gtc_via_lift(const pre_proof& proof, const trace_structure& structure,
                                std::uint64_t node_budget = 1'000'000);

std::uint32_t lift_gamma_star(const pre_proof& proof, const trace_structure& structure);

// Heights of (position, formula) pairs along a non-progressing lasso,
// computed on the period quotient; throws non_applicable when the lasso
// admits an infinitely progressing trace. The result annotates every
// position of prefix + cycle and passes lifted_edge_ok along every edge.
std::vector<annotation> lasso_heights(const pre_proof& proof, const trace_structure& structure,
                                      const lasso& l);

// True iff the cycle exists in the base graph and every consecutive
// annotation pair (including the wrap-around) passes lifted_edge_ok.
bool verify_refutation(const pre_proof& proof, const trace_structure& structure,
                       const refutation_certificate& certificate);

}  // namespace nwp
