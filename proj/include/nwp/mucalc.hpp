// Modal mu-calculus instance: syntax, finite-LTS semantics, ordinal
// approximants, the sequent rules, the marked-formula trace structure,
// nu-threads and the empirical soundness harness.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "nwp/trace.hpp"

namespace nwp::mu {

enum class kind { prop, nprop, var, disj, conj, diamond, box, mu, nu };

struct formula;
using formula_ptr = std::shared_ptr<const formula>;

struct formula {
  kind k;
  std::string name;  // proposition, variable, action, or bound variable
  formula_ptr left;  // body for unary nodes
  formula_ptr right;
};

formula_ptr make_prop(std::string name);
formula_ptr make_nprop(std::string name);
formula_ptr make_var(std::string name);
formula_ptr make_or(formula_ptr l, formula_ptr r);
formula_ptr make_and(formula_ptr l, formula_ptr r);
formula_ptr make_diamond(std::string action, formula_ptr body);
formula_ptr make_box(std::string action, formula_ptr body);
formula_ptr make_mu(std::string var, formula_ptr body);
formula_ptr make_nu(std::string var, formula_ptr body);

std::string render(const formula_ptr& f);

struct syntax_error : error {
  std::size_t position;
  syntax_error(std::string what, std::size_t pos);
};

struct parse_result {
  formula_ptr parsed;
  std::vector<std::string> warnings;  // well-naming repairs
};

// Parses the ASCII grammar (atoms p, ~p, variables, |, &, <a>, [a], mu x.,
// nu x., parentheses) and returns the canonical alpha-representative: bound
// variables are renamed x0, x1, ... in binder preorder, repairing any
// well-naming violations.
parse_result parse_formula(const std::string& text);

formula_ptr canonicalize(const formula_ptr& f, std::vector<std::string>* warnings = nullptr);

// De Morgan dual; variables are left fixed, so negate(negate(f)) is
// alpha-equal to f.
formula_ptr negate_formula(const formula_ptr& f);

// Free occurrences of `var` replaced by `replacement`; well-named inputs
// need no capture repair for fixed-point unfolding.
formula_ptr substitute(const formula_ptr& f, const std::string& var, const formula_ptr& replacement);

formula_ptr unfold(const formula_ptr& fixpoint);  // body[sigma x.body / x]

// Preorder addresses ('0' left/body, '1' right) of all nu binders.
std::vector<std::string> nu_addresses(const formula_ptr& f);
formula_ptr subformula_at(const formula_ptr& f, const std::string& address);

struct lts {
  int state_count = 0;
  std::map<std::string, std::set<std::pair<int, int>>> transitions;  // action -> pairs
  std::map<std::string, std::set<int>> labels;                       // proposition -> states
};

lts parse_lts(const std::string& text);

using state_set = std::set<int>;
using valuation = std::map<std::string, state_set>;  // defaults to empty elsewhere

struct semantics_stats {
  int max_binder_iterations = 0;  // stabilisation bound check: <= |S| + 1
};

state_set semantics(const formula_ptr& f, const lts& model, const valuation& rho = {},
                    semantics_stats* stats = nullptr);

// Ordinal annotation per nu binder (keyed by its bound variable), as a
// natural number; on a finite LTS the stage |S| already equals the greatest
// fixed point.
using nu_annotation = std::map<std::string, std::uint32_t>;

state_set approximant_semantics(const formula_ptr& f, const nu_annotation& annotation,
                                const lts& model, const valuation& rho = {});

// Sorted by rendering, duplicates collapsed: sequents are finite sets.
struct sequent {
  std::vector<formula_ptr> formulas;
};

sequent make_sequent(std::vector<formula_ptr> formulas);
std::string render(const sequent& s);
sequent parse_sequent(const std::string& text);  // comma-separated formulas
judgement judgement_of(const sequent& s);
sequent sequent_of(const judgement& j);

// Quantifies valuations over the free variables actually occurring; throws
// budget_exceeded-style error when 2^(|S| * k) passes the budget.
bool is_valid_sequent(const sequent& s, const lts& model, std::uint64_t budget = 1u << 20);

rule_instance make_rule(const std::string& schema, const sequent& conclusion,
                        const std::vector<sequent>& premises);

// Exact shape check for the schemas Ax, Wk, Or, And, Mod, Mu, Nu.
bool validate_rule_instance(const rule_instance& rule);

proof_system mu_proof_system();

// Marked sequents as formulas: one token per nu occurrence per formula.
formula_set marked_sequents(const sequent& s);

// The marked-formula trace structure: marks travel to corresponding
// occurrences, fixed-point unfoldings split per substituted occurrence, and
// exactly the nu-unfoldings of the marked principal binder progress.
trace_structure mu_trace_structure();

// True iff the periodic path carries a thread whose minimal infinitely
// unfolded variable is a nu-variable.
bool nu_thread_check(const pre_proof& proof, const lasso& l);

struct not_a_proof : error {
  using error::error;
};

struct harness_violation {
  int lts_index;
  node_id node;
  std::string sequent_text;
};

struct harness_report {
  std::vector<harness_violation> violations;
  bool ok() const { return violations.empty(); }
};

// Requires the GTC (throws not_a_proof otherwise), then checks every node
// sequent for validity on every supplied LTS. A violation would falsify the
// implementation, not the theorem.
harness_report soundness_harness(const pre_proof& proof, const std::vector<lts>& models);

}  // namespace nwp::mu
