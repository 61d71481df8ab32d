#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nwp/corpus.hpp"
#include "nwp/ordinal.hpp"
#include "nwp/mucalc.hpp"

using namespace nwp;
using namespace nwp::mu;

namespace {

lts parse_model(const std::string& text) { return parse_lts(text); }

state_set complement_of(const lts& model, const state_set& s) {
  state_set out;
  for (int i = 0; i < model.state_count; ++i)
    if (!s.count(i)) out.insert(i);
  return out;
}

state_set full(const lts& model) { return complement_of(model, {}); }

}  // namespace

TEST_CASE("parsing builds the expected tree and canonical names") {
  formula_ptr f = parse_formula("nu x. [a] x").parsed;
  REQUIRE(f->k == kind::nu);
  CHECK(f->name == "x0");
  REQUIRE(f->left->k == kind::box);
  CHECK(f->left->name == "a");
  CHECK(f->left->left->k == kind::var);
  CHECK(render(f) == "nu x0. [a]x0");

  parse_result repaired = parse_formula("mu x. <a> x | nu x. p");
  CHECK_FALSE(repaired.warnings.empty());
  CHECK(render(repaired.parsed) == "mu x0. <a>x0 | (nu x1. p)");

  CHECK_THROWS_AS(parse_formula("mu . x"), syntax_error);
  CHECK_THROWS_AS(parse_formula("p |"), syntax_error);
  CHECK_THROWS_AS(parse_formula("<a p"), syntax_error);
}

TEST_CASE("parse after render is the identity on canonical representatives") {
  std::mt19937_64 gen(101);
  for (int round = 0; round < 150; ++round) {
    formula_ptr f = corpus::random_closed_formula(gen, 4, {"a", "b"}, {"p", "q"});
    CHECK(render(parse_formula(render(f)).parsed) == render(f));
  }
}

TEST_CASE("negation is the De Morgan dual") {
  // the motivating identity: not (mu x. <a>x & p) = nu x. [a]x | ~p
  formula_ptr f = parse_formula("mu x. <a> x & p").parsed;
  CHECK(render(negate_formula(f)) == render(parse_formula("nu x. [a] x | ~p").parsed));

  CHECK(render(negate_formula(negate_formula(parse_formula("~p").parsed))) == "~p");

  std::mt19937_64 gen(103);
  for (int round = 0; round < 100; ++round) {
    formula_ptr g = corpus::random_closed_formula(gen, 4, {"a"}, {"p", "q"});
    CHECK(render(negate_formula(negate_formula(g))) == render(g));
  }
}

TEST_CASE("negation complements the semantics of closed formulas") {
  std::mt19937_64 gen(107);
  for (int round = 0; round < 100; ++round) {
    lts model = corpus::random_lts(gen, 5, {"a", "b"}, {"p", "q"});
    formula_ptr f = corpus::random_closed_formula(gen, 4, {"a", "b"}, {"p", "q"});
    CHECK(semantics(negate_formula(f), model) == complement_of(model, semantics(f, model)));
  }
}

TEST_CASE("semantics: labels, fixed points of the identity, simple loops") {
  lts model = parse_model("states 3\nlabel p 0\nlabel p 2\ntrans a 0 1\ntrans a 1 0\n");
  CHECK(semantics(parse_formula("p").parsed, model) == state_set{0, 2});
  CHECK(semantics(parse_formula("nu x. x").parsed, model) == full(model));
  CHECK(semantics(parse_formula("mu x. x").parsed, model) == state_set{});

  // on the two-state a-cycle both states satisfy nu x. <a>x, state 2 does not
  CHECK(semantics(parse_formula("nu x. <a> x").parsed, model) == state_set{0, 1});

  std::mt19937_64 gen(109);
  for (int round = 0; round < 25; ++round) {
    lts random_model = corpus::random_lts(gen, 5, {"a"}, {"p"});
    CHECK(semantics(parse_formula("mu x. <a> x").parsed, random_model) == state_set{});
    CHECK(semantics(parse_formula("nu x. [a] x").parsed, random_model) == full(random_model));
  }
}

TEST_CASE("fixpoint iterations stabilise within the state count") {
  std::mt19937_64 gen(113);
  for (int round = 0; round < 60; ++round) {
    lts model = corpus::random_lts(gen, 5, {"a", "b"}, {"p", "q"});
    formula_ptr f = corpus::random_closed_formula(gen, 4, {"a", "b"}, {"p", "q"});
    semantics_stats stats;
    semantics(f, model, {}, &stats);
    CHECK(stats.max_binder_iterations <= model.state_count + 1);
  }
}

TEST_CASE("semantics is monotone in the valuation at free variables") {
  std::mt19937_64 gen(127);
  // v occurs free; only bound names parse as variables, so build it directly
  formula_ptr f = canonicalize(
      make_mu("x", make_or(make_var("v"), make_diamond("a", make_var("x")))));
  for (int round = 0; round < 40; ++round) {
    lts model = corpus::random_lts(gen, 5, {"a"}, {"p"});
    state_set small, large;
    for (int s = 0; s < model.state_count; ++s) {
      if (gen() % 3 == 0) small.insert(s);
      if (small.count(s) || gen() % 2 == 0) large.insert(s);
    }
    state_set at_small = semantics(f, model, {{"v", small}});
    state_set at_large = semantics(f, model, {{"v", large}});
    for (int s : at_small) CHECK(at_large.count(s) == 1);
  }
}

TEST_CASE("approximants: stage zero is everything, stage |S| is the fixed point") {
  std::mt19937_64 gen(131);
  for (int round = 0; round < 100; ++round) {
    lts model = corpus::random_lts(gen, 5, {"a", "b"}, {"p", "q"});
    formula_ptr f = corpus::random_closed_formula(gen, 4, {"a", "b"}, {"p", "q"});
    if (f->k == kind::nu) {
      nu_annotation zero;
      std::vector<std::string> addresses = nu_addresses(f);
      for (const std::string& addr : addresses) zero[subformula_at(f, addr)->name] = 0;
      CHECK(approximant_semantics(f, zero, model) == full(model));
    }
    nu_annotation converged;
    for (const std::string& addr : nu_addresses(f))
      converged[subformula_at(f, addr)->name] = static_cast<std::uint32_t>(model.state_count);
    CHECK(approximant_semantics(f, converged, model) == semantics(f, model));
  }
}

TEST_CASE("approximants shrink as annotations grow") {
  std::mt19937_64 gen(137);
  for (int round = 0; round < 60; ++round) {
    lts model = corpus::random_lts(gen, 5, {"a"}, {"p"});
    formula_ptr f = corpus::random_closed_formula(gen, 3, {"a"}, {"p"});
    std::vector<std::string> addresses = nu_addresses(f);
    if (addresses.empty()) continue;
    nu_annotation low, high;
    for (const std::string& addr : addresses) {
      std::uint32_t stage = static_cast<std::uint32_t>(gen() % 3);
      low[subformula_at(f, addr)->name] = stage;
      high[subformula_at(f, addr)->name] = stage + static_cast<std::uint32_t>(gen() % 3);
    }
    state_set at_high = approximant_semantics(f, high, model);
    state_set at_low = approximant_semantics(f, low, model);
    for (int s : at_high) CHECK(at_low.count(s) == 1);
  }
}

TEST_CASE("sequent validity") {
  std::mt19937_64 gen(139);
  for (int round = 0; round < 20; ++round) {
    lts model = corpus::random_lts(gen, 5, {"a"}, {"p"});
    CHECK(is_valid_sequent(parse_sequent("p, ~p"), model));
    CHECK(is_valid_sequent(parse_sequent("nu x. [a] x"), model));
  }
  lts deadlock = parse_model("states 1\n");
  CHECK_FALSE(is_valid_sequent(parse_sequent("mu x. <a> x"), deadlock));

  // free variables are quantified; too many of them exceed the budget
  lts model = parse_model("states 2\ntrans a 0 1\n");
  sequent open = make_sequent({make_var("v")});
  CHECK_FALSE(is_valid_sequent(open, model));
  sequent covered = make_sequent({make_var("v"), parse_formula("nu y. [a] y").parsed});
  CHECK(is_valid_sequent(covered, model));
  lts six = parse_model("states 6\n");
  std::vector<formula_ptr> many;
  for (int i = 0; i < 5; ++i) many.push_back(make_var("v" + std::to_string(i)));
  CHECK_THROWS_AS(is_valid_sequent(make_sequent(std::move(many)), six, 1 << 10),
                  budget_exceeded);
}

TEST_CASE("rule instance shapes") {
  auto rule = [](const std::string& schema, const std::string& conclusion,
                 std::vector<std::string> premises) {
    std::vector<sequent> parsed;
    for (const std::string& p : premises) parsed.push_back(parse_sequent(p));
    return make_rule(schema, parse_sequent(conclusion), parsed);
  };

  CHECK(validate_rule_instance(rule("Or", "p | p", {"p"})));
  CHECK(validate_rule_instance(rule("Ax", "p, ~p", {})));
  CHECK_FALSE(validate_rule_instance(rule("Ax", "p, ~q", {})));
  CHECK(validate_rule_instance(rule("Wk", "p, q", {"q"})));
  CHECK_FALSE(validate_rule_instance(rule("Wk", "p, q", {"p, q"})));
  CHECK(validate_rule_instance(rule("And", "p & q, r", {"p, r", "q, r"})));
  CHECK_FALSE(validate_rule_instance(rule("And", "p & q, r", {"q, r", "p, r"})));
  CHECK(validate_rule_instance(rule("Mod", "<a> p, [a] q", {"p, q"})));
  CHECK(validate_rule_instance(rule("Mod", "[a] q", {"q"})));
  CHECK_FALSE(validate_rule_instance(rule("Mod", "<a> p, [a] q, r", {"p, q, r"})));
  CHECK_FALSE(validate_rule_instance(rule("Mod", "<a> p, [b] q", {"p, q"})));
  CHECK(validate_rule_instance(rule("Nu", "nu x. [a] x", {"[a] nu x. [a] x"})));
  CHECK(validate_rule_instance(rule("Mu", "mu x. <a> x, p", {"<a> mu x. <a> x, p"})));
  CHECK_FALSE(validate_rule_instance(rule("Nu", "nu x. [a] x", {"[a] nu x. [b] x"})));
}

TEST_CASE("marked steps of the disjunction rule") {
  // conclusion { (nu x.[a]x) | p }: one nu inside the left disjunct
  sequent conclusion = parse_sequent("(nu x. [a] x) | p");
  sequent premise = parse_sequent("nu x. [a] x, p");
  rule_instance rule = make_rule("Or", conclusion, {premise});

  trace_structure t = mu_trace_structure();
  std::vector<trace_step> steps = t.steps(rule, 0);
  REQUIRE(steps.size() == 1);
  CHECK_FALSE(steps[0].progressing);
  CHECK(steps[0].source.token == render(conclusion.formulas[0]) + "#0");
  CHECK(steps[0].target.token == "nu x0. [a]x0#");
}

TEST_CASE("marked steps of the nu rule progress exactly on the principal mark") {
  sequent conclusion = parse_sequent("nu x. [a] x, q");
  sequent premise = parse_sequent("[a] nu x. [a] x, q");
  rule_instance rule = make_rule("Nu", conclusion, {premise});

  trace_structure t = mu_trace_structure();
  std::vector<trace_step> steps = t.steps(rule, 0);
  // q carries no marks; the principal has exactly one nu: its root
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].progressing);
  CHECK(steps[0].source.token == "nu x0. [a]x0#");
  CHECK(steps[0].target.token == "[a](nu x0. [a]x0)#0");

  // a nu inside a side formula travels unchanged and without progress
  sequent wide_conclusion = parse_sequent("nu x. [a] x, nu y. <b> y");
  sequent wide_premise = parse_sequent("[a] nu x. [a] x, nu y. <b> y");
  rule_instance wide = make_rule("Nu", wide_conclusion, {wide_premise});
  std::vector<trace_step> wide_steps = t.steps(wide, 0);
  REQUIRE(wide_steps.size() == 2);
  bool found_side = false;
  for (const trace_step& s : wide_steps)
    if (s.source.token == "nu x0. <b>x0#" && s.target.token == s.source.token &&
        !s.progressing)
      found_side = true;
  CHECK(found_side);
}

TEST_CASE("weakening keeps marks of survivors and drops the rest") {
  sequent conclusion = parse_sequent("nu x. [a] x, nu y. <b> y");
  sequent premise = parse_sequent("nu x. [a] x");
  rule_instance rule = make_rule("Wk", conclusion, {premise});
  std::vector<trace_step> steps = mu_trace_structure().steps(rule, 0);
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].source.token == "nu x0. [a]x0#");
  CHECK(steps[0].target.token == steps[0].source.token);
  CHECK_FALSE(steps[0].progressing);

  rule_instance axiom = make_rule("Ax", parse_sequent("p, ~p"), {});
  CHECK(mu_trace_structure().steps(axiom, 0).empty());
}

TEST_CASE("nu unfolding marks split per occurrence of the variable") {
  sequent conclusion = parse_sequent("nu x. [a] x & [b] x");
  formula_ptr fix = conclusion.formulas[0];
  sequent premise = make_sequent({unfold(fix)});
  rule_instance rule = make_rule("Nu", conclusion, {premise});
  std::vector<trace_step> steps = mu_trace_structure().steps(rule, 0);
  // two occurrences of x: two progressing steps from the root mark
  int progressing = 0;
  for (const trace_step& s : steps) progressing += s.progressing ? 1 : 0;
  CHECK(progressing == 2);
}

TEST_CASE("mu-calculus fixtures validate and decide as expected") {
  proof_system system = mu_proof_system();
  trace_structure t = mu_trace_structure();
  for (const corpus::mu_fixture& fixture : corpus::mu_fixtures()) {
    CAPTURE(fixture.name);
    CHECK(validate_preproof(system, fixture.proof).ok());
    CHECK(decide_gtc(fixture.proof, t).holds == fixture.expect_gtc);
  }
}

TEST_CASE("nu threads on the canonical cycles") {
  std::vector<corpus::mu_fixture> fixtures = corpus::mu_fixtures();
  auto fixture = [&](const std::string& name) -> const corpus::mu_fixture& {
    for (const corpus::mu_fixture& f : fixtures)
      if (f.name == name) return f;
    throw error("missing fixture " + name);
  };

  const corpus::mu_fixture& nu_box = fixture("nu-box1");
  lasso nu_lasso{{}, {{0, 0}, {1, 0}}};
  CHECK(nu_thread_check(nu_box.proof, nu_lasso));

  const corpus::mu_fixture& mu_box = fixture("mu-box1");
  CHECK_FALSE(nu_thread_check(mu_box.proof, nu_lasso));
}

TEST_CASE("nu threads coincide with the marked trace condition on every fixture lasso") {
  trace_structure t = mu_trace_structure();
  int lassos = 0;
  for (const corpus::mu_fixture& fixture : corpus::mu_fixtures()) {
    for (const lasso& l : corpus::enumerate_lassos(fixture.proof)) {
      CAPTURE(fixture.name);
      ++lassos;
      CHECK(nu_thread_check(fixture.proof, l) ==
            lasso_admits_progressing_trace(fixture.proof, t, l));
    }
  }
  CHECK(lassos >= 30);
}

TEST_CASE("the lifted decision agrees with the closure on small fixtures") {
  trace_structure t = mu_trace_structure();
  for (const corpus::mu_fixture& fixture : corpus::mu_fixtures()) {
    if (fixture.proof.node_count() > 4) continue;
    CAPTURE(fixture.name);
    CHECK(decide_gtc_via_lift(fixture.proof, t).holds == fixture.expect_gtc);
  }
}

TEST_CASE("the soundness harness accepts proofs and rejects non-proofs") {
  std::mt19937_64 gen(149);
  std::vector<lts> models;
  for (int i = 0; i < 10; ++i) models.push_back(corpus::random_lts(gen, 5, {"a", "b"}, {"p", "q"}));

  std::vector<corpus::mu_fixture> fixtures = corpus::mu_fixtures();
  for (const corpus::mu_fixture& fixture : fixtures) {
    CAPTURE(fixture.name);
    if (fixture.expect_gtc) {
      CHECK(soundness_harness(fixture.proof, models).ok());
    } else {
      CHECK_THROWS_AS(soundness_harness(fixture.proof, models), not_a_proof);
    }
  }
}

TEST_CASE("the validity algebra solves the axiom proof") {
  lts model = parse_model("states 2\nlabel p 0\ntrans a 0 1\n");
  corpus::mu_fixture axiom = corpus::mu_fixtures().front();
  REQUIRE(axiom.name == "axiom");
  algebra<bool> validity{[&model](const rule_instance& rule, const std::vector<bool>& children) {
    bool all = true;
    for (bool c : children) all = all && c;
    return all && is_valid_sequent(parse_sequent(rule.conclusion.text), model);
  }};
  std::vector<bool> values = solve(axiom.proof, validity);
  CHECK(values[0]);
}
