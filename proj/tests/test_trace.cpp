#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "nwp/corpus.hpp"

using namespace nwp;
using testing::graph_proof;
using testing::step_spec;
using testing::steps_structure;

namespace {

formula_token tok(const std::string& t) { return formula_token{t}; }

// brute-force oracle for composition: enumerate all witness triples
trace_matrix compose_by_enumeration(const trace_matrix& m1, const trace_matrix& m2) {
  trace_matrix out;
  out.domain = m1.domain;
  out.codomain = m2.codomain;
  for (const formula_token& a : m1.domain)
    for (const formula_token& c : m2.codomain)
      for (const formula_token& b : m1.codomain)
        for (bool p1 : {false, true})
          for (bool p2 : {false, true})
            if (m1.arcs.count({a, b, p1}) && m2.arcs.count({b, c, p2}))
              out.arcs.insert({a, c, p1 || p2});
  return out;
}

trace_structure drop_some_progress(const trace_structure& base) {
  // deterministically clear the progressing flag on roughly half the steps
  trace_structure out;
  out.fml = base.fml;
  out.steps = [steps = base.steps](const rule_instance& rule, int premise) {
    std::vector<trace_step> list = steps(rule, premise);
    std::size_t k = 0;
    for (trace_step& s : list)
      if (k++ % 2 == 0) s.progressing = false;
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    return list;
  };
  return out;
}

}  // namespace

TEST_CASE("step_matrix collects the registered arcs with the right frame") {
  pre_proof loop = graph_proof({{0}});
  trace_structure empty = steps_structure(loop, {}, {{"a", "b"}});
  trace_matrix none = step_matrix(empty, loop.rules[0], 0);
  CHECK(none.arcs.empty());
  CHECK(none.domain == formula_set{tok("a"), tok("b")});
  CHECK(none.codomain == none.domain);

  // the descending-sequence structure: one formula, one progressing self-step
  trace_structure ds_like = steps_structure(loop, {{0, 0, "*", "*", true}}, {{"*"}});
  trace_matrix m = step_matrix(ds_like, loop.rules[0], 0);
  REQUIRE(m.arcs.size() == 1);
  CHECK(m.arcs.count({tok("*"), tok("*"), true}) == 1);

  CHECK_THROWS_AS(step_matrix(ds_like, loop.rules[0], 1), error);
}

TEST_CASE("compose: unit, absorption, domain mismatch") {
  formula_set ab{tok("a"), tok("b")};
  trace_matrix m;
  m.domain = ab;
  m.codomain = ab;
  m.arcs = {{tok("a"), tok("b"), true}, {tok("b"), tok("b"), false}};

  CHECK(compose(m, identity_matrix(ab)) == m);
  CHECK(compose(identity_matrix(ab), m) == m);

  trace_matrix empty;
  empty.domain = ab;
  empty.codomain = ab;
  CHECK(compose(empty, m) == empty);

  trace_matrix other;
  other.domain = {tok("c")};
  other.codomain = ab;
  CHECK_THROWS_AS(compose(m, other), error);
}

TEST_CASE("compose agrees with witness enumeration on random matrices") {
  std::mt19937_64 gen(23);
  formula_set ab{tok("a"), tok("b")};
  auto random_matrix = [&]() {
    trace_matrix m;
    m.domain = ab;
    m.codomain = ab;
    for (const formula_token& x : ab)
      for (const formula_token& y : ab)
        for (bool p : {false, true})
          if (gen() % 3 == 0) m.arcs.insert({x, y, p});
    return m;
  };
  for (int round = 0; round < 200; ++round) {
    trace_matrix m1 = random_matrix();
    trace_matrix m2 = random_matrix();
    CHECK(compose(m1, m2) == compose_by_enumeration(m1, m2));
  }
}

TEST_CASE("compose keeps a non-progressing witness next to a progressing one") {
  formula_set one{tok("x")};
  trace_matrix both;
  both.domain = one;
  both.codomain = one;
  both.arcs = {{tok("x"), tok("x"), true}, {tok("x"), tok("x"), false}};
  trace_matrix square = compose(both, both);
  CHECK(square.arcs.count({tok("x"), tok("x"), true}) == 1);
  CHECK(square.arcs.count({tok("x"), tok("x"), false}) == 1);
}

TEST_CASE("decide_gtc on the three canonical self-loops") {
  pre_proof loop = graph_proof({{0}});

  trace_structure non_progressing = steps_structure(loop, {{0, 0, "*", "*", false}}, {{"*"}});
  gtc_verdict bad = decide_gtc(loop, non_progressing);
  REQUIRE_FALSE(bad.holds);
  REQUIRE(bad.counterexample.has_value());
  CHECK(bad.counterexample->prefix.empty());
  CHECK(bad.counterexample->cycle == std::vector<std::pair<node_id, int>>{{0, 0}});
  CHECK_FALSE(lasso_admits_progressing_trace(loop, non_progressing, *bad.counterexample));

  trace_structure progressing = steps_structure(loop, {{0, 0, "*", "*", true}}, {{"*"}});
  CHECK(decide_gtc(loop, progressing).holds);

  // no formulas at all: no trace can progress
  trace_structure empty_fml = steps_structure(loop, {}, {{}});
  CHECK_FALSE(decide_gtc(loop, empty_fml).holds);
}

TEST_CASE("decide_gtc holds when a progressing witness rides beside a non-progressing one") {
  pre_proof loop = graph_proof({{0}});
  trace_structure both =
      steps_structure(loop, {{0, 0, "*", "*", true}, {0, 0, "*", "*", false}}, {{"*"}});
  CHECK(decide_gtc(loop, both).holds);
}

TEST_CASE("decide_gtc fails when the only progressing branch dies") {
  // x survives forever without progress; the progressing branch into y has
  // no continuation at node 1
  pre_proof cycle = graph_proof({{1}, {0}});
  trace_structure t = steps_structure(
      cycle, {{0, 0, "x", "x", false}, {0, 0, "x", "y", true}, {1, 0, "x", "x", false}},
      {{"x", "y"}, {"x", "y"}});
  gtc_verdict verdict = decide_gtc(cycle, t);
  CHECK_FALSE(verdict.holds);
  REQUIRE(verdict.counterexample.has_value());
  CHECK_FALSE(lasso_admits_progressing_trace(cycle, t, *verdict.counterexample));

  // and the mirror image where the trace alternates and does progress
  trace_structure good = steps_structure(
      cycle, {{0, 0, "x", "y", true}, {1, 0, "y", "x", false}}, {{"x", "y"}, {"x", "y"}});
  CHECK(decide_gtc(cycle, good).holds);
}

TEST_CASE("well-founded pre-proofs satisfy the GTC for every structure") {
  std::mt19937_64 gen(31);
  int rounds = 0;
  while (rounds < 40) {
    corpus::instance_options options;
    options.extra_edge_prob = 0.25;
    corpus::generated_instance inst = corpus::random_instance(gen, options);
    if (!is_well_founded(inst.proof).well_founded) continue;
    ++rounds;
    CHECK(decide_gtc(inst.proof, inst.structure).holds);
    CHECK(brute_force_gtc(inst.proof, inst.structure, 4).holds);
  }
}

TEST_CASE("brute force and closure agree on small random instances") {
  std::mt19937_64 gen(37);
  for (int round = 0; round < 60; ++round) {
    corpus::instance_options options;
    options.max_nodes = 5;
    options.max_fml = 2;
    corpus::generated_instance inst = corpus::random_instance(gen, options);
    int bound = inst.proof.node_count() * (1 + inst.max_fml);
    gtc_verdict closure = decide_gtc(inst.proof, inst.structure);
    gtc_verdict brute = brute_force_gtc(inst.proof, inst.structure, bound);
    CHECK(closure.holds == brute.holds);
    if (!closure.holds)
      CHECK_FALSE(lasso_admits_progressing_trace(inst.proof, inst.structure,
                                                 *closure.counterexample));
    if (!brute.holds)
      CHECK_FALSE(lasso_admits_progressing_trace(inst.proof, inst.structure,
                                                 *brute.counterexample));
  }
}

TEST_CASE("removing progress never turns failure into success") {
  std::mt19937_64 gen(41);
  for (int round = 0; round < 60; ++round) {
    corpus::generated_instance inst = corpus::random_instance(gen, {});
    if (decide_gtc(inst.proof, inst.structure).holds) continue;
    CHECK_FALSE(decide_gtc(inst.proof, drop_some_progress(inst.structure)).holds);
  }
}

TEST_CASE("recursiveness via the identity trace structure matches well-foundedness") {
  CHECK(check_recursive_via_gtc(graph_proof({{1, 2}, {}, {}})));
  CHECK_FALSE(check_recursive_via_gtc(graph_proof({{1}, {0}})));

  std::mt19937_64 gen(43);
  for (int round = 0; round < 100; ++round) {
    pre_proof proof = corpus::random_preproof(gen, 8, 0.4);
    CHECK(check_recursive_via_gtc(proof) == is_well_founded(proof).well_founded);
  }
}

TEST_CASE("reindexing along the identity morphism is an isomorphism") {
  pre_proof proof = graph_proof({{1, 0}, {}});
  proof_system_morphism identity;
  for (node_id v = 0; v < proof.node_count(); ++v)
    identity.judgement_map.push_back({proof.judgements[v], proof.judgements[v]});
  for (node_id v = 0; v < proof.node_count(); ++v) {
    morphism_rule entry;
    entry.upstairs = proof.rules[v];
    entry.downstairs = proof.rules[v];
    for (int i = 0; i < proof.rules[v].arity(); ++i) entry.premise_map.push_back(i);
    identity.rules.push_back(std::move(entry));
  }

  CHECK(validate_morphism(identity, proof).ok());
  pre_proof reindexed = reindex_preproof(identity, proof);
  CHECK(reindexed.node_count() == proof.node_count());
  CHECK(make_labelled_graph(reindexed).edges.size() == make_labelled_graph(proof).edges.size());
}

TEST_CASE("a missing rule lift is a morphism violation") {
  pre_proof proof = graph_proof({{}});
  proof_system_morphism f;
  f.judgement_map.push_back({judgement{"J0@0"}, proof.judgements[0]});
  f.judgement_map.push_back({judgement{"J0@1"}, proof.judgements[0]});
  morphism_rule entry;
  entry.upstairs = proof.rules[0];
  entry.upstairs.rule_id = "r0@0";
  entry.upstairs.conclusion = judgement{"J0@0"};
  entry.downstairs = proof.rules[0];
  f.rules.push_back(entry);  // nothing lifts r0 over J0@1

  CHECK_FALSE(validate_morphism(f, proof).ok());
  CHECK_THROWS_AS(reindex_preproof(f, proof), error);
}

TEST_CASE("reindexed labelled graphs project onto the base labelled graph") {
  std::mt19937_64 gen(47);
  for (int round = 0; round < 30; ++round) {
    pre_proof proof = corpus::random_preproof(gen, 5, 0.5);
    proof_system_morphism f = corpus::random_morphism(gen, proof, 2);
    REQUIRE(validate_morphism(f, proof).ok());
    pre_proof reindexed = reindex_preproof(f, proof);

    // recover the base pair (node, fibre member) from the construction order
    std::vector<node_id> base_of;
    std::vector<std::pair<judgement, const morphism_rule*>> upstairs_info;
    for (node_id v = 0; v < proof.node_count(); ++v)
      for (const judgement& up : f.fibre(proof.judgements[v])) {
        (void)up;
        base_of.push_back(v);
      }
    REQUIRE(static_cast<int>(base_of.size()) == reindexed.node_count());

    for (node_id v = 0; v < reindexed.node_count(); ++v) {
      const rule_instance& rule = reindexed.rules[v];
      const morphism_rule* entry = nullptr;
      for (const morphism_rule& candidate : f.rules)
        if (candidate.upstairs.rule_id == rule.rule_id) entry = &candidate;
      REQUIRE(entry != nullptr);
      for (int i = 0; i < rule.arity(); ++i) {
        node_id child = reindexed.children[v][i];
        // the projected edge exists in the base graph with the mapped label
        CHECK(proof.children[base_of[v]][entry->premise_map[i]] == base_of[child]);
      }
    }
  }
}

TEST_CASE("pullback along the identity leaves the structure unchanged") {
  pre_proof loop = graph_proof({{0}});
  trace_structure t = steps_structure(loop, {{0, 0, "*", "*", true}}, {{"*"}});
  proof_system_morphism identity;
  identity.judgement_map.push_back({loop.judgements[0], loop.judgements[0]});
  morphism_rule entry;
  entry.upstairs = loop.rules[0];
  entry.downstairs = loop.rules[0];
  entry.premise_map = {0};
  identity.rules.push_back(entry);

  trace_structure pulled = pullback_trace_structure(identity, t);
  CHECK(pulled.fml(loop.judgements[0]) == t.fml(loop.judgements[0]));
  CHECK(pulled.steps(loop.rules[0], 0) == t.steps(loop.rules[0], 0));
}

TEST_CASE("base change preserves the GTC") {
  std::mt19937_64 gen(53);
  int preserved = 0;
  while (preserved < 25) {
    corpus::instance_options options;
    options.max_nodes = 4;
    options.max_fml = 2;
    options.prog_prob = 0.8;
    corpus::generated_instance inst = corpus::random_instance(gen, options);
    if (!decide_gtc(inst.proof, inst.structure).holds) continue;
    ++preserved;
    proof_system_morphism f = corpus::random_morphism(gen, inst.proof, 2);
    pre_proof reindexed = reindex_preproof(f, inst.proof);
    trace_structure pulled = pullback_trace_structure(f, inst.structure);
    CHECK(decide_gtc(reindexed, pulled).holds);
  }
}

TEST_CASE("decide_gtc rejects ill-typed structures") {
  pre_proof loop = graph_proof({{0}});
  trace_structure bad = steps_structure(loop, {{0, 0, "ghost", "*", false}}, {{"*"}});
  CHECK_THROWS_AS(decide_gtc(loop, bad), error);
}
