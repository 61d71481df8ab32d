#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "nwp/corpus.hpp"
#include "nwp/ds.hpp"

using namespace nwp;
using testing::anything_goes;
using testing::graph_proof;

namespace {

// independent oracle: recursive reachability of a cycle
bool has_cycle_dfs(const pre_proof& proof, node_id v, std::vector<int>& state) {
  state[v] = 1;
  for (node_id m : proof.children[v]) {
    if (state[m] == 1) return true;
    if (state[m] == 0 && has_cycle_dfs(proof, m, state)) return true;
  }
  state[v] = 2;
  return false;
}

bool has_cycle(const pre_proof& proof) {
  std::vector<int> state(proof.judgements.size(), 0);
  for (node_id v = 0; v < proof.node_count(); ++v)
    if (state[v] == 0 && has_cycle_dfs(proof, v, state)) return true;
  return false;
}

// independent oracle: tree-unfolding size, sharing counted multiply
long unfolding_size(const pre_proof& proof, node_id v) {
  long total = 1;
  for (node_id m : proof.children[v]) total += unfolding_size(proof, m);
  return total;
}

}  // namespace

TEST_CASE("validate_preproof accepts the smallest pre-proof") {
  pre_proof proof = graph_proof({{}});
  CHECK(validate_preproof(anything_goes(), proof).ok());
}

TEST_CASE("validate_preproof flags a premise mismatch") {
  pre_proof proof = graph_proof({{1}, {}});
  proof.rules[0].premises[0] = judgement{"somewhere else"};
  validation_report report = validate_preproof(anything_goes(), proof);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations[0].node == 0);
}

TEST_CASE("validate_preproof flags unreachable nodes and bad roots") {
  pre_proof proof = graph_proof({{}, {}});  // node 1 unreachable from root 0
  validation_report report = validate_preproof(anything_goes(), proof);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations[0].node == 1);

  proof.roots = {0, 1};
  CHECK(validate_preproof(anything_goes(), proof).ok());

  proof.roots = {};
  CHECK_FALSE(validate_preproof(anything_goes(), proof).ok());
}

TEST_CASE("validate_preproof applies the system predicate") {
  pre_proof proof = graph_proof({{}});
  proof_system picky;
  picky.name = "picky";
  picky.validate = [](const rule_instance& rule) { return rule.schema == "expected"; };
  CHECK_FALSE(validate_preproof(picky, proof).ok());
}

TEST_CASE("labelled graph of a self-loop and of a small tree") {
  pre_proof loop = graph_proof({{0}});
  labelled_graph graph = make_labelled_graph(loop);
  REQUIRE(graph.edges.size() == 1);
  CHECK(graph.edges[0] == labelled_edge{0, 0, 0});

  pre_proof tree = graph_proof({{1, 2}, {}, {}});
  labelled_graph tree_graph = make_labelled_graph(tree);
  CHECK(tree_graph.edges.size() == 2);
  CHECK(tree_graph.edges[0].source == 0);
  CHECK(tree_graph.edges[1].source == 0);
}

TEST_CASE("ds abstraction has exactly one edge per abstract state") {
  ds::stream_spec spec{{4, 2}, {3, 7, 6, 5, 9}};
  ds::abstraction abs = ds::abstract_preproof(spec);
  labelled_graph graph = make_labelled_graph(abs.proof);
  CHECK(graph.edges.size() == abs.proof.judgements.size());
}

TEST_CASE("well-foundedness is acyclicity") {
  CHECK(is_well_founded(graph_proof({{1, 2}, {}, {}})).well_founded);

  wf_verdict loop = is_well_founded(graph_proof({{0}}));
  REQUIRE_FALSE(loop.well_founded);
  CHECK(loop.cycle == std::vector<node_id>{0});
}

TEST_CASE("well-foundedness agrees with an independent cycle search") {
  std::mt19937_64 gen(7);
  for (int round = 0; round < 50; ++round) {
    pre_proof proof = corpus::random_preproof(gen, 20, 0.4);
    CHECK(is_well_founded(proof).well_founded == !has_cycle(proof));
  }

  // a 20-node DAG, then one deliberate back edge
  std::vector<std::vector<node_id>> children(20);
  for (node_id v = 0; v < 19; ++v) children[v].push_back(v + 1);
  children[4].push_back(11);
  pre_proof dag = graph_proof(children);
  CHECK(is_well_founded(dag).well_founded);

  children[17].push_back(3);
  pre_proof cyclic = graph_proof(children);
  wf_verdict verdict = is_well_founded(cyclic);
  REQUIRE_FALSE(verdict.well_founded);
  CHECK(has_cycle(cyclic));
  // the reported cycle really is one
  for (std::size_t i = 0; i < verdict.cycle.size(); ++i) {
    node_id from = verdict.cycle[i];
    node_id to = verdict.cycle[(i + 1) % verdict.cycle.size()];
    const auto& kids = cyclic.children[from];
    CHECK(std::find(kids.begin(), kids.end(), to) != kids.end());
  }
}

TEST_CASE("solve: constant algebra maps every node to the constant") {
  pre_proof proof = graph_proof({{1, 2}, {2}, {}});
  algebra<int> constant{[](const rule_instance&, const std::vector<int>&) { return 42; }};
  std::vector<int> values = solve(proof, constant);
  for (int v : values) CHECK(v == 42);
}

TEST_CASE("solve: size algebra equals the tree-unfolding oracle on shared DAGs") {
  algebra<long> size{[](const rule_instance&, const std::vector<long>& children) {
    long total = 1;
    for (long c : children) total += c;
    return total;
  }};
  std::mt19937_64 gen(11);
  int solved = 0;
  while (solved < 30) {
    pre_proof proof = corpus::random_preproof(gen, 10, 0.4);
    if (!is_well_founded(proof).well_founded) continue;
    ++solved;
    std::vector<long> values = solve(proof, size);
    for (node_id v = 0; v < proof.node_count(); ++v)
      CHECK(values[v] == unfolding_size(proof, v));
  }
}

TEST_CASE("solve fails with the cycle on non-wellfounded input") {
  pre_proof proof = graph_proof({{1}, {0}});
  algebra<int> constant{[](const rule_instance&, const std::vector<int>&) { return 0; }};
  CHECK_THROWS_AS(solve(proof, constant), not_well_founded);
}

TEST_CASE("a rejecting algebra surfaces as an algebra failure") {
  pre_proof proof = graph_proof({{1}, {}});
  algebra<int> picky{[](const rule_instance& rule, const std::vector<int>&) -> int {
    if (rule.rule_id == "r0") throw algebra_failure("r0 rejected");
    return 1;
  }};
  CHECK_THROWS_AS(solve(proof, picky), algebra_failure);
}

TEST_CASE("solve: any two topological orders give the same values") {
  std::mt19937_64 gen(13);
  algebra<long> mix{[](const rule_instance& rule, const std::vector<long>& children) {
    long total = static_cast<long>(rule.rule_id.size());
    for (std::size_t i = 0; i < children.size(); ++i)
      total += children[i] * static_cast<long>(i + 3);
    return total;
  }};
  int rounds = 0;
  while (rounds < 20) {
    pre_proof proof = corpus::random_preproof(gen, 12, 0.3);
    if (!is_well_founded(proof).well_founded) continue;
    ++rounds;
    std::vector<long> via_solve = solve(proof, mix);

    // independent evaluation in reverse declaration order, iterating until
    // settled: another valid evaluation strategy
    std::vector<long> values(proof.judgements.size(), 0);
    std::vector<bool> ready(proof.judgements.size(), false);
    bool progress = true;
    while (progress) {
      progress = false;
      for (node_id v = proof.node_count() - 1; v >= 0; --v) {
        if (ready[v]) continue;
        bool all = true;
        for (node_id m : proof.children[v]) all = all && ready[m];
        if (!all) continue;
        std::vector<long> child_values;
        for (node_id m : proof.children[v]) child_values.push_back(values[m]);
        values[v] = mix.eval(proof.rules[v], child_values);
        ready[v] = true;
        progress = true;
      }
    }
    CHECK(values == via_solve);
  }
}

TEST_CASE("labelled graph edges biject with (node, premise) pairs") {
  std::mt19937_64 gen(17);
  for (int round = 0; round < 30; ++round) {
    pre_proof proof = corpus::random_preproof(gen, 8, 0.5);
    labelled_graph graph = make_labelled_graph(proof);
    std::size_t pairs = 0;
    for (node_id v = 0; v < proof.node_count(); ++v) pairs += proof.children[v].size();
    CHECK(graph.edges.size() == pairs);
    std::set<std::pair<node_id, int>> seen;
    for (const labelled_edge& e : graph.edges) seen.insert({e.source, e.premise});
    CHECK(seen.size() == pairs);
  }
}
