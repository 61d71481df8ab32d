#include "nwp/core.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace nwp {

not_well_founded::not_well_founded(std::vector<node_id> c)
    : error("pre-proof is not well-founded"), cycle(std::move(c)) {}

formula_set make_formula_set(std::vector<formula_token> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

namespace {

bool in_range(const pre_proof& proof, node_id n) {
  return n >= 0 && n < proof.node_count();
}

}  // namespace

validation_report validate_preproof(const proof_system& system, const pre_proof& proof) {
  validation_report report;
  auto bad = [&](node_id n, std::string what) {
    report.violations.push_back({n, std::move(what)});
  };

  const auto n = proof.judgements.size();
  if (proof.rules.size() != n || proof.children.size() != n) {
    bad(-1, "node tables have inconsistent sizes");
    return report;
  }
  if (proof.roots.empty()) bad(-1, "no roots declared");
  for (node_id r : proof.roots)
    if (!in_range(proof, r)) bad(-1, "root " + std::to_string(r) + " out of range");
  if (!report.ok()) return report;

  for (node_id v = 0; v < proof.node_count(); ++v) {
    const rule_instance& rule = proof.rules[v];
    if (rule.conclusion != proof.judgements[v])
      bad(v, "rule conclusion '" + rule.conclusion.text + "' differs from node judgement '" +
                 proof.judgements[v].text + "'");
    const auto& kids = proof.children[v];
    if (static_cast<int>(kids.size()) != rule.arity())
      bad(v, "node has " + std::to_string(kids.size()) + " children but rule arity is " +
                 std::to_string(rule.arity()));
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (!in_range(proof, kids[i])) {
        bad(v, "child " + std::to_string(i) + " out of range");
        continue;
      }
      if (i < rule.premises.size() && proof.judgements[kids[i]] != rule.premises[i])
        bad(v, "premise " + std::to_string(i) + " expects '" + rule.premises[i].text +
                   "' but child renders '" + proof.judgements[kids[i]].text + "'");
    }
    if (system.validate && !system.validate(rule))
      bad(v, "rule instance '" + rule.rule_id + "' rejected by system '" + system.name + "'");
  }

  // Every node must be reachable from some root.
  std::vector<bool> seen(n, false);
  std::deque<node_id> queue;
  for (node_id r : proof.roots)
    if (!seen[r]) {
      seen[r] = true;
      queue.push_back(r);
    }
  while (!queue.empty()) {
    node_id v = queue.front();
    queue.pop_front();
    for (node_id m : proof.children[v])
      if (in_range(proof, m) && !seen[m]) {
        seen[m] = true;
        queue.push_back(m);
      }
  }
  for (node_id v = 0; v < proof.node_count(); ++v)
    if (!seen[v]) bad(v, "node unreachable from every root");

  return report;
}

labelled_graph make_labelled_graph(const pre_proof& proof) {
  labelled_graph graph;
  graph.node_count = proof.node_count();
  for (node_id v = 0; v < proof.node_count(); ++v)
    for (std::size_t i = 0; i < proof.children[v].size(); ++i)
      graph.edges.push_back({v, static_cast<int>(i), proof.children[v][i]});
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

wf_verdict is_well_founded(const pre_proof& proof) {
  // Iterative DFS; the first back edge found yields a concrete cycle.
  enum class colour { white, grey, black };
  std::vector<colour> state(proof.judgements.size(), colour::white);
  std::vector<node_id> stack;

  struct frame {
    node_id node;
    std::size_t next_child = 0;
  };

  for (node_id start = 0; start < proof.node_count(); ++start) {
    if (state[start] != colour::white) continue;
    std::vector<frame> frames{{start}};
    state[start] = colour::grey;
    stack.push_back(start);
    while (!frames.empty()) {
      frame& top = frames.back();
      if (top.next_child < proof.children[top.node].size()) {
        node_id m = proof.children[top.node][top.next_child++];
        if (state[m] == colour::grey) {
          auto it = std::find(stack.begin(), stack.end(), m);
          return {false, std::vector<node_id>(it, stack.end())};
        }
        if (state[m] == colour::white) {
          state[m] = colour::grey;
          stack.push_back(m);
          frames.push_back({m});
        }
      } else {
        state[top.node] = colour::black;
        stack.pop_back();
        frames.pop_back();
      }
    }
  }
  return {true, {}};
}

std::vector<node_id> topological_order(const pre_proof& proof) {
  wf_verdict wf = is_well_founded(proof);
  if (!wf.well_founded) throw not_well_founded(wf.cycle);

  // Kahn over reversed edges: children come out before their parents.
  std::vector<int> pending(proof.judgements.size(), 0);
  for (node_id v = 0; v < proof.node_count(); ++v)
    pending[v] = static_cast<int>(proof.children[v].size());
  std::vector<std::vector<node_id>> parents(proof.judgements.size());
  for (node_id v = 0; v < proof.node_count(); ++v)
    for (node_id m : proof.children[v]) parents[m].push_back(v);

  std::set<node_id> ready;
  for (node_id v = 0; v < proof.node_count(); ++v)
    if (pending[v] == 0) ready.insert(v);
  std::vector<node_id> order;
  while (!ready.empty()) {
    node_id v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (node_id p : parents[v])
      if (--pending[p] == 0) ready.insert(p);
  }
  return order;
}

std::vector<std::pair<node_id, int>> root_path(const pre_proof& proof, node_id target) {
  std::vector<std::pair<node_id, int>> parent(proof.judgements.size(), {-1, -1});
  std::vector<bool> seen(proof.judgements.size(), false);
  std::deque<node_id> queue;
  for (node_id r : proof.roots)
    if (!seen[r]) {
      seen[r] = true;
      queue.push_back(r);
    }
  while (!queue.empty()) {
    node_id v = queue.front();
    queue.pop_front();
    if (v == target) break;
    for (std::size_t i = 0; i < proof.children[v].size(); ++i) {
      node_id m = proof.children[v][i];
      if (!seen[m]) {
        seen[m] = true;
        parent[m] = {v, static_cast<int>(i)};
        queue.push_back(m);
      }
    }
  }
  if (!seen[target]) throw error("root_path: node unreachable from roots");
  std::vector<std::pair<node_id, int>> path;
  node_id cur = target;
  while (parent[cur].first != -1) {
    path.push_back({parent[cur].first, parent[cur].second});
    cur = parent[cur].first;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace nwp
