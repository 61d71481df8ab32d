#include "nwp/trace.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

namespace nwp {

trace_matrix identity_matrix(const formula_set& over) {
  trace_matrix m;
  m.domain = over;
  m.codomain = over;
  for (const formula_token& t : over) m.arcs.insert({t, t, false});
  return m;
}

trace_structure make_table_trace_structure(
    std::map<judgement, formula_set> fml,
    std::map<std::pair<std::string, int>, std::vector<trace_step>> steps) {
  auto fml_table = std::make_shared<std::map<judgement, formula_set>>(std::move(fml));
  auto step_table =
      std::make_shared<std::map<std::pair<std::string, int>, std::vector<trace_step>>>(
          std::move(steps));
  trace_structure t;
  t.fml = [fml_table](const judgement& j) {
    auto it = fml_table->find(j);
    return it == fml_table->end() ? formula_set{} : it->second;
  };
  t.steps = [step_table](const rule_instance& rule, int premise) {
    auto it = step_table->find({rule.rule_id, premise});
    return it == step_table->end() ? std::vector<trace_step>{} : it->second;
  };
  return t;
}

trace_matrix step_matrix(const trace_structure& structure, const rule_instance& rule, int premise) {
  if (premise < 0 || premise >= rule.arity())
    throw error("step_matrix: premise index " + std::to_string(premise) + " out of range for rule '" +
                rule.rule_id + "'");
  trace_matrix m;
  m.domain = structure.fml(rule.conclusion);
  m.codomain = structure.fml(rule.premises[premise]);
  for (const trace_step& s : structure.steps(rule, premise))
    m.arcs.insert({s.source, s.target, s.progressing});
  return m;
}

trace_matrix compose(const trace_matrix& m1, const trace_matrix& m2) {
  if (m1.codomain != m2.domain) throw error("compose: domain mismatch");
  trace_matrix out;
  out.domain = m1.domain;
  out.codomain = m2.codomain;
  for (const trace_arc& a : m1.arcs)
    for (const trace_arc& b : m2.arcs)
      if (a.target == b.source) out.arcs.insert({a.source, b.target, a.progressing || b.progressing});
  return out;
}

validation_report validate_trace_structure(const pre_proof& proof, const trace_structure& structure) {
  validation_report report;
  std::map<judgement, formula_set> fml_cache;
  auto fml_of = [&](const judgement& j) -> const formula_set& {
    auto it = fml_cache.find(j);
    if (it == fml_cache.end()) it = fml_cache.emplace(j, structure.fml(j)).first;
    return it->second;
  };
  auto contains = [](const formula_set& set, const formula_token& t) {
    return std::binary_search(set.begin(), set.end(), t);
  };
  for (node_id v = 0; v < proof.node_count(); ++v) {
    const rule_instance& rule = proof.rules[v];
    const formula_set& conclusion_fml = fml_of(rule.conclusion);
    for (int i = 0; i < rule.arity(); ++i) {
      const formula_set& premise_fml = fml_of(rule.premises[i]);
      for (const trace_step& s : structure.steps(rule, i)) {
        if (!contains(conclusion_fml, s.source))
          report.violations.push_back(
              {v, "step source '" + s.source.token + "' not in fml of conclusion of rule '" +
                      rule.rule_id + "'"});
        if (!contains(premise_fml, s.target))
          report.violations.push_back(
              {v, "step target '" + s.target.token + "' not in fml of premise " + std::to_string(i) +
                      " of rule '" + rule.rule_id + "'"});
      }
    }
  }
  return report;
}

namespace {

struct closure_item {
  node_id src;
  node_id dst;
  trace_matrix matrix;
  int parent;  // -1 for single edges
  labelled_edge edge;
};

std::vector<std::pair<node_id, int>> closure_witness(const std::vector<closure_item>& items, int index) {
  std::vector<std::pair<node_id, int>> steps;
  for (int i = index; i != -1; i = items[i].parent)
    steps.push_back({items[i].edge.source, items[i].edge.premise});
  std::reverse(steps.begin(), steps.end());
  return steps;
}

std::uint64_t closure_size_bound(const pre_proof& proof, std::size_t max_fml) {
  // node pairs x matrices over at most max_fml^2 arc slots, four states each
  // (absent / progressing / non-progressing / both).
  const std::uint64_t cap = 200'000'000ULL;
  std::uint64_t pairs = static_cast<std::uint64_t>(proof.node_count()) * proof.node_count();
  std::uint64_t slots = static_cast<std::uint64_t>(max_fml) * max_fml;
  if (slots > 13) return cap;
  std::uint64_t matrices = 1;
  for (std::uint64_t i = 0; i < slots; ++i) {
    matrices *= 4;
    if (matrices > cap) return cap;
  }
  std::uint64_t bound = pairs * matrices;
  return bound > cap ? cap : bound;
}

bool has_progressing_self_arc(const trace_matrix& m) {
  for (const trace_arc& a : m.arcs)
    if (a.progressing && a.source == a.target) return true;
  return false;
}

}  // namespace

void check_lasso(const pre_proof& proof, const lasso& l) {
  if (l.cycle.empty()) throw error("lasso: empty cycle");
  auto check_step = [&](std::pair<node_id, int> step, node_id expected_next) {
    auto [n, i] = step;
    if (n < 0 || n >= proof.node_count()) throw error("lasso: node out of range");
    if (i < 0 || i >= static_cast<int>(proof.children[n].size()))
      throw error("lasso: premise index out of range");
    if (proof.children[n][i] != expected_next) throw error("lasso: not a path in the labelled graph");
  };
  for (std::size_t k = 0; k < l.prefix.size(); ++k) {
    node_id next = (k + 1 < l.prefix.size()) ? l.prefix[k + 1].first : l.cycle.front().first;
    check_step(l.prefix[k], next);
  }
  for (std::size_t k = 0; k < l.cycle.size(); ++k) {
    node_id next = (k + 1 < l.cycle.size()) ? l.cycle[k + 1].first : l.cycle.front().first;
    check_step(l.cycle[k], next);
  }
}

gtc_verdict decide_gtc(const pre_proof& proof, const trace_structure& structure) {
  validation_report typing = validate_trace_structure(proof, structure);
  if (!typing.ok()) throw error("decide_gtc: ill-typed trace structure: " + typing.violations[0].what);

  labelled_graph graph = make_labelled_graph(proof);
  std::vector<std::vector<labelled_edge>> out(proof.node_count());
  for (const labelled_edge& e : graph.edges) out[e.source].push_back(e);

  std::map<judgement, formula_set> fml_cache;
  std::size_t max_fml = 0;
  for (node_id v = 0; v < proof.node_count(); ++v) {
    auto it = fml_cache.find(proof.judgements[v]);
    if (it == fml_cache.end())
      it = fml_cache.emplace(proof.judgements[v], structure.fml(proof.judgements[v])).first;
    max_fml = std::max(max_fml, it->second.size());
  }
  const std::uint64_t size_bound = closure_size_bound(proof, max_fml);

  std::map<labelled_edge, trace_matrix> edge_matrix;
  for (const labelled_edge& e : graph.edges)
    edge_matrix.emplace(e, step_matrix(structure, proof.rules[e.source], e.premise));

  std::vector<closure_item> items;
  std::set<std::tuple<node_id, node_id, trace_matrix>> seen;
  for (const labelled_edge& e : graph.edges) {
    const trace_matrix& m = edge_matrix.at(e);
    if (seen.insert({e.source, e.target, m}).second)
      items.push_back({e.source, e.target, m, -1, e});
  }
  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    // items grow while iterating; closure by right extension with edges
    node_id mid = items[idx].dst;
    for (const labelled_edge& e : out[mid]) {
      trace_matrix extended = compose(items[idx].matrix, edge_matrix.at(e));
      if (seen.insert({items[idx].src, e.target, extended}).second) {
        items.push_back({items[idx].src, e.target, std::move(extended), static_cast<int>(idx), e});
        if (items.size() > size_bound) throw error("decide_gtc: composition closure exceeded its size bound");
      }
    }
  }

  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    const closure_item& item = items[idx];
    if (item.src != item.dst) continue;
    if (!(compose(item.matrix, item.matrix) == item.matrix)) continue;
    if (has_progressing_self_arc(item.matrix)) continue;
    lasso witness;
    witness.prefix = root_path(proof, item.src);
    witness.cycle = closure_witness(items, static_cast<int>(idx));
    return {false, std::move(witness)};
  }
  return {true, std::nullopt};
}

bool lasso_admits_progressing_trace(const pre_proof& proof, const trace_structure& structure,
                                    const lasso& l) {
  check_lasso(proof, l);

  std::vector<std::pair<node_id, int>> positions = l.prefix;
  positions.insert(positions.end(), l.cycle.begin(), l.cycle.end());
  const std::size_t count = positions.size();
  const std::size_t wrap = l.prefix.size();
  auto successor = [&](std::size_t p) { return p + 1 < count ? p + 1 : wrap; };

  // product nodes (position, formula)
  std::vector<formula_set> fml_at(count);
  std::map<std::pair<std::size_t, formula_token>, int> index;
  std::vector<std::pair<std::size_t, formula_token>> nodes;
  for (std::size_t p = 0; p < count; ++p) {
    fml_at[p] = structure.fml(proof.judgements[positions[p].first]);
    for (const formula_token& t : fml_at[p]) {
      index[{p, t}] = static_cast<int>(nodes.size());
      nodes.push_back({p, t});
    }
  }

  struct product_arc {
    int src, dst;
    bool progressing;
  };
  std::vector<product_arc> arcs;
  std::vector<std::vector<int>> adjacency(nodes.size());
  for (std::size_t p = 0; p < count; ++p) {
    auto [n, premise] = positions[p];
    std::size_t q = successor(p);
    for (const trace_step& s : structure.steps(proof.rules[n], premise)) {
      auto src = index.find({p, s.source});
      auto dst = index.find({q, s.target});
      if (src == index.end() || dst == index.end()) continue;
      adjacency[src->second].push_back(static_cast<int>(arcs.size()));
      arcs.push_back({src->second, dst->second, s.progressing});
    }
  }

  // Tarjan SCC (iterative); a progressing arc inside one component lies on a
  // cycle, yielding an infinitely progressing trace on a suffix.
  const int n = static_cast<int>(nodes.size());
  std::vector<int> order(n, -1), low(n, 0), component(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_order = 0, next_component = 0;
  struct frame {
    int v;
    std::size_t next;
  };
  for (int start = 0; start < n; ++start) {
    if (order[start] != -1) continue;
    std::vector<frame> frames{{start, 0}};
    order[start] = low[start] = next_order++;
    stack.push_back(start);
    on_stack[start] = true;
    while (!frames.empty()) {
      frame& top = frames.back();
      if (top.next < adjacency[top.v].size()) {
        int w = arcs[adjacency[top.v][top.next++]].dst;
        if (order[w] == -1) {
          order[w] = low[w] = next_order++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[top.v] = std::min(low[top.v], order[w]);
        }
      } else {
        int v = top.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
        if (low[v] == order[v]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            component[w] = next_component;
            if (w == v) break;
          }
          ++next_component;
        }
      }
    }
  }
  for (const product_arc& a : arcs)
    if (a.progressing && component[a.src] == component[a.dst]) return true;
  return false;
}

gtc_verdict brute_force_gtc(const pre_proof& proof, const trace_structure& structure, int bound) {
  if (bound < 1) throw error("brute_force_gtc: bound must be at least 1");

  std::vector<std::vector<std::pair<int, node_id>>> out(proof.node_count());
  for (node_id v = 0; v < proof.node_count(); ++v)
    for (std::size_t i = 0; i < proof.children[v].size(); ++i)
      out[v].push_back({static_cast<int>(i), proof.children[v][i]});

  std::map<judgement, formula_set> fml_cache;
  auto fml_of = [&](node_id v) -> const formula_set& {
    const judgement& j = proof.judgements[v];
    auto it = fml_cache.find(j);
    if (it == fml_cache.end()) it = fml_cache.emplace(j, structure.fml(j)).first;
    return it->second;
  };

  // profile of a path: which formula pairs are connected by a trace with
  // (true) / without (false) a progressing step; both may hold
  using profile = std::set<std::tuple<std::string, std::string, bool>>;

  for (node_id start = 0; start < proof.node_count(); ++start) {
    struct state {
      node_id at;
      profile prof;
      int length;
      int parent;
      std::pair<node_id, int> edge;
    };
    std::vector<state> states;
    std::map<std::pair<node_id, profile>, int> seen;

    profile initial;
    for (const formula_token& t : fml_of(start)) initial.insert({t.token, t.token, false});
    states.push_back({start, initial, 0, -1, {-1, -1}});
    seen[{start, initial}] = 0;

    for (std::size_t idx = 0; idx < states.size(); ++idx) {
      // states is processed as a BFS queue: entries are pushed in length order
      state current = states[idx];
      if (current.length == bound) continue;
      for (auto [premise, next] : out[current.at]) {
        std::vector<trace_step> steps = structure.steps(proof.rules[current.at], premise);
        profile extended;
        for (const auto& [from, via, p] : current.prof)
          for (const trace_step& s : steps)
            if (s.source.token == via) extended.insert({from, s.target.token, p || s.progressing});
        if (next == start) {
          // candidate cycle closes here; check it before deduplication
          lasso candidate;
          candidate.cycle.push_back({current.at, premise});
          for (int i = static_cast<int>(idx); i != -1; i = states[i].parent)
            if (states[i].parent != -1) candidate.cycle.push_back(states[i].edge);
          std::reverse(candidate.cycle.begin(), candidate.cycle.end());
          if (!lasso_admits_progressing_trace(proof, structure, candidate)) {
            candidate.prefix = root_path(proof, start);
            return {false, std::move(candidate)};
          }
        }
        auto key = std::make_pair(next, extended);
        if (seen.find(key) == seen.end()) {
          seen[key] = static_cast<int>(states.size());
          states.push_back(
              {next, std::move(extended), current.length + 1, static_cast<int>(idx), {current.at, premise}});
        }
      }
    }
  }
  return {true, std::nullopt};
}

trace_structure recursiveness_witness_structure() {
  trace_structure t;
  t.fml = [](const judgement&) { return formula_set{formula_token{"*"}}; };
  t.steps = [](const rule_instance&, int) {
    return std::vector<trace_step>{{formula_token{"*"}, formula_token{"*"}, false}};
  };
  return t;
}

bool check_recursive_via_gtc(const pre_proof& proof) {
  return decide_gtc(proof, recursiveness_witness_structure()).holds;
}

std::vector<judgement> proof_system_morphism::fibre(const judgement& downstairs) const {
  std::vector<judgement> result;
  for (const auto& [up, down] : judgement_map)
    if (down == downstairs && std::find(result.begin(), result.end(), up) == result.end())
      result.push_back(up);
  return result;
}

std::optional<judgement> proof_system_morphism::image(const judgement& upstairs) const {
  for (const auto& [up, down] : judgement_map)
    if (up == upstairs) return down;
  return std::nullopt;
}

validation_report validate_morphism(const proof_system_morphism& f, const pre_proof& proof) {
  validation_report report;
  auto bad = [&](std::string what) { report.violations.push_back({-1, std::move(what)}); };

  std::map<judgement, judgement> jmap;
  for (const auto& [up, down] : f.judgement_map) {
    auto [it, fresh] = jmap.emplace(up, down);
    if (!fresh && it->second != down) bad("judgement '" + up.text + "' mapped twice with different images");
  }

  std::set<std::string> rule_ids;
  for (const morphism_rule& entry : f.rules) {
    const rule_instance& up = entry.upstairs;
    const rule_instance& down = entry.downstairs;
    if (!rule_ids.insert(up.rule_id).second) bad("duplicate upstairs rule id '" + up.rule_id + "'");
    auto conc = jmap.find(up.conclusion);
    if (conc == jmap.end() || conc->second != down.conclusion) {
      bad("rule '" + up.rule_id + "': conclusion square does not commute");
      continue;
    }
    if (static_cast<int>(entry.premise_map.size()) != up.arity()) {
      bad("rule '" + up.rule_id + "': premise map arity mismatch");
      continue;
    }
    for (int i = 0; i < up.arity(); ++i) {
      int j = entry.premise_map[i];
      if (j < 0 || j >= down.arity()) {
        bad("rule '" + up.rule_id + "': premise index " + std::to_string(i) + " maps out of range");
        continue;
      }
      auto prem = jmap.find(up.premises[i]);
      if (prem == jmap.end() || prem->second != down.premises[j])
        bad("rule '" + up.rule_id + "': premise square does not commute at " + std::to_string(i));
    }
  }

  // Discrete pullback condition, checked against the rules the pre-proof uses:
  // rules over a fibre judgement correspond bijectively to rules downstairs.
  for (node_id v = 0; v < proof.node_count(); ++v) {
    const rule_instance& rule = proof.rules[v];
    for (const judgement& up : f.fibre(proof.judgements[v])) {
      int lifts = 0;
      for (const morphism_rule& entry : f.rules)
        if (entry.downstairs.rule_id == rule.rule_id && entry.upstairs.conclusion == up) ++lifts;
      if (lifts == 0)
        bad("no lift of rule '" + rule.rule_id + "' over judgement '" + up.text + "'");
      else if (lifts > 1)
        bad("ambiguous lift of rule '" + rule.rule_id + "' over judgement '" + up.text + "'");
    }
  }
  return report;
}

pre_proof reindex_preproof(const proof_system_morphism& f, const pre_proof& proof) {
  validation_report report = validate_morphism(f, proof);
  if (!report.ok()) throw error("reindex_preproof: " + report.violations[0].what);

  pre_proof result;
  std::map<std::pair<node_id, judgement>, node_id> ids;
  std::vector<std::pair<node_id, judgement>> pairs;
  for (node_id v = 0; v < proof.node_count(); ++v)
    for (const judgement& up : f.fibre(proof.judgements[v])) {
      ids[{v, up}] = static_cast<node_id>(pairs.size());
      pairs.push_back({v, up});
    }

  auto lift_of = [&](const rule_instance& rule, const judgement& up) -> const morphism_rule& {
    for (const morphism_rule& entry : f.rules)
      if (entry.downstairs.rule_id == rule.rule_id && entry.upstairs.conclusion == up) return entry;
    throw error("reindex_preproof: missing rule lift");
  };

  for (const auto& [base, up] : pairs) {
    const morphism_rule& entry = lift_of(proof.rules[base], up);
    result.judgements.push_back(up);
    result.rules.push_back(entry.upstairs);
    std::vector<node_id> kids;
    for (int i = 0; i < entry.upstairs.arity(); ++i) {
      node_id child = proof.children[base][entry.premise_map[i]];
      kids.push_back(ids.at({child, entry.upstairs.premises[i]}));
    }
    result.children.push_back(std::move(kids));
  }

  for (node_id r : proof.roots)
    for (const judgement& up : f.fibre(proof.judgements[r])) result.roots.push_back(ids.at({r, up}));

  // keep traversals total: any pair unreachable from the lifted roots is
  // promoted to a root
  std::vector<bool> seen(result.judgements.size(), false);
  std::deque<node_id> queue;
  auto sweep = [&]() {
    while (!queue.empty()) {
      node_id v = queue.front();
      queue.pop_front();
      for (node_id m : result.children[v])
        if (!seen[m]) {
          seen[m] = true;
          queue.push_back(m);
        }
    }
  };
  for (node_id r : result.roots)
    if (!seen[r]) {
      seen[r] = true;
      queue.push_back(r);
    }
  sweep();
  for (node_id v = 0; v < static_cast<node_id>(result.judgements.size()); ++v)
    if (!seen[v]) {
      result.roots.push_back(v);
      seen[v] = true;
      queue.push_back(v);
      sweep();
    }
  return result;
}

trace_structure pullback_trace_structure(const proof_system_morphism& f,
                                         const trace_structure& structure) {
  auto jmap = std::make_shared<std::map<judgement, judgement>>();
  for (const auto& [up, down] : f.judgement_map) jmap->emplace(up, down);
  auto rmap = std::make_shared<std::map<std::string, morphism_rule>>();
  for (const morphism_rule& entry : f.rules) rmap->emplace(entry.upstairs.rule_id, entry);

  trace_structure result;
  result.fml = [jmap, base = structure.fml](const judgement& up) {
    auto it = jmap->find(up);
    if (it == jmap->end()) throw error("pullback fml: judgement '" + up.text + "' not in morphism");
    return base(it->second);
  };
  result.steps = [rmap, base = structure.steps](const rule_instance& rule, int premise) {
    auto it = rmap->find(rule.rule_id);
    if (it == rmap->end()) throw error("pullback steps: rule '" + rule.rule_id + "' not in morphism");
    if (premise < 0 || premise >= static_cast<int>(it->second.premise_map.size()))
      throw error("pullback steps: premise index out of range");
    return base(it->second.downstairs, it->second.premise_map[premise]);
  };
  return result;
}

std::string render_lasso(const lasso& l) {
  std::ostringstream out;
  out << "prefix [";
  for (std::size_t i = 0; i < l.prefix.size(); ++i)
    out << (i ? " " : "") << l.prefix[i].first << ":" << l.prefix[i].second;
  out << "] cycle [";
  for (std::size_t i = 0; i < l.cycle.size(); ++i)
    out << (i ? " " : "") << l.cycle[i].first << ":" << l.cycle[i].second;
  out << "]";
  return out.str();
}

}  // namespace nwp
