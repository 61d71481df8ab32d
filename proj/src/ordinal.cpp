#include "nwp/ordinal.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace nwp {

ordinal ordinal::from_nat(std::uint64_t n) {
  ordinal o;
  if (n > 0) o.cnf.push_back({0, n});
  return o;
}

ordinal ordinal::omega_power(std::uint32_t exponent, std::uint64_t coefficient) {
  ordinal o;
  if (coefficient > 0) o.cnf.push_back({exponent, coefficient});
  return o;
}

int ord_compare(const ordinal& a, const ordinal& b) {
  for (std::size_t i = 0; i < std::min(a.cnf.size(), b.cnf.size()); ++i) {
    if (a.cnf[i].first != b.cnf[i].first) return a.cnf[i].first < b.cnf[i].first ? -1 : 1;
    if (a.cnf[i].second != b.cnf[i].second) return a.cnf[i].second < b.cnf[i].second ? -1 : 1;
  }
  if (a.cnf.size() != b.cnf.size()) return a.cnf.size() < b.cnf.size() ? -1 : 1;
  return 0;
}

bool operator<(const ordinal& a, const ordinal& b) { return ord_compare(a, b) < 0; }
bool operator<=(const ordinal& a, const ordinal& b) { return ord_compare(a, b) <= 0; }

ordinal ord_succ(const ordinal& a) {
  ordinal out = a;
  if (!out.cnf.empty() && out.cnf.back().first == 0) {
    if (out.cnf.back().second == std::numeric_limits<std::uint64_t>::max())
      throw error("ordinal: coefficient overflow");
    out.cnf.back().second += 1;
  } else {
    out.cnf.push_back({0, 1});
  }
  return out;
}

ordinal ord_sup(const std::vector<ordinal>& set) {
  ordinal best = ordinal::zero();
  for (const ordinal& o : set)
    if (best < o) best = o;
  return best;
}

ordinal ord_sup_plus_one(const std::vector<ordinal>& set) {
  if (set.empty()) return ordinal::zero();
  return ord_succ(ord_sup(set));
}

std::string to_string(const ordinal& a) {
  if (a.cnf.empty()) return "0";
  std::ostringstream out;
  for (std::size_t i = 0; i < a.cnf.size(); ++i) {
    auto [e, c] = a.cnf[i];
    if (i) out << " + ";
    if (e == 0)
      out << c;
    else if (e == 1)
      out << "w*" << c;
    else
      out << "w^" << e << "*" << c;
  }
  return out.str();
}

ordinal parse_ordinal(const std::string& text) {
  ordinal out;
  std::size_t pos = 0;
  auto skip_spaces = [&]() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto parse_number = [&]() -> std::uint64_t {
    skip_spaces();
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      throw error("ordinal parse: digit expected at offset " + std::to_string(pos));
    std::uint64_t value = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      value = value * 10 + static_cast<std::uint64_t>(text[pos] - '0');
      ++pos;
    }
    return value;
  };

  bool first = true;
  while (true) {
    skip_spaces();
    if (pos >= text.size()) {
      if (first) throw error("ordinal parse: empty input");
      break;
    }
    if (!first) {
      if (text[pos] != '+') throw error("ordinal parse: '+' expected at offset " + std::to_string(pos));
      ++pos;
      skip_spaces();
    }
    std::uint32_t exponent = 0;
    std::uint64_t coefficient = 1;
    if (pos < text.size() && text[pos] == 'w') {
      ++pos;
      exponent = 1;
      if (pos < text.size() && text[pos] == '^')
        ++pos, exponent = static_cast<std::uint32_t>(parse_number());
      skip_spaces();
      if (pos < text.size() && text[pos] == '*')
        ++pos, coefficient = parse_number();
    } else {
      exponent = 0;
      coefficient = parse_number();
    }
    if (coefficient > 0) {
      if (!out.cnf.empty() && out.cnf.back().first <= exponent)
        throw error("ordinal parse: exponents must strictly decrease");
      out.cnf.push_back({exponent, coefficient});
    } else if (!(exponent == 0 && out.cnf.empty())) {
      throw error("ordinal parse: zero coefficient");
    }
    first = false;
    skip_spaces();
    if (pos >= text.size()) break;
  }
  return out;
}

bool lifted_edge_ok(const trace_structure& structure, const rule_instance& rule, int premise,
                    const annotation& on_conclusion, const annotation& on_premise) {
  if (premise < 0 || premise >= rule.arity()) throw error("lifted_edge_ok: premise index out of range");
  for (const formula_token& t : structure.fml(rule.conclusion))
    if (!on_conclusion.count(t))
      throw error("lifted_edge_ok: annotation misses conclusion formula '" + t.token + "'");
  for (const formula_token& t : structure.fml(rule.premises[premise]))
    if (!on_premise.count(t))
      throw error("lifted_edge_ok: annotation misses premise formula '" + t.token + "'");
  for (const trace_step& s : structure.steps(rule, premise)) {
    auto f = on_conclusion.find(s.source);
    auto g = on_premise.find(s.target);
    if (f == on_conclusion.end() || g == on_premise.end())
      throw error("lifted_edge_ok: step over formula outside the annotation");
    if (s.progressing ? !(g->second < f->second) : !(g->second <= f->second)) return false;
  }
  return true;
}

namespace {

std::uint64_t pow_capped(std::uint64_t base, std::size_t exponent, std::uint64_t cap) {
  std::uint64_t value = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (value > cap / std::max<std::uint64_t>(base, 1)) return cap + 1;
    value *= base;
  }
  return value;
}

annotation annotation_from_values(const formula_set& fml, const std::vector<std::uint32_t>& values) {
  annotation a;
  for (std::size_t i = 0; i < fml.size(); ++i) a[fml[i]] = ordinal::from_nat(values[i]);
  return a;
}

}  // namespace

lifted_graph build_lifted_graph(const pre_proof& proof, const trace_structure& structure,
                                std::uint32_t gamma, std::uint64_t node_budget) {
  if (gamma < 1) throw error("build_lifted_graph: gamma must be at least 1");

  std::vector<formula_set> fml_at(proof.node_count());
  std::uint64_t total = 0;
  for (node_id v = 0; v < proof.node_count(); ++v) {
    fml_at[v] = structure.fml(proof.judgements[v]);
    std::uint64_t count = pow_capped(gamma, fml_at[v].size(), node_budget);
    total += count;
    if (count > node_budget || total > node_budget)
      throw budget_exceeded("lifted graph would exceed the node budget of " +
                            std::to_string(node_budget));
  }

  lifted_graph graph;
  std::vector<int> first_of(proof.node_count() + 1, 0);
  for (node_id v = 0; v < proof.node_count(); ++v) {
    first_of[v] = static_cast<int>(graph.nodes.size());
    std::vector<std::uint32_t> values(fml_at[v].size(), 0);
    while (true) {
      graph.nodes.push_back({v, values});
      std::size_t i = 0;
      for (; i < values.size(); ++i) {
        if (values[i] + 1 < gamma) {
          ++values[i];
          break;
        }
        values[i] = 0;
      }
      if (i == values.size()) break;
      if (values.empty()) break;
    }
  }
  first_of[proof.node_count()] = static_cast<int>(graph.nodes.size());

  std::uint64_t pair_work = 0;
  const std::uint64_t work_budget = node_budget * 16;
  for (node_id v = 0; v < proof.node_count(); ++v) {
    for (std::size_t i = 0; i < proof.children[v].size(); ++i) {
      node_id m = proof.children[v][i];
      for (int a = first_of[v]; a < first_of[v + 1]; ++a) {
        annotation f = annotation_from_values(fml_at[v], graph.nodes[a].values);
        for (int b = first_of[m]; b < first_of[m + 1]; ++b) {
          if (++pair_work > work_budget)
            throw budget_exceeded("lifted graph edge enumeration exceeded its work budget");
          annotation g = annotation_from_values(fml_at[m], graph.nodes[b].values);
          if (lifted_edge_ok(structure, proof.rules[v], static_cast<int>(i), f, g))
            graph.edges.push_back({a, static_cast<int>(i), b});
        }
      }
    }
  }
  return graph;
}

std::optional<refutation_certificate> refute_gtc_via_lift(const pre_proof& proof,
                                                          const trace_structure& structure,
                                                          std::uint32_t gamma,
                                                          std::uint64_t node_budget) {
  lifted_graph graph = build_lifted_graph(proof, structure, gamma, node_budget);
  std::vector<std::vector<std::pair<int, int>>> out(graph.nodes.size());  // (premise, target)
  for (const auto& e : graph.edges) out[e.source].push_back({e.premise, e.target});

  enum class colour { white, grey, black };
  std::vector<colour> state(graph.nodes.size(), colour::white);
  struct frame {
    int node;
    std::size_t next = 0;
  };
  std::vector<int> stack;
  std::vector<int> stack_premise;  // premise taken out of stack[k]

  for (std::size_t start = 0; start < graph.nodes.size(); ++start) {
    if (state[start] != colour::white) continue;
    std::vector<frame> frames{{static_cast<int>(start)}};
    state[start] = colour::grey;
    stack.push_back(static_cast<int>(start));
    stack_premise.push_back(-1);
    while (!frames.empty()) {
      frame& top = frames.back();
      if (top.next < out[top.node].size()) {
        auto [premise, target] = out[top.node][top.next++];
        stack_premise.back() = premise;
        if (state[target] == colour::grey) {
          auto it = std::find(stack.begin(), stack.end(), target);
          std::size_t from = static_cast<std::size_t>(it - stack.begin());
          refutation_certificate cert;
          for (std::size_t k = from; k < stack.size(); ++k) {
            const auto& lifted = graph.nodes[stack[k]];
            cert.cycle.push_back({lifted.base, stack_premise[k]});
            cert.annotations.push_back(
                annotation_from_values(structure.fml(proof.judgements[lifted.base]), lifted.values));
          }
          return cert;
        }
        if (state[target] == colour::white) {
          state[target] = colour::grey;
          stack.push_back(target);
          stack_premise.push_back(-1);
          frames.push_back({target});
        }
      } else {
        state[top.node] = colour::black;
        stack.pop_back();
        stack_premise.pop_back();
        frames.pop_back();
      }
    }
  }
  return std::nullopt;
}

std::uint32_t lift_gamma_star(const pre_proof& proof, const trace_structure& structure) {
  std::size_t max_fml = 0;
  for (node_id v = 0; v < proof.node_count(); ++v)
    max_fml = std::max(max_fml, structure.fml(proof.judgements[v]).size());
  return static_cast<std::uint32_t>(proof.node_count() * (1 + max_fml) + 1);
}

gtc_verdict decide_gtc_via_lift(const pre_proof& proof, const trace_structure& structure,
                                std::uint64_t node_budget) {
  std::uint32_t gamma = lift_gamma_star(proof, structure);
  std::optional<refutation_certificate> cert = refute_gtc_via_lift(proof, structure, gamma, node_budget);
  if (!cert) return {true, std::nullopt};
  lasso witness;
  witness.prefix = root_path(proof, cert->cycle.front().first);
  witness.cycle = cert->cycle;
  return {false, std::move(witness)};
}

std::vector<annotation> lasso_heights(const pre_proof& proof, const trace_structure& structure,
                                      const lasso& l) {
  if (lasso_admits_progressing_trace(proof, structure, l))
    throw non_applicable("lasso_heights: the lasso admits an infinitely progressing trace");

  std::vector<std::pair<node_id, int>> positions = l.prefix;
  positions.insert(positions.end(), l.cycle.begin(), l.cycle.end());
  const std::size_t count = positions.size();
  const std::size_t wrap = l.prefix.size();
  auto successor = [&](std::size_t p) { return p + 1 < count ? p + 1 : wrap; };

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
  std::vector<std::vector<std::pair<int, bool>>> step_arcs(nodes.size());  // (target, progressing)
  for (std::size_t p = 0; p < count; ++p) {
    auto [n, premise] = positions[p];
    std::size_t q = successor(p);
    for (const trace_step& s : structure.steps(proof.rules[n], premise)) {
      auto src = index.find({p, s.source});
      auto dst = index.find({q, s.target});
      if (src != index.end() && dst != index.end())
        step_arcs[src->second].push_back({dst->second, s.progressing});
    }
  }

  // Arcs of the height graph: trace segments whose only progressing step is
  // the last one. Computed as non-progressing reachability followed by one
  // progressing step.
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<int>> height_arcs(n);
  for (int x = 0; x < n; ++x) {
    std::vector<bool> reach(n, false);
    std::vector<int> queue{x};
    reach[x] = true;
    std::vector<bool> target(n, false);
    while (!queue.empty()) {
      int v = queue.back();
      queue.pop_back();
      for (auto [w, prog] : step_arcs[v]) {
        if (prog) {
          target[w] = true;
        } else if (!reach[w]) {
          reach[w] = true;
          queue.push_back(w);
        }
      }
    }
    for (int w = 0; w < n; ++w)
      if (target[w]) height_arcs[x].push_back(w);
  }

  // Non-progressing lasso makes the height graph acyclic; longest-path
  // heights satisfy ht(x) = sup { ht(y) + 1 }.
  std::vector<int> height(n, -1);
  std::vector<int> visiting(n, 0);
  auto compute = [&](auto&& self, int x) -> int {
    if (height[x] != -1) return height[x];
    if (visiting[x]) throw error("lasso_heights: height graph has a cycle");
    visiting[x] = 1;
    int best = 0;
    for (int y : height_arcs[x]) best = std::max(best, self(self, y) + 1);
    visiting[x] = 0;
    return height[x] = best;
  };
  for (int x = 0; x < n; ++x) compute(compute, x);

  std::vector<annotation> result(count);
  for (int x = 0; x < n; ++x) {
    auto [p, token] = nodes[x];
    result[p][token] = ordinal::from_nat(static_cast<std::uint64_t>(height[x]));
  }
  return result;
}

bool verify_refutation(const pre_proof& proof, const trace_structure& structure,
                       const refutation_certificate& certificate) {
  const std::size_t len = certificate.cycle.size();
  if (len == 0 || certificate.annotations.size() != len) return false;
  for (std::size_t k = 0; k < len; ++k) {
    auto [n, i] = certificate.cycle[k];
    if (n < 0 || n >= proof.node_count()) return false;
    if (i < 0 || i >= static_cast<int>(proof.children[n].size())) return false;
    node_id expected = certificate.cycle[(k + 1) % len].first;
    if (proof.children[n][i] != expected) return false;
  }
  try {
    for (std::size_t k = 0; k < len; ++k) {
      auto [n, i] = certificate.cycle[k];
      const annotation& f = certificate.annotations[k];
      const annotation& g = certificate.annotations[(k + 1) % len];
      if (!lifted_edge_ok(structure, proof.rules[n], i, f, g)) return false;
    }
  } catch (const error&) {
    return false;
  }
  return true;
}

}  // namespace nwp
