#include "nwp/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace nwp::corpus {

namespace {

bool coin(rng& gen, double probability) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(gen) < probability;
}

int pick(rng& gen, int bound) {  // uniform in [0, bound)
  return static_cast<int>(std::uniform_int_distribution<int>(0, bound - 1)(gen));
}

}  // namespace

pre_proof random_preproof(rng& gen, int max_nodes, double extra_edge_prob) {
  const int n = 1 + pick(gen, max_nodes);
  std::vector<std::vector<node_id>> children(n);
  for (node_id v = 1; v < n; ++v) children[pick(gen, v)].push_back(v);  // spanning tree from 0
  for (node_id v = 0; v < n; ++v)
    while (children[v].size() < 3 && coin(gen, extra_edge_prob)) children[v].push_back(pick(gen, n));

  pre_proof proof;
  for (node_id v = 0; v < n; ++v) {
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
  proof.roots = {0};
  return proof;
}

generated_instance random_instance(rng& gen, const instance_options& options) {
  generated_instance instance;
  instance.proof = random_preproof(gen, options.max_nodes, options.extra_edge_prob);

  std::map<judgement, formula_set> fml;
  for (node_id v = 0; v < instance.proof.node_count(); ++v) {
    int count = options.allow_empty_fml ? pick(gen, options.max_fml + 1)
                                        : 1 + pick(gen, options.max_fml);
    std::vector<formula_token> tokens;
    for (int i = 0; i < count; ++i) tokens.push_back({"f" + std::to_string(i)});
    instance.max_fml = std::max(instance.max_fml, count);
    fml[instance.proof.judgements[v]] = make_formula_set(std::move(tokens));
  }

  std::map<std::pair<std::string, int>, std::vector<trace_step>> steps;
  for (node_id v = 0; v < instance.proof.node_count(); ++v) {
    const rule_instance& rule = instance.proof.rules[v];
    for (int i = 0; i < rule.arity(); ++i) {
      std::vector<trace_step> list;
      for (const formula_token& source : fml[rule.conclusion])
        for (const formula_token& target : fml[rule.premises[i]]) {
          if (coin(gen, options.step_prob))
            list.push_back({source, target, coin(gen, options.prog_prob)});
          if (coin(gen, options.dual_prob))
            list.push_back({source, target, coin(gen, options.prog_prob)});
        }
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      if (!list.empty()) steps[{rule.rule_id, i}] = std::move(list);
    }
  }
  instance.structure = make_table_trace_structure(std::move(fml), std::move(steps));
  return instance;
}

proof_system_morphism random_morphism(rng& gen, const pre_proof& proof, int max_fibre) {
  proof_system_morphism f;

  std::map<judgement, std::vector<judgement>> fibres;
  std::set<judgement> seen;
  for (node_id v = 0; v < proof.node_count(); ++v) {
    const judgement& base = proof.judgements[v];
    if (!seen.insert(base).second) continue;
    int size = 1 + pick(gen, max_fibre);
    for (int i = 0; i < size; ++i) {
      judgement up{base.text + "@" + std::to_string(i)};
      fibres[base].push_back(up);
      f.judgement_map.push_back({up, base});
    }
  }

  std::set<std::string> rules_done;
  for (node_id v = 0; v < proof.node_count(); ++v) {
    const rule_instance& rule = proof.rules[v];
    if (!rules_done.insert(rule.rule_id).second) continue;
    for (const judgement& up : fibres.at(rule.conclusion)) {
      morphism_rule entry;
      entry.downstairs = rule;
      entry.upstairs.rule_id = rule.rule_id + "@" + up.text;
      entry.upstairs.schema = rule.schema;
      entry.upstairs.conclusion = up;
      int arity = rule.arity() == 0 ? 0 : pick(gen, rule.arity() + 2);
      for (int i = 0; i < arity; ++i) {
        int image = pick(gen, rule.arity());
        entry.premise_map.push_back(image);
        const std::vector<judgement>& fibre = fibres.at(rule.premises[image]);
        entry.upstairs.premises.push_back(fibre[pick(gen, static_cast<int>(fibre.size()))]);
      }
      f.rules.push_back(std::move(entry));
    }
  }
  return f;
}

std::vector<lasso> enumerate_lassos(const pre_proof& proof, std::size_t limit) {
  // simple cycles, canonicalised to start at their least node
  std::set<std::vector<std::pair<node_id, int>>> cycles;
  std::vector<std::pair<node_id, int>> path;
  std::vector<bool> on_path(proof.judgements.size(), false);

  auto dfs = [&](auto&& self, node_id start, node_id current) -> void {
    if (cycles.size() >= limit) return;
    for (std::size_t i = 0; i < proof.children[current].size(); ++i) {
      node_id next = proof.children[current][i];
      if (next == start) {
        path.push_back({current, static_cast<int>(i)});
        cycles.insert(path);
        path.pop_back();
      } else if (next > start && !on_path[next]) {
        path.push_back({current, static_cast<int>(i)});
        on_path[next] = true;
        self(self, start, next);
        on_path[next] = false;
        path.pop_back();
      }
    }
  };
  for (node_id start = 0; start < proof.node_count(); ++start) {
    path.clear();
    dfs(dfs, start, start);
  }

  std::vector<lasso> result;
  for (const auto& cycle : cycles) {
    lasso l;
    l.cycle = cycle;
    l.prefix = root_path(proof, cycle.front().first);
    result.push_back(std::move(l));
  }
  return result;
}

namespace {

// nodes are declared first, then linked, so cycles can point anywhere
class mu_builder {
 public:
  node_id add(mu::sequent s, std::string schema) {
    sequents_.push_back(std::move(s));
    schemas_.push_back(std::move(schema));
    children_.emplace_back();
    return static_cast<node_id>(sequents_.size() - 1);
  }
  void link(node_id parent, std::vector<node_id> children) {
    children_[parent] = std::move(children);
  }
  pre_proof build() const {
    pre_proof proof;
    for (std::size_t v = 0; v < sequents_.size(); ++v) {
      std::vector<mu::sequent> premises;
      for (node_id child : children_[v]) premises.push_back(sequents_[child]);
      proof.judgements.push_back(mu::judgement_of(sequents_[v]));
      proof.rules.push_back(mu::make_rule(schemas_[v], sequents_[v], premises));
      proof.children.push_back(children_[v]);
    }
    proof.roots = {0};
    return proof;
  }

 private:
  std::vector<mu::sequent> sequents_;
  std::vector<std::string> schemas_;
  std::vector<std::vector<node_id>> children_;
};

mu::sequent seq(std::initializer_list<mu::formula_ptr> formulas) {
  return mu::make_sequent(std::vector<mu::formula_ptr>(formulas));
}

// sigma x. [a]^k x, unfolded and stripped box by box back to the root
mu_fixture box_cycle(bool greatest, int boxes) {
  using namespace mu;
  formula_ptr body = make_var("x");
  for (int i = 0; i < boxes; ++i) body = make_box("a", body);
  formula_ptr fix = canonicalize(greatest ? make_nu("x", body) : make_mu("x", body));

  mu_builder b;
  node_id root = b.add(seq({fix}), greatest ? "Nu" : "Mu");
  formula_ptr current = unfold(fix);
  std::vector<node_id> chain{root};
  for (int i = 0; i < boxes; ++i) {
    chain.push_back(b.add(seq({current}), "Mod"));
    current = current->left;
  }
  for (int i = 0; i < boxes; ++i) b.link(chain[i], {chain[i + 1]});
  b.link(chain.back(), {root});
  std::string name = std::string(greatest ? "nu" : "mu") + "-box" + std::to_string(boxes);
  return {name, b.build(), greatest, !greatest};
}

// sigma x. ([a]x | p): unfold, split the disjunction, weaken p away, strip
mu_fixture or_weaken_cycle(bool greatest) {
  using namespace mu;
  formula_ptr fix = canonicalize(
      (greatest ? make_nu : make_mu)("x", make_or(make_box("a", make_var("x")), make_prop("p"))));
  formula_ptr unfolded = unfold(fix);           // [a]fix | p
  formula_ptr boxed = unfolded->left;           // [a]fix

  mu_builder b;
  node_id root = b.add(seq({fix}), greatest ? "Nu" : "Mu");
  node_id split = b.add(seq({unfolded}), "Or");
  node_id wide = b.add(seq({boxed, make_prop("p")}), "Wk");
  node_id modal = b.add(seq({boxed}), "Mod");
  b.link(root, {split});
  b.link(split, {wide});
  b.link(wide, {modal});
  b.link(modal, {root});
  std::string name = std::string(greatest ? "nu" : "mu") + "-or-weaken";
  return {name, b.build(), greatest, !greatest};
}

// sigma x. ([a]x & [b]x): two modal branches back to the root
mu_fixture and_branch_cycle(bool greatest) {
  using namespace mu;
  formula_ptr fix = canonicalize((greatest ? make_nu : make_mu)(
      "x", make_and(make_box("a", make_var("x")), make_box("b", make_var("x")))));
  formula_ptr unfolded = unfold(fix);

  mu_builder b;
  node_id root = b.add(seq({fix}), greatest ? "Nu" : "Mu");
  node_id split = b.add(seq({unfolded}), "And");
  node_id left = b.add(seq({unfolded->left}), "Mod");
  node_id right = b.add(seq({unfolded->right}), "Mod");
  b.link(root, {split});
  b.link(split, {left, right});
  b.link(left, {root});
  b.link(right, {root});
  std::string name = std::string(greatest ? "nu" : "mu") + "-and-branch";
  return {name, b.build(), greatest, !greatest};
}

// sigma x. (<a>x | [a]x): the diamond rides along with the box through Mod
mu_fixture diamond_or_cycle(bool greatest) {
  using namespace mu;
  formula_ptr fix = canonicalize((greatest ? make_nu : make_mu)(
      "x", make_or(make_diamond("a", make_var("x")), make_box("a", make_var("x")))));
  formula_ptr unfolded = unfold(fix);

  mu_builder b;
  node_id root = b.add(seq({fix}), greatest ? "Nu" : "Mu");
  node_id split = b.add(seq({unfolded}), "Or");
  node_id modal = b.add(seq({unfolded->left, unfolded->right}), "Mod");
  b.link(root, {split});
  b.link(split, {modal});
  b.link(modal, {root});
  std::string name = std::string(greatest ? "nu" : "mu") + "-diamond-or";
  return {name, b.build(), greatest, !greatest};
}

// {mu x.<a>x, mu y.[a]y}: both unfold forever, nothing progresses
mu_fixture two_mu_cycle() {
  using namespace mu;
  formula_ptr diamond_fix = canonicalize(make_mu("x", make_diamond("a", make_var("x"))));
  formula_ptr box_fix = canonicalize(make_mu("y", make_box("a", make_var("y"))));

  mu_builder b;
  node_id root = b.add(seq({diamond_fix, box_fix}), "Mu");
  node_id second = b.add(seq({unfold(diamond_fix), box_fix}), "Mu");
  node_id modal = b.add(seq({unfold(diamond_fix), unfold(box_fix)}), "Mod");
  b.link(root, {second});
  b.link(second, {modal});
  b.link(modal, {root});
  return {"mu-diamond-mu-box", b.build(), false, false};
}

// {mu x.<a>x, nu y.[a]y}: the nu side progresses every round
mu_fixture mu_with_nu_cycle() {
  using namespace mu;
  formula_ptr diamond_fix = canonicalize(make_mu("x", make_diamond("a", make_var("x"))));
  formula_ptr box_fix = canonicalize(make_nu("y", make_box("a", make_var("y"))));

  mu_builder b;
  node_id root = b.add(seq({diamond_fix, box_fix}), "Mu");
  node_id second = b.add(seq({unfold(diamond_fix), box_fix}), "Nu");
  node_id modal = b.add(seq({unfold(diamond_fix), unfold(box_fix)}), "Mod");
  b.link(root, {second});
  b.link(second, {modal});
  b.link(modal, {root});
  return {"mu-diamond-with-nu-box", b.build(), true, false};
}

// sigma x. [a](x | p): Or under the modality, then weaken
mu_fixture box_or_cycle(bool greatest) {
  using namespace mu;
  formula_ptr fix = canonicalize((greatest ? make_nu : make_mu)(
      "x", make_box("a", make_or(make_var("x"), make_prop("p")))));
  formula_ptr unfolded = unfold(fix);        // [a](fix | p)
  formula_ptr inner = unfolded->left;        // fix | p

  mu_builder b;
  node_id root = b.add(seq({fix}), greatest ? "Nu" : "Mu");
  node_id modal = b.add(seq({unfolded}), "Mod");
  node_id split = b.add(seq({inner}), "Or");
  node_id wide = b.add(seq({fix, make_prop("p")}), "Wk");
  b.link(root, {modal});
  b.link(modal, {split});
  b.link(split, {wide});
  b.link(wide, {root});
  std::string name = std::string(greatest ? "nu" : "mu") + "-box-or";
  return {name, b.build(), greatest, !greatest};
}

// outer sigma1 x. [a] sigma2 y. [b](x | y): genuine alternation; the verdict
// follows the outer binder
mu_fixture alternation_cycle(bool outer_greatest) {
  using namespace mu;
  auto outer = outer_greatest ? make_nu : make_mu;
  auto inner = outer_greatest ? make_mu : make_nu;
  formula_ptr fix = canonicalize(outer(
      "x", make_box("a", inner("y", make_box("b", make_or(make_var("x"), make_var("y")))))));

  formula_ptr after_outer = unfold(fix);   // [a] inner_fix
  formula_ptr inner_fix = after_outer->left;
  formula_ptr after_inner = unfold(inner_fix);  // [b](fix | inner_fix)
  formula_ptr pair = after_inner->left;         // fix | inner_fix

  mu_builder b;
  node_id root = b.add(seq({fix}), outer_greatest ? "Nu" : "Mu");
  node_id modal_a = b.add(seq({after_outer}), "Mod");
  node_id inner_node = b.add(seq({inner_fix}), outer_greatest ? "Mu" : "Nu");
  node_id modal_b = b.add(seq({after_inner}), "Mod");
  node_id split = b.add(seq({pair}), "Or");
  node_id wide = b.add(seq({fix, inner_fix}), "Wk");
  b.link(root, {modal_a});
  b.link(modal_a, {inner_node});
  b.link(inner_node, {modal_b});
  b.link(modal_b, {split});
  b.link(split, {wide});
  b.link(wide, {root});
  std::string name = outer_greatest ? "nu-mu-alternation" : "mu-nu-alternation";
  return {name, b.build(), outer_greatest, !outer_greatest};
}

mu_fixture axiom_fixture() {
  using namespace mu;
  mu_builder b;
  b.add(seq({make_prop("p"), make_nprop("p")}), "Ax");
  return {"axiom", b.build(), true, false};
}

}  // namespace

std::vector<mu_fixture> mu_fixtures() {
  std::vector<mu_fixture> fixtures;
  fixtures.push_back(axiom_fixture());
  for (int k = 1; k <= 9; ++k) {
    fixtures.push_back(box_cycle(true, k));
    fixtures.push_back(box_cycle(false, k));
  }
  fixtures.push_back(or_weaken_cycle(true));
  fixtures.push_back(or_weaken_cycle(false));
  fixtures.push_back(and_branch_cycle(true));
  fixtures.push_back(and_branch_cycle(false));
  fixtures.push_back(diamond_or_cycle(true));
  fixtures.push_back(diamond_or_cycle(false));
  fixtures.push_back(box_or_cycle(true));
  fixtures.push_back(box_or_cycle(false));
  fixtures.push_back(two_mu_cycle());
  fixtures.push_back(mu_with_nu_cycle());
  fixtures.push_back(alternation_cycle(true));
  fixtures.push_back(alternation_cycle(false));
  return fixtures;
}

mu::lts random_lts(rng& gen, int max_states, const std::vector<std::string>& actions,
                   const std::vector<std::string>& props) {
  mu::lts model;
  model.state_count = 1 + pick(gen, max_states);
  for (const std::string& action : actions)
    for (int i = 0; i < model.state_count; ++i)
      for (int j = 0; j < model.state_count; ++j)
        if (coin(gen, 0.3)) model.transitions[action].insert({i, j});
  for (const std::string& prop : props)
    for (int i = 0; i < model.state_count; ++i)
      if (coin(gen, 0.5)) model.labels[prop].insert(i);
  return model;
}

namespace {

mu::formula_ptr random_formula(rng& gen, int depth, const std::vector<std::string>& actions,
                               const std::vector<std::string>& props,
                               std::vector<std::string>& scope, int& next_var) {
  using namespace mu;
  const bool leaf = depth <= 0 || coin(gen, 0.25);
  if (leaf) {
    int choices = scope.empty() ? 2 : 3;
    switch (pick(gen, choices)) {
      case 0:
        return make_prop(props[pick(gen, static_cast<int>(props.size()))]);
      case 1:
        return make_nprop(props[pick(gen, static_cast<int>(props.size()))]);
      default:
        return make_var(scope[pick(gen, static_cast<int>(scope.size()))]);
    }
  }
  switch (pick(gen, 6)) {
    case 0:
      return make_or(random_formula(gen, depth - 1, actions, props, scope, next_var),
                     random_formula(gen, depth - 1, actions, props, scope, next_var));
    case 1:
      return make_and(random_formula(gen, depth - 1, actions, props, scope, next_var),
                      random_formula(gen, depth - 1, actions, props, scope, next_var));
    case 2:
      return make_diamond(actions[pick(gen, static_cast<int>(actions.size()))],
                          random_formula(gen, depth - 1, actions, props, scope, next_var));
    case 3:
      return make_box(actions[pick(gen, static_cast<int>(actions.size()))],
                      random_formula(gen, depth - 1, actions, props, scope, next_var));
    default: {
      std::string var = "v" + std::to_string(next_var++);
      scope.push_back(var);
      formula_ptr body = random_formula(gen, depth - 1, actions, props, scope, next_var);
      scope.pop_back();
      return coin(gen, 0.5) ? make_mu(var, body) : make_nu(var, body);
    }
  }
}

}  // namespace

mu::formula_ptr random_closed_formula(rng& gen, int max_depth,
                                      const std::vector<std::string>& actions,
                                      const std::vector<std::string>& props) {
  std::vector<std::string> scope;
  int next_var = 0;
  return mu::canonicalize(random_formula(gen, max_depth, actions, props, scope, next_var));
}

std::vector<ds::stream_spec> random_streams(rng& gen, std::size_t count, std::size_t max_len,
                                            std::uint64_t max_value) {
  std::vector<ds::stream_spec> specs;
  while (specs.size() < count) {
    ds::stream_spec spec;
    std::size_t prefix_len = pick(gen, static_cast<int>(max_len + 1));
    std::size_t period_len = 1 + pick(gen, static_cast<int>(max_len));
    for (std::size_t i = 0; i < prefix_len; ++i)
      spec.prefix.push_back(pick(gen, static_cast<int>(max_value)));
    for (std::size_t i = 0; i < period_len; ++i)
      spec.period.push_back(pick(gen, static_cast<int>(max_value)));
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace nwp::corpus
