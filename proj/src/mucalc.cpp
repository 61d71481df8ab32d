#include "nwp/mucalc.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

namespace nwp::mu {

namespace {

formula_ptr node(kind k, std::string name, formula_ptr l = nullptr, formula_ptr r = nullptr) {
  auto f = std::make_shared<formula>();
  f->k = k;
  f->name = std::move(name);
  f->left = std::move(l);
  f->right = std::move(r);
  return f;
}

}  // namespace

formula_ptr make_prop(std::string name) { return node(kind::prop, std::move(name)); }
formula_ptr make_nprop(std::string name) { return node(kind::nprop, std::move(name)); }
formula_ptr make_var(std::string name) { return node(kind::var, std::move(name)); }
formula_ptr make_or(formula_ptr l, formula_ptr r) { return node(kind::disj, "", std::move(l), std::move(r)); }
formula_ptr make_and(formula_ptr l, formula_ptr r) { return node(kind::conj, "", std::move(l), std::move(r)); }
formula_ptr make_diamond(std::string action, formula_ptr body) {
  return node(kind::diamond, std::move(action), std::move(body));
}
formula_ptr make_box(std::string action, formula_ptr body) {
  return node(kind::box, std::move(action), std::move(body));
}
formula_ptr make_mu(std::string var, formula_ptr body) {
  return node(kind::mu, std::move(var), std::move(body));
}
formula_ptr make_nu(std::string var, formula_ptr body) {
  return node(kind::nu, std::move(var), std::move(body));
}

namespace {

// precedence: binder 0 (maximal scope), | 1, & 2, modalities 3, atoms 4
int precedence(const formula& f) {
  switch (f.k) {
    case kind::mu:
    case kind::nu:
      return 0;
    case kind::disj:
      return 1;
    case kind::conj:
      return 2;
    case kind::diamond:
    case kind::box:
      return 3;
    default:
      return 4;
  }
}

void render_to(const formula_ptr& f, int min_prec, std::string& out) {
  const bool parens = precedence(*f) < min_prec;
  if (parens) out += '(';
  switch (f->k) {
    case kind::prop:
      out += f->name;
      break;
    case kind::nprop:
      out += '~';
      out += f->name;
      break;
    case kind::var:
      out += f->name;
      break;
    case kind::disj:
      render_to(f->left, 1, out);
      out += " | ";
      render_to(f->right, 2, out);
      break;
    case kind::conj:
      render_to(f->left, 2, out);
      out += " & ";
      render_to(f->right, 3, out);
      break;
    case kind::diamond:
      out += '<';
      out += f->name;
      out += '>';
      render_to(f->left, 3, out);
      break;
    case kind::box:
      out += '[';
      out += f->name;
      out += ']';
      render_to(f->left, 3, out);
      break;
    case kind::mu:
    case kind::nu:
      out += (f->k == kind::mu ? "mu " : "nu ");
      out += f->name;
      out += ". ";
      render_to(f->left, 0, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string render(const formula_ptr& f) {
  std::string out;
  render_to(f, 0, out);
  return out;
}

syntax_error::syntax_error(std::string what, std::size_t pos)
    : error(std::move(what) + " at offset " + std::to_string(pos)), position(pos) {}

namespace {

struct parser {
  const std::string& text;
  std::size_t pos = 0;
  std::set<std::string> bound;  // identifiers currently bound by an enclosing binder

  explicit parser(const std::string& t) : text(t) {}

  void skip() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) throw syntax_error(std::string("expected '") + c + "'", pos);
  }
  std::string identifier() {
    skip();
    std::size_t start = pos;
    auto head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto tail = [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
    };
    if (pos >= text.size() || !head(text[pos])) throw syntax_error("identifier expected", pos);
    ++pos;
    while (pos < text.size() && tail(text[pos])) ++pos;
    return text.substr(start, pos - start);
  }

  formula_ptr parse() {
    formula_ptr f = disjunction();
    skip();
    if (pos != text.size()) throw syntax_error("trailing input", pos);
    return f;
  }

  formula_ptr disjunction() {
    formula_ptr f = conjunction();
    while (true) {
      skip();
      if (pos < text.size() && text[pos] == '|') {
        ++pos;
        f = make_or(f, conjunction());
      } else {
        return f;
      }
    }
  }

  formula_ptr conjunction() {
    formula_ptr f = prefixed();
    while (true) {
      skip();
      if (pos < text.size() && text[pos] == '&') {
        ++pos;
        f = make_and(f, prefixed());
      } else {
        return f;
      }
    }
  }

  formula_ptr binder(bool greatest) {
    std::string var = identifier();
    expect('.');
    bool shadowing = bound.count(var) > 0;
    if (!shadowing) bound.insert(var);
    formula_ptr body = disjunction();  // maximal scope
    if (!shadowing) bound.erase(var);
    return greatest ? make_nu(var, std::move(body)) : make_mu(var, std::move(body));
  }

  formula_ptr prefixed() {
    skip();
    if (pos >= text.size()) throw syntax_error("formula expected", pos);
    char c = text[pos];
    if (c == '(') {
      ++pos;
      formula_ptr f = disjunction();
      expect(')');
      return f;
    }
    if (c == '~') {
      ++pos;
      return make_nprop(identifier());
    }
    if (c == '<') {
      ++pos;
      std::string action = identifier();
      expect('>');
      return make_diamond(std::move(action), prefixed());
    }
    if (c == '[') {
      ++pos;
      std::string action = identifier();
      expect(']');
      return make_box(std::move(action), prefixed());
    }
    std::string name = identifier();
    if (name == "mu") return binder(false);
    if (name == "nu") return binder(true);
    return bound.count(name) ? make_var(name) : make_prop(name);
  }
};

void collect_leaf_names(const formula_ptr& f, const std::set<std::string>& bound,
                        std::set<std::string>& out) {
  switch (f->k) {
    case kind::prop:
    case kind::nprop:
      out.insert(f->name);
      return;
    case kind::var:
      if (!bound.count(f->name)) out.insert(f->name);
      return;
    case kind::mu:
    case kind::nu: {
      std::set<std::string> inner = bound;
      inner.insert(f->name);
      collect_leaf_names(f->left, inner, out);
      return;
    }
    default:
      if (f->left) collect_leaf_names(f->left, bound, out);
      if (f->right) collect_leaf_names(f->right, bound, out);
      return;
  }
}

struct renamer {
  const std::set<std::string>& reserved;
  std::vector<std::string>* warnings;
  int next = 0;
  std::set<std::string> used_originals;

  std::string fresh() {
    while (true) {
      std::string candidate = "x" + std::to_string(next++);
      if (!reserved.count(candidate)) return candidate;
    }
  }

  formula_ptr walk(const formula_ptr& f, std::map<std::string, std::string>& env) {
    switch (f->k) {
      case kind::prop:
      case kind::nprop:
        return f;
      case kind::var: {
        auto it = env.find(f->name);
        return it == env.end() ? f : make_var(it->second);
      }
      case kind::mu:
      case kind::nu: {
        if (warnings && (used_originals.count(f->name) || reserved.count(f->name)))
          warnings->push_back("binder '" + f->name + "' renamed to keep the formula well-named");
        used_originals.insert(f->name);
        std::string canonical = fresh();
        auto previous = env.find(f->name);
        std::string saved;
        bool had = previous != env.end();
        if (had) saved = previous->second;
        env[f->name] = canonical;
        formula_ptr body = walk(f->left, env);
        if (had)
          env[f->name] = saved;
        else
          env.erase(f->name);
        return node(f->k, canonical, std::move(body));
      }
      case kind::disj:
      case kind::conj:
        return node(f->k, f->name, walk(f->left, env), walk(f->right, env));
      case kind::diamond:
      case kind::box:
        return node(f->k, f->name, walk(f->left, env));
    }
    throw error("unreachable formula kind");
  }
};

}  // namespace

formula_ptr canonicalize(const formula_ptr& f, std::vector<std::string>* warnings) {
  std::set<std::string> reserved;
  collect_leaf_names(f, {}, reserved);
  renamer r{reserved, warnings, 0, {}};
  std::map<std::string, std::string> env;
  return r.walk(f, env);
}

parse_result parse_formula(const std::string& text) {
  parser p(text);
  formula_ptr raw = p.parse();
  parse_result result;
  result.parsed = canonicalize(raw, &result.warnings);
  return result;
}

namespace {

formula_ptr canon(const formula_ptr& f) { return canonicalize(f); }

}  // namespace

formula_ptr negate_formula(const formula_ptr& f) {
  switch (f->k) {
    case kind::prop:
      return make_nprop(f->name);
    case kind::nprop:
      return make_prop(f->name);
    case kind::var:
      return f;
    case kind::disj:
      return make_and(negate_formula(f->left), negate_formula(f->right));
    case kind::conj:
      return make_or(negate_formula(f->left), negate_formula(f->right));
    case kind::diamond:
      return make_box(f->name, negate_formula(f->left));
    case kind::box:
      return make_diamond(f->name, negate_formula(f->left));
    case kind::mu:
      return make_nu(f->name, negate_formula(f->left));
    case kind::nu:
      return make_mu(f->name, negate_formula(f->left));
  }
  throw error("unreachable formula kind");
}

formula_ptr substitute(const formula_ptr& f, const std::string& var, const formula_ptr& replacement) {
  switch (f->k) {
    case kind::prop:
    case kind::nprop:
      return f;
    case kind::var:
      return f->name == var ? replacement : f;
    case kind::mu:
    case kind::nu:
      if (f->name == var) return f;  // shadowed
      return node(f->k, f->name, substitute(f->left, var, replacement));
    case kind::disj:
    case kind::conj:
      return node(f->k, f->name, substitute(f->left, var, replacement),
                  substitute(f->right, var, replacement));
    case kind::diamond:
    case kind::box:
      return node(f->k, f->name, substitute(f->left, var, replacement));
  }
  throw error("unreachable formula kind");
}

formula_ptr unfold(const formula_ptr& fixpoint) {
  if (fixpoint->k != kind::mu && fixpoint->k != kind::nu)
    throw error("unfold: not a fixed-point formula");
  return substitute(fixpoint->left, fixpoint->name, fixpoint);
}

namespace {

void collect_addresses(const formula_ptr& f, const std::string& path,
                       const std::function<bool(const formula&)>& pick,
                       std::vector<std::string>& out) {
  if (pick(*f)) out.push_back(path);
  if (f->left) collect_addresses(f->left, path + "0", pick, out);
  if (f->right) collect_addresses(f->right, path + "1", pick, out);
}

std::vector<std::string> var_occurrences(const formula_ptr& f, const std::string& var) {
  std::vector<std::string> out;
  collect_addresses(
      f, "", [&](const formula& g) { return g.k == kind::var && g.name == var; }, out);
  return out;
}

}  // namespace

std::vector<std::string> nu_addresses(const formula_ptr& f) {
  std::vector<std::string> out;
  collect_addresses(
      f, "", [](const formula& g) { return g.k == kind::nu; }, out);
  return out;
}

formula_ptr subformula_at(const formula_ptr& f, const std::string& address) {
  formula_ptr cur = f;
  for (char c : address) {
    if (c == '0' && cur->left)
      cur = cur->left;
    else if (c == '1' && cur->right)
      cur = cur->right;
    else
      throw error("subformula_at: bad address '" + address + "'");
  }
  return cur;
}

lts parse_lts(const std::string& text) {
  lts model;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_states = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string head;
    if (!(fields >> head)) continue;
    auto fail = [&](const std::string& what) {
      throw error("lts parse: " + what + " on line " + std::to_string(line_no));
    };
    if (head == "states") {
      if (!(fields >> model.state_count) || model.state_count < 0) fail("state count expected");
      have_states = true;
    } else if (head == "trans") {
      std::string action;
      int i, j;
      if (!have_states) fail("'states' must come first");
      if (!(fields >> action >> i >> j)) fail("'trans a i j' expected");
      if (i < 0 || i >= model.state_count || j < 0 || j >= model.state_count)
        fail("transition state out of range");
      model.transitions[action].insert({i, j});
    } else if (head == "label") {
      std::string prop;
      int i;
      if (!have_states) fail("'states' must come first");
      if (!(fields >> prop >> i)) fail("'label p i' expected");
      if (i < 0 || i >= model.state_count) fail("label state out of range");
      model.labels[prop].insert(i);
    } else {
      fail("unknown directive '" + head + "'");
    }
  }
  if (!have_states) throw error("lts parse: missing 'states' header");
  return model;
}

namespace {

state_set all_states(const lts& model) {
  state_set s;
  for (int i = 0; i < model.state_count; ++i) s.insert(i);
  return s;
}

state_set complement(const lts& model, const state_set& s) {
  state_set out;
  for (int i = 0; i < model.state_count; ++i)
    if (!s.count(i)) out.insert(i);
  return out;
}

state_set set_union(const state_set& a, const state_set& b) {
  state_set out = a;
  out.insert(b.begin(), b.end());
  return out;
}

state_set set_intersection(const state_set& a, const state_set& b) {
  state_set out;
  for (int s : a)
    if (b.count(s)) out.insert(s);
  return out;
}

const std::set<std::pair<int, int>>& transitions_of(const lts& model, const std::string& action) {
  static const std::set<std::pair<int, int>> empty;
  auto it = model.transitions.find(action);
  return it == model.transitions.end() ? empty : it->second;
}

state_set diamond_pre(const lts& model, const std::string& action, const state_set& target) {
  state_set out;
  for (auto [s, t] : transitions_of(model, action))
    if (target.count(t)) out.insert(s);
  return out;
}

state_set box_pre(const lts& model, const std::string& action, const state_set& target) {
  state_set out = all_states(model);
  for (auto [s, t] : transitions_of(model, action))
    if (!target.count(t)) out.erase(s);
  return out;
}

// Shared evaluator; when `annotation` is set, nu binders are evaluated as
// the annotated approximant stage instead of the full greatest fixed point.
state_set evaluate(const formula_ptr& f, const lts& model, valuation& rho,
                   const nu_annotation* annotation, semantics_stats* stats) {
  switch (f->k) {
    case kind::prop: {
      auto it = model.labels.find(f->name);
      return it == model.labels.end() ? state_set{} : it->second;
    }
    case kind::nprop: {
      auto it = model.labels.find(f->name);
      return complement(model, it == model.labels.end() ? state_set{} : it->second);
    }
    case kind::var: {
      auto it = rho.find(f->name);
      return it == rho.end() ? state_set{} : it->second;
    }
    case kind::disj:
      return set_union(evaluate(f->left, model, rho, annotation, stats),
                       evaluate(f->right, model, rho, annotation, stats));
    case kind::conj:
      return set_intersection(evaluate(f->left, model, rho, annotation, stats),
                              evaluate(f->right, model, rho, annotation, stats));
    case kind::diamond:
      return diamond_pre(model, f->name, evaluate(f->left, model, rho, annotation, stats));
    case kind::box:
      return box_pre(model, f->name, evaluate(f->left, model, rho, annotation, stats));
    case kind::mu:
    case kind::nu: {
      auto saved = rho.find(f->name) != rho.end() ? std::optional<state_set>(rho[f->name])
                                                  : std::optional<state_set>();
      state_set current;
      if (f->k == kind::nu) current = all_states(model);
      if (f->k == kind::nu && annotation) {
        auto it = annotation->find(f->name);
        std::uint32_t stage =
            it != annotation->end() ? it->second : static_cast<std::uint32_t>(model.state_count);
        // F^a(top) as the a-fold application; equals the intersection form
        // for monotone F
        for (std::uint32_t step = 0; step < stage; ++step) {
          rho[f->name] = current;
          current = evaluate(f->left, model, rho, annotation, stats);
        }
      } else {
        int iterations = 0;
        while (true) {
          ++iterations;
          rho[f->name] = current;
          state_set next = evaluate(f->left, model, rho, annotation, stats);
          if (next == current) break;
          current = std::move(next);
        }
        if (stats) stats->max_binder_iterations = std::max(stats->max_binder_iterations, iterations);
      }
      if (saved)
        rho[f->name] = *saved;
      else
        rho.erase(f->name);
      return current;
    }
  }
  throw error("unreachable formula kind");
}

}  // namespace

state_set semantics(const formula_ptr& f, const lts& model, const valuation& rho,
                    semantics_stats* stats) {
  valuation env = rho;
  return evaluate(f, model, env, nullptr, stats);
}

state_set approximant_semantics(const formula_ptr& f, const nu_annotation& annotation,
                                const lts& model, const valuation& rho) {
  valuation env = rho;
  return evaluate(f, model, env, &annotation, nullptr);
}

sequent make_sequent(std::vector<formula_ptr> formulas) {
  for (formula_ptr& f : formulas) f = canon(f);
  std::sort(formulas.begin(), formulas.end(),
            [](const formula_ptr& a, const formula_ptr& b) { return render(a) < render(b); });
  formulas.erase(std::unique(formulas.begin(), formulas.end(),
                             [](const formula_ptr& a, const formula_ptr& b) {
                               return render(a) == render(b);
                             }),
                 formulas.end());
  return {std::move(formulas)};
}

std::string render(const sequent& s) {
  std::string out;
  for (std::size_t i = 0; i < s.formulas.size(); ++i) {
    if (i) out += ", ";
    out += render(s.formulas[i]);
  }
  return out;
}

sequent parse_sequent(const std::string& text) {
  std::vector<formula_ptr> formulas;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
    bool blank = part.find_first_not_of(" \t") == std::string::npos;
    if (!blank) formulas.push_back(parse_formula(part).parsed);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (formulas.empty()) throw error("parse_sequent: no formulas in '" + text + "'");
  return make_sequent(std::move(formulas));
}

judgement judgement_of(const sequent& s) { return judgement{render(s)}; }

sequent sequent_of(const judgement& j) { return parse_sequent(j.text); }

namespace {

void free_variables(const formula_ptr& f, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (f->k) {
    case kind::var:
      if (!bound.count(f->name)) out.insert(f->name);
      return;
    case kind::mu:
    case kind::nu: {
      bool fresh = bound.insert(f->name).second;
      free_variables(f->left, bound, out);
      if (fresh) bound.erase(f->name);
      return;
    }
    default:
      if (f->left) free_variables(f->left, bound, out);
      if (f->right) free_variables(f->right, bound, out);
      return;
  }
}

}  // namespace

bool is_valid_sequent(const sequent& s, const lts& model, std::uint64_t budget) {
  std::set<std::string> free;
  std::set<std::string> bound;
  for (const formula_ptr& f : s.formulas) free_variables(f, bound, free);
  std::vector<std::string> vars(free.begin(), free.end());

  const std::uint64_t bits = static_cast<std::uint64_t>(vars.size()) * model.state_count;
  if (bits >= 63 || (1ULL << bits) > budget)
    throw budget_exceeded("is_valid_sequent: " + std::to_string(vars.size()) +
                          " free variables over " + std::to_string(model.state_count) +
                          " states exceed the valuation budget");

  const std::uint64_t assignments = 1ULL << bits;
  for (std::uint64_t mask = 0; mask < assignments; ++mask) {
    valuation rho;
    for (std::size_t v = 0; v < vars.size(); ++v) {
      state_set value;
      for (int st = 0; st < model.state_count; ++st)
        if (mask >> (v * model.state_count + st) & 1) value.insert(st);
      rho[vars[v]] = std::move(value);
    }
    state_set covered;
    for (const formula_ptr& f : s.formulas) covered = set_union(covered, semantics(f, model, rho));
    if (static_cast<int>(covered.size()) != model.state_count) return false;
  }
  return true;
}

rule_instance make_rule(const std::string& schema, const sequent& conclusion,
                        const std::vector<sequent>& premises) {
  rule_instance rule;
  rule.schema = schema;
  rule.conclusion = judgement_of(conclusion);
  for (const sequent& p : premises) rule.premises.push_back(judgement_of(p));
  std::string id = schema + "|" + rule.conclusion.text;
  for (const judgement& p : rule.premises) id += "=>" + p.text;
  rule.rule_id = id;
  return rule;
}


namespace {

using formula_map = std::map<std::string, formula_ptr>;  // render -> formula

formula_map as_map(const sequent& s) {
  formula_map m;
  for (const formula_ptr& f : s.formulas) m.emplace(render(f), f);
  return m;
}

bool same_formulas(const formula_map& a, const formula_map& b) {
  if (a.size() != b.size()) return false;
  auto it = b.begin();
  for (const auto& entry : a) {
    if (it->first != entry.first) return false;
    ++it;
  }
  return true;
}

formula_map without(formula_map m, const std::string& key) {
  m.erase(key);
  return m;
}

formula_map with(formula_map m, const formula_ptr& f) {
  formula_ptr c = canon(f);
  m.emplace(render(c), std::move(c));
  return m;
}

// The instantiated shape of a rule, with the principal assignment recovered
// from the sequents: the first consistent candidate in rendering order.
struct rule_shape {
  std::string schema;
  sequent conclusion;
  std::vector<sequent> premises;
  formula_ptr principal;  // null for Ax; the dropped formula for Wk
};

std::optional<rule_shape> analyse_rule(const rule_instance& rule) {
  rule_shape shape;
  shape.schema = rule.schema;
  try {
    shape.conclusion = sequent_of(rule.conclusion);
    for (const judgement& p : rule.premises) shape.premises.push_back(sequent_of(p));
  } catch (const error&) {
    return std::nullopt;
  }
  const formula_map conclusion = as_map(shape.conclusion);

  if (rule.schema == "Ax") {
    if (!rule.premises.empty() || conclusion.size() != 2) return std::nullopt;
    const formula_ptr a = conclusion.begin()->second;
    const formula_ptr b = std::next(conclusion.begin())->second;
    bool dual = (a->k == kind::prop && b->k == kind::nprop && a->name == b->name) ||
                (a->k == kind::nprop && b->k == kind::prop && a->name == b->name);
    if (!dual) return std::nullopt;
    return shape;
  }

  if (rule.schema == "Wk") {
    if (shape.premises.size() != 1) return std::nullopt;
    const formula_map premise = as_map(shape.premises[0]);
    std::vector<formula_ptr> dropped;
    for (const auto& [key, f] : conclusion)
      if (!premise.count(key)) dropped.push_back(f);
    if (dropped.size() != 1) return std::nullopt;
    if (!same_formulas(premise, without(conclusion, render(dropped[0])))) return std::nullopt;
    shape.principal = dropped[0];
    return shape;
  }

  if (rule.schema == "Or") {
    if (shape.premises.size() != 1) return std::nullopt;
    const formula_map premise = as_map(shape.premises[0]);
    for (const auto& [key, f] : conclusion) {
      if (f->k != kind::disj) continue;
      if (same_formulas(premise, with(with(without(conclusion, key), f->left), f->right))) {
        shape.principal = f;
        return shape;
      }
    }
    return std::nullopt;
  }

  if (rule.schema == "And") {
    if (shape.premises.size() != 2) return std::nullopt;
    const formula_map left = as_map(shape.premises[0]);
    const formula_map right = as_map(shape.premises[1]);
    for (const auto& [key, f] : conclusion) {
      if (f->k != kind::conj) continue;
      formula_map base = without(conclusion, key);
      if (same_formulas(left, with(base, f->left)) && same_formulas(right, with(base, f->right))) {
        shape.principal = f;
        return shape;
      }
    }
    return std::nullopt;
  }

  if (rule.schema == "Mod") {
    if (shape.premises.size() != 1) return std::nullopt;
    const formula_map premise = as_map(shape.premises[0]);
    for (const auto& [key, f] : conclusion) {
      if (f->k != kind::box) continue;
      const std::string& action = f->name;
      bool sides_ok = true;
      formula_map expected;
      for (const auto& [other_key, g] : conclusion) {
        if (other_key == key) {
          expected = with(std::move(expected), f->left);
        } else if (g->k == kind::diamond && g->name == action) {
          expected = with(std::move(expected), g->left);
        } else {
          sides_ok = false;
          break;
        }
      }
      if (sides_ok && same_formulas(premise, expected)) {
        shape.principal = f;
        return shape;
      }
    }
    return std::nullopt;
  }

  if (rule.schema == "Mu" || rule.schema == "Nu") {
    if (shape.premises.size() != 1) return std::nullopt;
    const kind want = rule.schema == "Mu" ? kind::mu : kind::nu;
    const formula_map premise = as_map(shape.premises[0]);
    for (const auto& [key, f] : conclusion) {
      if (f->k != want) continue;
      if (same_formulas(premise, with(without(conclusion, key), unfold(f)))) {
        shape.principal = f;
        return shape;
      }
    }
    return std::nullopt;
  }

  return std::nullopt;
}

formula_token marked_token(const formula_ptr& f, const std::string& addr) {
  return formula_token{render(f) + "#" + addr};
}

// Mark correspondence per rule: identity on side formulas, descent into the
// decomposed principal, and for fixed-point unfoldings one target in the
// body copy plus one per substituted occurrence. Only nu-unfold steps whose
// mark sits on the principal binder progress.
std::vector<trace_step> marked_steps(const rule_shape& shape, int premise_index) {
  std::vector<trace_step> steps;
  auto identity_for = [&](const formula_ptr& f) {
    for (const std::string& addr : nu_addresses(f))
      steps.push_back({marked_token(f, addr), marked_token(f, addr), false});
  };

  if (shape.schema == "Ax") return steps;

  if (shape.schema == "Wk") {
    for (const formula_ptr& f : shape.premises[0].formulas) identity_for(f);
    return steps;
  }

  const formula_ptr principal = shape.principal;
  if (shape.schema == "Or" || shape.schema == "And" || shape.schema == "Mu" ||
      shape.schema == "Nu") {
    const std::string principal_key = render(principal);
    for (const formula_ptr& f : shape.conclusion.formulas)
      if (render(f) != principal_key) identity_for(f);
  }

  // Targets are re-canonicalised: sequent members are stored as canonical
  // alpha-representatives, and renaming never moves an address.
  if (shape.schema == "Or") {
    const formula_ptr left = canon(principal->left);
    const formula_ptr right = canon(principal->right);
    for (const std::string& addr : nu_addresses(principal)) {
      const formula_ptr& into = addr[0] == '0' ? left : right;
      steps.push_back({marked_token(principal, addr), marked_token(into, addr.substr(1)), false});
    }
  } else if (shape.schema == "And") {
    const char branch = premise_index == 0 ? '0' : '1';
    const formula_ptr into = canon(premise_index == 0 ? principal->left : principal->right);
    for (const std::string& addr : nu_addresses(principal))
      if (addr[0] == branch)
        steps.push_back({marked_token(principal, addr), marked_token(into, addr.substr(1)), false});
  } else if (shape.schema == "Mod") {
    for (const formula_ptr& f : shape.conclusion.formulas) {
      const formula_ptr stripped = canon(f->left);
      for (const std::string& addr : nu_addresses(f))
        steps.push_back({marked_token(f, addr), marked_token(stripped, addr.substr(1)), false});
    }
  } else if (shape.schema == "Mu" || shape.schema == "Nu") {
    const formula_ptr unfolded = canon(unfold(principal));
    const std::vector<std::string> occurrences = var_occurrences(principal->left, principal->name);
    for (const std::string& addr : nu_addresses(principal)) {
      if (addr.empty()) {
        // the mark sits on the principal nu itself: its unfolding progresses
        for (const std::string& occ : occurrences)
          steps.push_back({marked_token(principal, addr), marked_token(unfolded, occ), true});
      } else {
        steps.push_back(
            {marked_token(principal, addr), marked_token(unfolded, addr.substr(1)), false});
        for (const std::string& occ : occurrences)
          steps.push_back({marked_token(principal, addr), marked_token(unfolded, occ + addr), false});
      }
    }
  }

  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

}  // namespace

bool validate_rule_instance(const rule_instance& rule) { return analyse_rule(rule).has_value(); }

proof_system mu_proof_system() {
  proof_system system;
  system.name = "mucalc";
  system.validate = [](const rule_instance& rule) { return validate_rule_instance(rule); };
  system.fml = [](const judgement& j) { return marked_sequents(sequent_of(j)); };
  return system;
}

formula_set marked_sequents(const sequent& s) {
  std::vector<formula_token> tokens;
  for (const formula_ptr& f : s.formulas) {
    std::string base = render(f);
    for (const std::string& addr : nu_addresses(f)) tokens.push_back({base + "#" + addr});
  }
  return make_formula_set(std::move(tokens));
}

trace_structure mu_trace_structure() {
  auto fml_cache = std::make_shared<std::map<std::string, formula_set>>();
  auto step_cache =
      std::make_shared<std::map<std::pair<std::string, int>, std::vector<trace_step>>>();

  trace_structure t;
  t.fml = [fml_cache](const judgement& j) {
    auto it = fml_cache->find(j.text);
    if (it == fml_cache->end()) it = fml_cache->emplace(j.text, marked_sequents(sequent_of(j))).first;
    return it->second;
  };
  t.steps = [step_cache](const rule_instance& rule, int premise) {
    auto key = std::make_pair(rule.rule_id, premise);
    auto it = step_cache->find(key);
    if (it == step_cache->end()) {
      std::vector<trace_step> steps;
      if (auto shape = analyse_rule(rule);
          shape && premise >= 0 && premise < static_cast<int>(shape->premises.size()))
        steps = marked_steps(*shape, premise);
      it = step_cache->emplace(std::move(key), std::move(steps)).first;
    }
    return it->second;
  };
  return t;
}

namespace {

struct correspondence {
  formula_ptr from;
  formula_ptr to;
  formula_ptr unfolds;  // the fixed-point formula unfolded by this step, or null
};

std::vector<correspondence> thread_correspondences(const rule_shape& shape, int premise_index) {
  std::vector<correspondence> out;
  if (shape.schema == "Ax") return out;
  if (shape.schema == "Wk") {
    for (const formula_ptr& f : shape.premises[0].formulas) out.push_back({f, f, nullptr});
    return out;
  }
  if (shape.schema == "Mod") {
    for (const formula_ptr& f : shape.conclusion.formulas) out.push_back({f, canon(f->left), nullptr});
    return out;
  }
  const formula_ptr principal = shape.principal;
  const std::string principal_key = render(principal);
  for (const formula_ptr& f : shape.conclusion.formulas)
    if (render(f) != principal_key) out.push_back({f, f, nullptr});
  if (shape.schema == "Or") {
    out.push_back({principal, canon(principal->left), nullptr});
    out.push_back({principal, canon(principal->right), nullptr});
  } else if (shape.schema == "And") {
    out.push_back({principal, canon(premise_index == 0 ? principal->left : principal->right), nullptr});
  } else {
    out.push_back({principal, canon(unfold(principal)), principal});
  }
  return out;
}

// Dependency on binders is read off the closure formulas that actually get
// unfolded: the binder of x is outer to that of y exactly when x's unfolding
// formula recurs as a proper subformula of y's (variable names themselves
// are not stable across unfolding variants).
bool proper_subformula(const formula_ptr& inner, const formula_ptr& outer) {
  const std::string key = render(inner);
  bool found = false;
  auto walk = [&](auto&& self, const formula_ptr& f, bool is_root) -> void {
    if (found) return;
    if (!is_root && render(canon(f)) == key) {
      found = true;
      return;
    }
    if (f->left) self(self, f->left, false);
    if (f->right) self(self, f->right, false);
  };
  walk(walk, outer, true);
  return found;
}

}  // namespace

bool nu_thread_check(const pre_proof& proof, const lasso& l) {
  check_lasso(proof, l);

  std::vector<std::pair<node_id, int>> positions = l.prefix;
  positions.insert(positions.end(), l.cycle.begin(), l.cycle.end());
  const std::size_t count = positions.size();
  const std::size_t wrap = l.prefix.size();
  auto successor = [&](std::size_t p) { return p + 1 < count ? p + 1 : wrap; };

  std::vector<rule_shape> shapes(count);
  std::vector<sequent> sequents(count);
  for (std::size_t p = 0; p < count; ++p) {
    auto shape = analyse_rule(proof.rules[positions[p].first]);
    if (!shape) throw error("nu_thread_check: rule instance is not a mu-calculus rule");
    shapes[p] = *shape;
    sequents[p] = shape->conclusion;
  }

  // product nodes (position, formula); arcs follow the thread correspondence
  std::map<std::pair<std::size_t, std::string>, int> index;
  std::vector<std::pair<std::size_t, formula_ptr>> nodes;
  for (std::size_t p = 0; p < count; ++p)
    for (const formula_ptr& f : sequents[p].formulas) {
      index[{p, render(f)}] = static_cast<int>(nodes.size());
      nodes.push_back({p, f});
    }

  struct thread_arc {
    int src, dst;
    std::string unfolds;  // render of the unfolded closure formula, or empty
  };
  std::vector<thread_arc> arcs;
  std::map<std::string, formula_ptr> unfolded;  // render -> closure formula
  for (std::size_t p = 0; p < count; ++p) {
    std::size_t q = successor(p);
    for (const correspondence& c : thread_correspondences(shapes[p], positions[p].second)) {
      auto src = index.find({p, render(c.from)});
      auto dst = index.find({q, render(c.to)});
      if (src == index.end() || dst == index.end()) continue;
      std::string id;
      if (c.unfolds) {
        id = render(c.unfolds);
        unfolded.emplace(id, c.unfolds);
      }
      arcs.push_back({src->second, dst->second, std::move(id)});
    }
  }

  std::map<std::pair<std::string, std::string>, bool> below_cache;
  auto strictly_below = [&](const std::string& a, const std::string& b) {
    if (a == b) return false;
    auto key = std::make_pair(a, b);
    auto it = below_cache.find(key);
    if (it == below_cache.end())
      it = below_cache.emplace(key, proper_subformula(unfolded.at(a), unfolded.at(b))).first;
    return it->second;
  };

  for (const auto& [v, v_formula] : unfolded) {
    if (v_formula->k != kind::nu) continue;
    auto allowed = [&](const thread_arc& a) {
      return a.unfolds.empty() || a.unfolds == v || !strictly_below(a.unfolds, v);
    };
    std::vector<std::vector<int>> adjacency(nodes.size());
    for (std::size_t k = 0; k < arcs.size(); ++k)
      if (allowed(arcs[k])) adjacency[arcs[k].src].push_back(arcs[k].dst);
    for (const thread_arc& a : arcs) {
      if (a.unfolds != v) continue;
      // the v-unfold arc lies on a cycle iff its target reaches its source
      std::vector<bool> seen(nodes.size(), false);
      std::deque<int> queue{a.dst};
      seen[a.dst] = true;
      bool reaches = false;
      while (!queue.empty() && !reaches) {
        int x = queue.front();
        queue.pop_front();
        if (x == a.src) {
          reaches = true;
          break;
        }
        for (int y : adjacency[x])
          if (!seen[y]) {
            seen[y] = true;
            queue.push_back(y);
          }
      }
      if (reaches) return true;
    }
  }
  return false;
}

harness_report soundness_harness(const pre_proof& proof, const std::vector<lts>& models) {
  trace_structure t = mu_trace_structure();
  if (!decide_gtc(proof, t).holds)
    throw not_a_proof("soundness_harness: the pre-proof does not satisfy the GTC");
  harness_report report;
  for (std::size_t k = 0; k < models.size(); ++k)
    for (node_id v = 0; v < proof.node_count(); ++v)
      if (!is_valid_sequent(sequent_of(proof.judgements[v]), models[k]))
        report.violations.push_back({static_cast<int>(k), v, proof.judgements[v].text});
  return report;
}

}  // namespace nwp::mu
