#include "nwp/proof_file.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace nwp::io {

namespace {

struct line_tokens {
  int number = 0;
  std::vector<std::string> tokens;
};

// whitespace-separated words; double quotes group a single token
std::vector<line_tokens> tokenize(const std::string& text) {
  std::vector<line_tokens> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    line_tokens line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      char c = raw[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (c == '#') break;
      if (c == '"') {
        std::size_t end = raw.find('"', i + 1);
        if (end == std::string::npos) throw file_error("unterminated quote", number);
        line.tokens.push_back(raw.substr(i + 1, end - i - 1));
        i = end + 1;
        continue;
      }
      std::size_t end = i;
      while (end < raw.size() && !std::isspace(static_cast<unsigned char>(raw[end])) &&
             raw[end] != '#')
        ++end;
      line.tokens.push_back(raw.substr(i, end - i));
      i = end;
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

int parse_int(const std::string& token, int line) {
  try {
    std::size_t used = 0;
    int value = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw file_error("integer expected, got '" + token + "'", line);
  }
}

std::vector<std::uint64_t> parse_csv(const std::string& token, int line) {
  std::vector<std::uint64_t> values;
  std::size_t start = 0;
  while (start < token.size()) {
    std::size_t comma = token.find(',', start);
    std::string part = token.substr(start, comma == std::string::npos ? comma : comma - start);
    try {
      std::size_t used = 0;
      values.push_back(std::stoull(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw file_error("number expected in list, got '" + part + "'", line);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

// shared by custom and mucalc sections
struct graph_section {
  std::vector<std::string> node_names;
  std::map<std::string, node_id> node_index;
  std::map<node_id, std::map<int, node_id>> edges;
  std::vector<node_id> roots;

  node_id lookup(const std::string& name, int line) const {
    auto it = node_index.find(name);
    if (it == node_index.end()) throw file_error("unknown node '" + name + "'", line);
    return it->second;
  }

  std::vector<std::vector<node_id>> children() const {
    std::vector<std::vector<node_id>> result(node_names.size());
    for (const auto& [node, premise_map] : edges) {
      std::vector<node_id>& kids = result[node];
      for (const auto& [index, target] : premise_map) {
        if (index != static_cast<int>(kids.size()))
          throw file_error("edges of node '" + node_names[node] +
                               "' must use premise indices 0,1,... without gaps",
                           1);
        kids.push_back(target);
      }
    }
    return result;
  }
};

std::pair<std::string, int> parse_cycle_entry(const std::string& token, int line) {
  std::size_t colon = token.rfind(':');
  if (colon == std::string::npos)
    throw file_error("cycle entry must be node:premise, got '" + token + "'", line);
  return {token.substr(0, colon), parse_int(token.substr(colon + 1), line)};
}

}  // namespace

proof_document parse_proof_text(const std::string& text) {
  std::vector<line_tokens> lines = tokenize(text);
  if (lines.empty()) throw file_error("empty proof file", 1);
  if (lines[0].tokens[0] != "system" || lines[0].tokens.size() != 2)
    throw file_error("first directive must be 'system <mucalc|ds|custom>'", lines[0].number);

  proof_document doc;
  doc.system = lines[0].tokens[1];

  graph_section graph;
  std::map<std::string, judgement> judgements;
  std::map<std::string, rule_instance> rules;
  std::vector<std::pair<std::string, std::string>> node_decls;  // (jid, rid) or (schema, sequent)
  std::map<judgement, formula_set> fml_table;
  std::map<std::pair<std::string, int>, std::vector<trace_step>> step_table;
  bool has_trace_tables = false;
  std::vector<std::pair<std::string, int>> refutation_cycle;
  std::map<int, annotation> refutation_annotations;

  auto declare_node = [&](const std::string& name, int line) {
    if (graph.node_index.count(name)) throw file_error("node '" + name + "' declared twice", line);
    graph.node_index[name] = static_cast<node_id>(graph.node_names.size());
    graph.node_names.push_back(name);
  };

  for (std::size_t k = 1; k < lines.size(); ++k) {
    const int line = lines[k].number;
    const std::vector<std::string>& tokens = lines[k].tokens;
    const std::string& head = tokens[0];
    auto want = [&](std::size_t count, const char* usage) {
      if (tokens.size() != count) throw file_error(std::string("usage: ") + usage, line);
    };

    if (head == "stream") {
      if (doc.system != "ds") throw file_error("'stream' is only valid for system ds", line);
      ds::stream_spec spec;
      if (tokens.size() % 2 != 1) throw file_error("usage: stream [prefix <csv>] period <csv>", line);
      for (std::size_t i = 1; i + 1 < tokens.size(); i += 2) {
        if (tokens[i] == "prefix")
          spec.prefix = parse_csv(tokens[i + 1], line);
        else if (tokens[i] == "period")
          spec.period = parse_csv(tokens[i + 1], line);
        else
          throw file_error("expected 'prefix' or 'period', got '" + tokens[i] + "'", line);
      }
      if (spec.period.empty()) throw file_error("stream needs a nonempty period", line);
      doc.stream = std::move(spec);
    } else if (head == "judgement") {
      want(3, "judgement <id> \"<text>\"");
      if (!judgements.emplace(tokens[1], judgement{tokens[2]}).second)
        throw file_error("judgement '" + tokens[1] + "' declared twice", line);
    } else if (head == "rule") {
      if (tokens.size() < 5 || tokens[4] != ":")
        throw file_error("usage: rule <id> <schema> <conclusion> : [<premise>...]", line);
      rule_instance rule;
      rule.rule_id = tokens[1];
      rule.schema = tokens[2];
      auto conclusion = judgements.find(tokens[3]);
      if (conclusion == judgements.end())
        throw file_error("unknown judgement '" + tokens[3] + "'", line);
      rule.conclusion = conclusion->second;
      for (std::size_t i = 5; i < tokens.size(); ++i) {
        auto premise = judgements.find(tokens[i]);
        if (premise == judgements.end())
          throw file_error("unknown judgement '" + tokens[i] + "'", line);
        rule.premises.push_back(premise->second);
      }
      if (!rules.emplace(rule.rule_id, std::move(rule)).second)
        throw file_error("rule '" + tokens[1] + "' declared twice", line);
    } else if (head == "node") {
      want(4, "node <id> <judgement> <rule>  |  node <id> <schema> \"<sequent>\"");
      declare_node(tokens[1], line);
      node_decls.push_back({tokens[2], tokens[3]});
    } else if (head == "edge") {
      want(4, "edge <source> <premise-index> <target>");
      node_id source = graph.lookup(tokens[1], line);
      int index = parse_int(tokens[2], line);
      node_id target = graph.lookup(tokens[3], line);
      if (!graph.edges[source].emplace(index, target).second)
        throw file_error("duplicate edge index " + tokens[2] + " on node '" + tokens[1] + "'", line);
    } else if (head == "root") {
      want(2, "root <node>");
      graph.roots.push_back(graph.lookup(tokens[1], line));
    } else if (head == "fml") {
      if (tokens.size() < 2) throw file_error("usage: fml <judgement> [<token>...]", line);
      auto it = judgements.find(tokens[1]);
      if (it == judgements.end()) throw file_error("unknown judgement '" + tokens[1] + "'", line);
      std::vector<formula_token> set;
      for (std::size_t i = 2; i < tokens.size(); ++i) set.push_back({tokens[i]});
      fml_table[it->second] = make_formula_set(std::move(set));
      has_trace_tables = true;
    } else if (head == "step") {
      if (tokens.size() != 5 && !(tokens.size() == 6 && tokens[5] == "prog"))
        throw file_error("usage: step <rule> <premise-index> <from> <to> [prog]", line);
      if (!rules.count(tokens[1])) throw file_error("unknown rule '" + tokens[1] + "'", line);
      int index = parse_int(tokens[2], line);
      step_table[{tokens[1], index}].push_back(
          {formula_token{tokens[3]}, formula_token{tokens[4]}, tokens.size() == 6});
      has_trace_tables = true;
    } else if (head == "refutation-cycle") {
      if (tokens.size() < 2) throw file_error("usage: refutation-cycle <node>:<idx> ...", line);
      for (std::size_t i = 1; i < tokens.size(); ++i)
        refutation_cycle.push_back(parse_cycle_entry(tokens[i], line));
    } else if (head == "refutation-ann") {
      if (tokens.size() < 5 || tokens[3] != "=")
        throw file_error("usage: refutation-ann <position> <token> = <ordinal>", line);
      int position = parse_int(tokens[1], line);
      std::string ordinal_text;
      for (std::size_t i = 4; i < tokens.size(); ++i) {
        if (i > 4) ordinal_text += ' ';
        ordinal_text += tokens[i];
      }
      try {
        refutation_annotations[position][formula_token{tokens[2]}] = parse_ordinal(ordinal_text);
      } catch (const error& e) {
        throw file_error(e.what(), line);
      }
    } else {
      throw file_error("unknown directive '" + head + "'", line);
    }
  }

  if (doc.system == "ds") {
    if (!doc.stream) throw file_error("system ds needs a 'stream' line", lines[0].number);
    ds::abstraction abs = ds::abstract_preproof(*doc.stream);
    doc.proof = std::move(abs.proof);
    doc.structure = std::move(abs.structure);
    for (node_id v = 0; v < doc.proof.node_count(); ++v)
      doc.node_names.push_back(doc.proof.judgements[v].text);
    doc.sys.name = "ds";
    doc.sys.validate = [](const rule_instance& rule) {
      return (rule.schema == "gt" || rule.schema == "le") && rule.arity() == 1;
    };
    doc.sys.fml = doc.structure->fml;
    return doc;
  }

  if (graph.node_names.empty()) throw file_error("no nodes declared", lines[0].number);
  doc.node_names = graph.node_names;
  std::vector<std::vector<node_id>> children = graph.children();

  if (doc.system == "mucalc") {
    std::vector<mu::sequent> sequents;
    for (const auto& [schema, sequent_text] : node_decls) {
      (void)schema;
      try {
        sequents.push_back(mu::parse_sequent(sequent_text));
      } catch (const error& e) {
        throw file_error(e.what(), lines[0].number);
      }
    }
    for (std::size_t v = 0; v < node_decls.size(); ++v) {
      std::vector<mu::sequent> premises;
      for (node_id child : children[v]) premises.push_back(sequents[child]);
      doc.proof.judgements.push_back(mu::judgement_of(sequents[v]));
      doc.proof.rules.push_back(mu::make_rule(node_decls[v].first, sequents[v], premises));
      doc.proof.children.push_back(children[v]);
    }
    doc.proof.roots = graph.roots;
    doc.sys = mu::mu_proof_system();
    doc.structure = mu::mu_trace_structure();
  } else if (doc.system == "custom") {
    for (std::size_t v = 0; v < node_decls.size(); ++v) {
      auto judgement_it = judgements.find(node_decls[v].first);
      if (judgement_it == judgements.end())
        throw file_error("node '" + graph.node_names[v] + "' uses unknown judgement '" +
                             node_decls[v].first + "'",
                         lines[0].number);
      auto rule_it = rules.find(node_decls[v].second);
      if (rule_it == rules.end())
        throw file_error("node '" + graph.node_names[v] + "' uses unknown rule '" +
                             node_decls[v].second + "'",
                         lines[0].number);
      doc.proof.judgements.push_back(judgement_it->second);
      doc.proof.rules.push_back(rule_it->second);
      doc.proof.children.push_back(children[v]);
    }
    doc.proof.roots = graph.roots;
    doc.sys.name = "custom";
    doc.sys.validate = [](const rule_instance&) { return true; };
    if (has_trace_tables) {
      doc.structure = make_table_trace_structure(fml_table, step_table);
      doc.sys.fml = doc.structure->fml;
    }
  } else {
    throw file_error("unknown system '" + doc.system + "'", lines[0].number);
  }

  if (!refutation_cycle.empty()) {
    refutation_certificate cert;
    for (const auto& [name, index] : refutation_cycle)
      cert.cycle.push_back({graph.lookup(name, lines[0].number), index});
    cert.annotations.resize(cert.cycle.size());
    for (const auto& [position, ann] : refutation_annotations) {
      if (position < 0 || position >= static_cast<int>(cert.cycle.size()))
        throw file_error("refutation-ann position " + std::to_string(position) +
                             " outside the cycle",
                         lines[0].number);
      cert.annotations[position] = ann;
    }
    doc.refutation = std::move(cert);
  }
  return doc;
}

proof_document load_proof_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_proof_text(buffer.str());
}

}  // namespace nwp::io
