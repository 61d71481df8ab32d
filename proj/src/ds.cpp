#include "nwp/ds.hpp"

namespace nwp::ds {

std::uint64_t element(const stream_spec& spec, std::size_t index) {
  if (spec.period.empty()) throw error("stream_spec: empty period");
  if (index < spec.prefix.size()) return spec.prefix[index];
  return spec.period[(index - spec.prefix.size()) % spec.period.size()];
}

std::size_t canonical_position(const stream_spec& spec, std::size_t position) {
  if (spec.period.empty()) throw error("stream_spec: empty period");
  std::size_t total = spec.prefix.size() + spec.period.size();
  if (position < total) return position;
  return spec.prefix.size() + (position - spec.prefix.size()) % spec.period.size();
}

std::vector<std::uint64_t> reference(const stream_spec& spec, std::size_t k) {
  std::vector<std::uint64_t> out;
  std::uint64_t run = 1;
  std::size_t pos = 0;
  while (out.size() < k) {
    if (element(spec, pos + 1) < element(spec, pos)) {
      ++run;
    } else {
      out.push_back(run);
      run = 1;
    }
    pos = canonical_position(spec, pos + 1);
  }
  return out;
}

std::vector<std::uint64_t> coalgebraic(std::uint64_t initial_counter, const stream_spec& spec,
                                       std::size_t k, std::uint64_t step_budget) {
  std::vector<std::uint64_t> out;
  ds_state state{initial_counter, 0};
  std::uint64_t steps = 0;
  while (out.size() < k) {
    if (++steps > step_budget) throw budget_exceeded("ds::coalgebraic: step budget exceeded");
    std::uint64_t head = element(spec, state.position);
    std::uint64_t next = element(spec, state.position + 1);
    if (head > next) {
      state = {state.counter + 1, canonical_position(spec, state.position + 1)};
    } else {
      out.push_back(state.counter);
      state = {1, canonical_position(spec, state.position + 1)};
    }
  }
  return out;
}

abstraction abstract_preproof(const stream_spec& spec) {
  if (spec.period.empty()) throw error("stream_spec: empty period");
  const std::size_t total = spec.prefix.size() + spec.period.size();

  abstraction result;
  for (std::size_t p = 0; p < total; ++p) {
    judgement j{"pos" + std::to_string(p)};
    bool descent = element(spec, p) > element(spec, p + 1);
    std::size_t next = canonical_position(spec, p + 1);
    rule_instance rule;
    rule.rule_id = "d" + std::to_string(p);
    rule.schema = descent ? "gt" : "le";
    rule.conclusion = j;
    rule.premises = {judgement{"pos" + std::to_string(next)}};
    result.proof.judgements.push_back(j);
    result.proof.rules.push_back(std::move(rule));
    result.proof.children.push_back({static_cast<node_id>(next)});
  }
  result.proof.roots = {0};

  result.structure.fml = [](const judgement&) { return formula_set{formula_token{"*"}}; };
  result.structure.steps = [](const rule_instance& rule, int) {
    return std::vector<trace_step>{
        {formula_token{"*"}, formula_token{"*"}, rule.schema == "le"}};
  };
  return result;
}

}  // namespace nwp::ds
