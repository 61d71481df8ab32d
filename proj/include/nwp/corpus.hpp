// Seeded random generators and fixed mu-calculus pre-proofs, shared by the
// test suites and the corpus runner.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "nwp/ds.hpp"
#include "nwp/mucalc.hpp"
#include "nwp/ordinal.hpp"

namespace nwp::corpus {

using rng = std::mt19937_64;

struct instance_options {
  int max_nodes = 6;
  int max_fml = 3;
  double extra_edge_prob = 0.5;
  double step_prob = 0.5;
  double prog_prob = 0.4;
  double dual_prob = 0.15;  // chance of a second arc for the same pair
  bool allow_empty_fml = true;
};

struct generated_instance {
  pre_proof proof;
  trace_structure structure;
  int max_fml = 0;  // largest fml set actually used
};

pre_proof random_preproof(rng& gen, int max_nodes, double extra_edge_prob);
generated_instance random_instance(rng& gen, const instance_options& options);

// Valid by construction: fibres of size 1..max_fibre, one rule lift per
// (rule, fibre judgement), random arities and premise reindexings.
proof_system_morphism random_morphism(rng& gen, const pre_proof& proof, int max_fibre);

// Simple cycles (deduplicated up to rotation) of the labelled graph, each
// with a shortest root prefix.
std::vector<lasso> enumerate_lassos(const pre_proof& proof, std::size_t limit = 10'000);

struct mu_fixture {
  std::string name;
  pre_proof proof;
  bool expect_gtc;
  // failing fixtures whose sequents are nonetheless valid everywhere are
  // marked valid-but-unprovable-here
  bool valid_but_unprovable = false;
};

std::vector<mu_fixture> mu_fixtures();

mu::lts random_lts(rng& gen, int max_states, const std::vector<std::string>& actions,
                   const std::vector<std::string>& props);

mu::formula_ptr random_closed_formula(rng& gen, int max_depth,
                                      const std::vector<std::string>& actions,
                                      const std::vector<std::string>& props);

std::vector<ds::stream_spec> random_streams(rng& gen, std::size_t count, std::size_t max_len,
                                            std::uint64_t max_value);

}  // namespace nwp::corpus
