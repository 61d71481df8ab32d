// The descending-sequence example: reference computation, the coalgebraic
// recursion, and a finite abstraction whose GTC is machine-checked.

#pragma once

#include <cstdint>
#include <vector>

#include "nwp/trace.hpp"

namespace nwp::ds {

// The eventually periodic stream prefix . period^w.
struct stream_spec {
  std::vector<std::uint64_t> prefix;
  std::vector<std::uint64_t> period;  // nonempty
};

std::uint64_t element(const stream_spec& spec, std::size_t index);

// Stream position with the counter; positions are canonical modulo the
// period once past the prefix.
struct ds_state {
  std::uint64_t counter = 0;
  std::size_t position = 0;
};

std::size_t canonical_position(const stream_spec& spec, std::size_t position);

// Lengths of the maximal strictly descending runs, scanned from the front.
std::vector<std::uint64_t> reference(const stream_spec& spec, std::size_t k);

// Iterates the case split of the recursion: on a descent the counter grows,
// otherwise the counter is emitted and reset to 1. The step budget guards
// productivity; hitting it would indicate an implementation bug.
std::vector<std::uint64_t> coalgebraic(std::uint64_t initial_counter, const stream_spec& spec,
                                       std::size_t k, std::uint64_t step_budget = 10'000'000);

struct abstraction {
  pre_proof proof;
  trace_structure structure;
};

// One node per canonical stream position, the counter abstracted away (it
// never affects which branch is taken). The single-formula trace structure
// progresses exactly on the output-emitting edges; its GTC holds for every
// stream.
abstraction abstract_preproof(const stream_spec& spec);

}  // namespace nwp::ds
