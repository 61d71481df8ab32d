// Line-oriented proof file format: judgements, rules, nodes, edges, roots,
// an optional trace structure and an optional refutation certificate, plus
// the built-in mucalc and ds systems.

#pragma once

#include <optional>
#include <string>

#include "nwp/ds.hpp"
#include "nwp/mucalc.hpp"
#include "nwp/ordinal.hpp"

namespace nwp::io {

struct file_error : error {
  int line;
  file_error(const std::string& what, int line_number)
      : error("line " + std::to_string(line_number) + ": " + what), line(line_number) {}
};

struct proof_document {
  std::string system;  // "mucalc" | "ds" | "custom"
  proof_system sys;
  pre_proof proof;
  std::vector<std::string> node_names;
  std::optional<trace_structure> structure;
  std::optional<refutation_certificate> refutation;
  std::optional<ds::stream_spec> stream;  // ds only
};

proof_document parse_proof_text(const std::string& text);
proof_document load_proof_file(const std::string& path);

}  // namespace nwp::io
