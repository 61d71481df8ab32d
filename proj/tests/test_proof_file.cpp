#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nwp/proof_file.hpp"

using namespace nwp;

namespace {

const char* custom_loop = R"(
system custom
judgement A "left"
judgement B "right"
rule r0 step A : B   # unusual schema names are fine for custom systems
rule r1 back B : A
node n0 A r0
node n1 B r1
edge n0 0 n1
edge n1 0 n0
root n0
fml A x
fml B x
step r0 0 x x prog
step r1 0 x x
)";

const char* nu_box_file = R"(
system mucalc
node n0 Nu "nu x. [a] x"
node n1 Mod "[a] nu x. [a] x"
edge n0 0 n1
edge n1 0 n0
root n0
)";

}  // namespace

TEST_CASE("a custom proof file parses, validates and decides") {
  io::proof_document doc = io::parse_proof_text(custom_loop);
  CHECK(doc.system == "custom");
  CHECK(doc.proof.node_count() == 2);
  CHECK(doc.node_names == std::vector<std::string>{"n0", "n1"});
  CHECK(validate_preproof(doc.sys, doc.proof).ok());
  REQUIRE(doc.structure.has_value());
  CHECK(decide_gtc(doc.proof, *doc.structure).holds);  // progress on the way out
}

TEST_CASE("a mucalc proof file reconstructs the rule instances") {
  io::proof_document doc = io::parse_proof_text(nu_box_file);
  CHECK(doc.proof.node_count() == 2);
  CHECK(validate_preproof(doc.sys, doc.proof).ok());
  REQUIRE(doc.structure.has_value());
  CHECK(decide_gtc(doc.proof, *doc.structure).holds);

  // the same shape with a least fixed point is no longer a proof
  std::string mu_file = nu_box_file;
  std::size_t pos;
  while ((pos = mu_file.find("Nu")) != std::string::npos) mu_file.replace(pos, 2, "Mu");
  while ((pos = mu_file.find("nu x")) != std::string::npos) mu_file.replace(pos, 4, "mu x");
  io::proof_document mu_doc = io::parse_proof_text(mu_file);
  CHECK(validate_preproof(mu_doc.sys, mu_doc.proof).ok());
  CHECK_FALSE(decide_gtc(mu_doc.proof, *mu_doc.structure).holds);
}

TEST_CASE("a ds proof file builds the abstraction") {
  io::proof_document doc =
      io::parse_proof_text("system ds\nstream prefix 4,2 period 3,7,6,5,9\n");
  CHECK(doc.proof.node_count() == 7);
  CHECK(validate_preproof(doc.sys, doc.proof).ok());
  CHECK(decide_gtc(doc.proof, *doc.structure).holds);
  REQUIRE(doc.stream.has_value());
  CHECK(doc.stream->prefix == std::vector<std::uint64_t>{4, 2});

  io::proof_document no_prefix = io::parse_proof_text("system ds\nstream period 3\n");
  CHECK(no_prefix.proof.node_count() == 1);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_AS(io::parse_proof_text(""), io::file_error);
  CHECK_THROWS_AS(io::parse_proof_text("node n0\n"), io::file_error);
  CHECK_THROWS_AS(io::parse_proof_text("system custom\nnonsense here\n"), io::file_error);
  CHECK_THROWS_AS(io::parse_proof_text("system mucalc\nnode n0 Nu \"p\"\nedge n0 1 n0\nroot n0\n"),
                  io::file_error);  // premise indices must start at 0
  try {
    io::parse_proof_text("system custom\njudgement A\n");
    FAIL("expected a file error");
  } catch (const io::file_error& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("malformed trace tables surface as validation or typing errors") {
  std::string text = custom_loop;
  text += "step r0 0 ghost x\n";  // ghost is not in fml(A)
  io::proof_document doc = io::parse_proof_text(text);
  CHECK_FALSE(validate_trace_structure(doc.proof, *doc.structure).ok());
}

TEST_CASE("refutation blocks parse into certificates") {
  std::string text = custom_loop;
  // around a non-progressing cycle the annotation must stay level
  text += "refutation-cycle n0:0 n1:0\n";
  text += "refutation-ann 0 x = w*1 + 2\n";
  text += "refutation-ann 1 x = w*1 + 2\n";
  io::proof_document doc = io::parse_proof_text(text);
  REQUIRE(doc.refutation.has_value());
  CHECK(doc.refutation->cycle.size() == 2);
  CHECK(to_string(doc.refutation->annotations[0].at(formula_token{"x"})) == "w*1 + 2");
  // the loop progresses, so this certificate must be rejected
  CHECK_FALSE(verify_refutation(doc.proof, *doc.structure, *doc.refutation));

  // strip the progress flag and the same certificate verifies
  std::string lax = text;
  std::size_t pos = lax.find("x x prog");
  lax.replace(pos, 8, "x x");
  io::proof_document lax_doc = io::parse_proof_text(lax);
  CHECK(verify_refutation(lax_doc.proof, *lax_doc.structure, *lax_doc.refutation));
  CHECK_FALSE(decide_gtc(lax_doc.proof, *lax_doc.structure).holds);
}
