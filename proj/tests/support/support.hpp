#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <random>

#include "chiploop/evalharness.hpp"
#include "chiploop/llm.hpp"

namespace chiploop::testkit {

std::filesystem::path fakesim_path();
std::filesystem::path cli_path();
std::filesystem::path source_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// chiploop-fakesim compile + run, pass-fraction scoring.
ToolAdapterSpec fake_pass_adapter(int run_timeout_s = 10);
/// chiploop-fakesim compile + score (nop count), external scoring.
ToolAdapterSpec fake_nop_adapter();

// Scores in-process from fakesim directives: SYNTAX_ERROR is a compile
// error, "@crash" a runtime exception, "@pass P/T" a pass fraction, and
// otherwise the number of "nop" tokens. Thread safe.
class DirectiveEvaluator : public Evaluator {
 public:
  EvaluationReport evaluate(const CodeCandidate& candidate,
                            const std::filesystem::path& workdir) const override;
};

/// Sequence-mode fixture document from plain texts.
nlohmann::json sequence_fixture(const std::vector<std::string>& texts);
/// Verilog reply inside a fence, carrying a directive comment.
std::string verilog_reply(std::string_view directive, std::string_view body = "assign y = a;");

// Oracles, written independently of the library code they check.
std::size_t naive_levenshtein(std::string_view a, std::string_view b);
std::size_t regex_nop_count(const std::string& source);

struct ExecResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};
/// Runs the chiploop binary with `args`, capturing both streams.
ExecResult run_cli(const std::vector<std::string>& args);

std::string slurp(const std::filesystem::path& p);
void spit(const std::filesystem::path& p, std::string_view text);

}  // namespace chiploop::testkit

namespace chiploop::testkit {

struct GrammarFixture {
  std::string name;
  std::string text;
  bool expect_no_testcases = false;
  std::size_t pass = 0;
  std::size_t total = 0;
};

/// The three pass-fraction grammar fixtures shared by unit and acceptance tests.
const std::vector<GrammarFixture>& grammar_fixtures();

}  // namespace chiploop::testkit

namespace chiploop::testkit {

struct TreeScenarioResult {
  bool completed = false;  // false when the run ended in a propagated error
  std::string violation;   // empty when every property held
  std::size_t k = 0, d = 0, llm_calls = 0;
};

// Builds a random mock scenario from `seed` (k, d, target and a mix of
// passing, failing, crashing, prose and refused replies), runs the tree
// search and checks budget, global-best, stop-reason and lineage properties.
TreeScenarioResult check_tree_scenario(std::uint64_t seed);

}  // namespace chiploop::testkit

namespace chiploop::testkit {

// Scripted optimizer run: seeds plus one (pseudocode, code) reply pair per
// iteration. Code replies hold C programs whose "nop" count trends upward;
// about one in ten carries SYNTAX_ERROR.
struct NopScenario {
  std::vector<std::string> seeds;
  std::vector<std::string> snippets;  // code inside each code reply's fence
  nlohmann::json fixture;
};
NopScenario nop_scenario(std::size_t iterations, std::uint64_t seed);

/// A C program with `nops` nop statements and seeded filler.
std::string nop_program(std::size_t nops, std::mt19937_64& gen);

}  // namespace chiploop::testkit
