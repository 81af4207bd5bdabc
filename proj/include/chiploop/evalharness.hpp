#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chiploop/candidate.hpp"

namespace chiploop {

enum class ScoreMode { pass_fraction, external_command };

// How to compile, run and score a candidate with external tools. Commands are
// argv token lists; tokens may embed {src} {out} {workdir} {testbench}
// placeholders, which are replaced by absolute paths.
struct ToolAdapterSpec {
  std::vector<std::string> compile_cmd;
  std::vector<std::string> run_cmd;    // optional in external_command mode
  std::vector<std::string> score_cmd;  // required iff external_command
  ScoreMode score_mode = ScoreMode::pass_fraction;
  int compile_timeout_s = 60;
  int run_timeout_s = 120;
  int score_timeout_s = 120;
  std::string fatal_regex = "FATAL|Segmentation fault";
  std::optional<std::filesystem::path> testbench;

  /// Throws InvalidArgument on undefined placeholders or missing commands.
  void validate() const;

  nlohmann::json to_json() const;
  static ToolAdapterSpec from_json(const nlohmann::json& j);
};

/// Placeholders each command template may use.
const std::vector<std::string>& compile_placeholders();
const std::vector<std::string>& run_placeholders();
const std::vector<std::string>& score_placeholders();

enum class StageStatus { ok, failed, timed_out };

struct CompileOutcome {
  StageStatus status = StageStatus::ok;
  std::filesystem::path artifact;
  std::string output;
};

struct RunOutcome {
  EvalStatus status = EvalStatus::evaluated;  // evaluated, runtime_exception or timeout
  int exit_code = 0;
  std::string output;
};

struct PassFraction {
  std::size_t pass_count = 0;
  std::size_t total_count = 0;
  double fraction = 0.0;
};

/// Writes the source into {workdir}/src.<ext> and runs compile_cmd.
CompileOutcome compile(const CodeCandidate& candidate, const ToolAdapterSpec& adapter,
                       const std::filesystem::path& workdir);

RunOutcome run_sim(const std::filesystem::path& artifact, const ToolAdapterSpec& adapter,
                   const std::filesystem::path& workdir);

/// Counts `TESTCASE <n>: PASS|FAIL` lines. Throws NoTestcases when none match.
PassFraction parse_pass_fraction(std::string_view sim_output);

/// Parses the last whitespace-delimited token of `stdout_text` as a decimal.
double parse_external_score(std::string_view stdout_text);

/// compile -> run -> score. Every failed stage yields a zero-score report.
EvaluationReport score_candidate(const CodeCandidate& candidate, const ToolAdapterSpec& adapter,
                                 const std::filesystem::path& workdir);

// Evaluation strategy used by the search loops. Implementations must be
// callable concurrently with distinct workdirs.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvaluationReport evaluate(const CodeCandidate& candidate,
                                    const std::filesystem::path& workdir) const = 0;
};

class ToolEvaluator : public Evaluator {
 public:
  explicit ToolEvaluator(ToolAdapterSpec adapter);
  EvaluationReport evaluate(const CodeCandidate& candidate,
                            const std::filesystem::path& workdir) const override;
  const ToolAdapterSpec& adapter() const { return adapter_; }

 private:
  ToolAdapterSpec adapter_;
};

}  // namespace chiploop
