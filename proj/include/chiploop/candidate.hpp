#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace chiploop {

enum class Language { verilog, c };
enum class Origin { seed, tree_search, pool_loop };
enum class EvalStatus { compile_error, runtime_exception, timeout, evaluated };

std::string_view to_string(Language lang);
std::string_view to_string(Origin origin);
std::string_view to_string(EvalStatus status);
Language language_from_string(std::string_view s);
EvalStatus eval_status_from_string(std::string_view s);

/// Source-file extension for a language, without the dot.
std::string_view source_extension(Language lang);

// Outcome of compile + run + score. Any non-evaluated status carries a score
// of exactly zero; use the factory to build failure reports.
struct EvaluationReport {
  EvalStatus status = EvalStatus::evaluated;
  std::string compile_output;
  std::string run_output;
  std::size_t pass_count = 0;
  std::size_t total_count = 0;
  double score = 0.0;
  std::int64_t wall_ms = 0;

  static EvaluationReport failure(EvalStatus status, std::string compile_output = {},
                                  std::string run_output = {});

  bool perfect() const { return status == EvalStatus::evaluated && total_count > 0 &&
                                pass_count == total_count; }

  nlohmann::ordered_json to_json() const;
};

struct CodeCandidate {
  std::string id;
  std::string source;
  Language language = Language::verilog;
  std::optional<std::string> parent_id;
  std::size_t depth = 0;
  Origin origin = Origin::seed;
  double gen_temperature = 0.0;
  std::string prompt_hash;
  std::size_t sample_index = 0;  // which of the k samples produced it
  std::optional<EvaluationReport> report;

  double score() const { return report ? report->score : 0.0; }
};

}  // namespace chiploop
