#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chiploop/candidate.hpp"
#include "chiploop/llm.hpp"
#include "chiploop/pool.hpp"
#include "chiploop/rng.hpp"
#include "chiploop/templates.hpp"

namespace chiploop {

struct ScoredExample {
  std::string source;
  double score = 0.0;
  std::string label;
};

inline constexpr std::size_t kFeedbackCapBytes = 16 * 1024;

// Shared inputs for every prompt builder.
struct PromptSettings {
  PromptTemplates templates = PromptTemplates::defaults();
  SamplingParams params = SamplingParams();
  std::string language = "verilog";  // fence tag and wording for stages without an explicit one
  std::string score_unit;            // e.g. "W"; empty for pass fractions
  std::size_t feedback_cap = kFeedbackCapBytes;
};

PromptBundle build_design_prompt(std::string_view spec_text, std::string_view target_language,
                                 const PromptSettings& settings);

/// Follow-up asking for a testbench for a design already in the conversation.
PromptBundle build_testbench_prompt(const PromptBundle& history, std::string_view design_reply,
                                    std::string_view spec_text, const PromptSettings& settings);

/// Prior conversation + the assistant reply + a user turn carrying the tool
/// output (capped) and a fix request. A fully passing report is rejected.
PromptBundle build_feedback_prompt(const PromptBundle& history, std::string_view assistant_reply,
                                   const EvaluationReport& report, const PromptSettings& settings);

PromptBundle build_scot_pseudocode_prompt(std::string_view goal,
                                          std::span<const ScoredExample> examples,
                                          const PromptSettings& settings);

PromptBundle build_scot_code_prompt(std::string_view pseudocode, std::string_view target_language,
                                    const PromptSettings& settings);

/// Keeps head and tail of `text` around an elision marker so the result fits
/// in `cap` bytes. Cuts never split a UTF-8 sequence.
std::string truncate_middle(std::string_view text, std::size_t cap);

/// Shortest round-trip decimal form ("3.1", "5.042", "1").
std::string format_score(double value);

/// One-line description of a report used in feedback prompts.
std::string status_summary(const EvaluationReport& report);

/// min(n, |pool|) distinct entries, uniformly without replacement, in sampler order.
std::vector<ScoredExample> select_examples(const PoolState& pool, std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// Code extraction

enum class ExtractionFallback { module_span, whole_text, fail };

struct ExtractionPolicy {
  ExtractionPolicy(std::string language_tag = "verilog",
                   ExtractionFallback fallback = ExtractionFallback::module_span);

  std::string language_tag;
  ExtractionFallback fallback;
};

ExtractionFallback extraction_fallback_from_string(std::string_view s);

/// Tagged fenced blocks, else untagged fenced blocks, else the fallback.
/// Throws NoCodeFound when nothing usable is found.
std::string extract_code(std::string_view completion_text, const ExtractionPolicy& policy);
std::string extract_code(const CompletionResult& completion, const ExtractionPolicy& policy);

}  // namespace chiploop
