#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chiploop/candidate.hpp"
#include "chiploop/evalharness.hpp"
#include "chiploop/jsonl.hpp"
#include "chiploop/llm.hpp"
#include "chiploop/prompt.hpp"

namespace chiploop {

struct TreeSearchConfig {
  std::size_t k = 3;           // samples per expansion
  std::size_t d = 3;           // maximum depth
  double target_pass = 1.0;    // early-stop threshold
  SamplingParams sampling = SamplingParams();
  std::size_t workers = 1;     // parallel evaluations per expansion

  void validate() const;
  nlohmann::json to_json() const;
  static TreeSearchConfig from_json(const nlohmann::json& j);
};

enum class TreeStopReason { target_reached, depth_exhausted, all_failed };
std::string_view to_string(TreeStopReason r);

struct SearchTrace {
  std::vector<CodeCandidate> nodes;
  std::string best_id;
  std::size_t llm_calls = 0;
  TreeStopReason stop_reason = TreeStopReason::depth_exhausted;

  const CodeCandidate& node(std::string_view id) const;
  const CodeCandidate& best() const { return node(best_id); }
};

/// One node per line, then a summary line.
void write_trace_jsonl(const SearchTrace& trace, JsonlWriter& out);

/// Score desc, then pass_count desc, sample_index asc, id asc.
std::vector<CodeCandidate> rank(std::vector<CodeCandidate> children);

struct Expansion {
  std::vector<CodeCandidate> ranked;          // evaluated children, best first
  std::map<std::string, std::string> replies;  // raw completion text by candidate id
  std::size_t llm_calls = 0;
  const CodeCandidate& best() const { return ranked.front(); }
};

// Greedy beam-width-1 search: sample k designs, evaluate and rank them, feed
// the best child's tool output back, repeat up to depth d. Returns the best
// candidate seen at any depth.
class TreeSearch {
 public:
  TreeSearch(Backend& backend, const Evaluator& evaluator, TreeSearchConfig cfg,
             PromptSettings prompts, ExtractionPolicy extraction, Language language,
             std::filesystem::path work_root);

  /// Samples, extracts and evaluates the children of `conversation`.
  Expansion expand(const PromptBundle& conversation, const CodeCandidate* parent,
                   std::size_t depth);

  SearchTrace run(std::string_view spec_text);

 private:
  Backend& backend_;
  const Evaluator& evaluator_;
  TreeSearchConfig cfg_;
  PromptSettings prompts_;
  ExtractionPolicy extraction_;
  Language language_;
  std::filesystem::path work_root_;
};

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace chiploop
