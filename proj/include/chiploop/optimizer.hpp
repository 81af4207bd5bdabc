#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "chiploop/clock.hpp"
#include "chiploop/evalharness.hpp"
#include "chiploop/jsonl.hpp"
#include "chiploop/llm.hpp"
#include "chiploop/pool.hpp"
#include "chiploop/prompt.hpp"
#include "chiploop/rng.hpp"

namespace chiploop {

struct OptimizationResult {
  CodeCandidate best;
  OptStopReason stop_reason = OptStopReason::max_snippets;
  std::size_t iterations = 0;
};

// The scored candidate-pool loop: pick n examples, two-stage pseudocode/code
// prompting, score, accept or discard, check stop conditions, adapt the
// sampling temperature, repeat.
//
// Per-iteration LLM and scoring errors are logged and counted as generated
// snippets. ToolMissing and MockExhausted abort the run after a final
// "aborted" stop record; state() still holds the best-so-far.
class PoolOptimizer {
 public:
  using Observer = std::function<void(const ordered_json& record, const PoolState& state)>;

  PoolOptimizer(Backend& backend, const Evaluator& evaluator, OptimizerConfig cfg,
                PromptSettings prompts, ExtractionPolicy extraction, Language language,
                std::filesystem::path work_root, Clock& clock);

  void set_log(JsonlWriter* log) { log_ = log; }
  void set_stop_flag(const std::atomic<bool>* flag) { stop_flag_ = flag; }
  /// Called after every seed and iteration record is produced.
  void set_observer(Observer obs) { observer_ = std::move(obs); }

  OptimizationResult run(std::span<const std::string> seeds, std::string_view goal);

  const PoolState& state() const { return state_; }

 private:
  void emit(const ordered_json& record);
  CodeCandidate evaluate_seed(std::size_t index, const std::string& source);

  Backend& backend_;
  const Evaluator& evaluator_;
  OptimizerConfig cfg_;
  PromptSettings prompts_;
  ExtractionPolicy extraction_;
  Language language_;
  std::filesystem::path work_root_;
  Clock& clock_;
  JsonlWriter* log_ = nullptr;
  const std::atomic<bool>* stop_flag_ = nullptr;
  Observer observer_;
  PoolState state_;
  Rng rng_;
};

}  // namespace chiploop
