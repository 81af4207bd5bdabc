#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chiploop/candidate.hpp"

namespace chiploop {

struct OptimizerConfig {
  std::size_t n_examples = 3;
  std::size_t pool_capacity = 16;
  double diversity_min = 0.1;  // normalized-distance floor
  double temp_min = 0.2;
  double temp_max = 1.5;
  double temp_init = 0.8;
  double cool_factor = 0.9;   // applied on a new best
  double heat_factor = 1.15;  // applied on any rejection
  std::size_t stop_max_snippets = 100;
  std::int64_t stop_wall_seconds = 24 * 3600;
  std::uint64_t rng_seed = 0;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;

  nlohmann::json to_json() const;
  static OptimizerConfig from_json(const nlohmann::json& j);
};

struct PoolEntry {
  CodeCandidate candidate;
  double score = 0.0;
  std::string stripped;  // comment-free source used for distances
  bool seed = false;
};

struct PoolState {
  std::vector<PoolEntry> entries;
  double current_temp = 0.8;
  std::size_t snippets_generated = 0;
  std::optional<CodeCandidate> best;  // best ever seen, member or not
  std::int64_t started_at_ms = 0;

  double best_score() const { return best ? best->score() : 0.0; }
};

enum class PoolDecision { accepted, rejected_score, rejected_diversity };
enum class OptStopReason { max_snippets, wall_time, user_stop };

std::string_view to_string(PoolDecision d);
std::string_view to_string(OptStopReason r);

struct PoolUpdate {
  PoolDecision decision = PoolDecision::rejected_score;
  std::optional<double> min_distance;  // to the closest entry; empty for an empty pool
};

/// Minimum normalized distance from `stripped` to any entry.
std::optional<double> min_pool_distance(const PoolState& state, std::string_view stripped);

// Accept/discard rule, applied in order:
//   1. score == 0                              -> rejected_score
//   2. min distance to any entry < floor       -> rejected_diversity
//   3. pool under capacity                     -> accepted
//   4. at capacity: accepted iff score beats the worst entry, which is evicted
// The best-ever tracker is updated regardless of the decision.
PoolUpdate update_pool(PoolState& state, const CodeCandidate& candidate,
                       const OptimizerConfig& cfg);

/// Seeds are scored but skip the diversity gate; capacity still applies.
void insert_seed(PoolState& state, const CodeCandidate& seed, const OptimizerConfig& cfg);

// Multiplicative schedule: cool on a new best, heat on any rejection, hold
// otherwise; always clamped to [temp_min, temp_max].
double adapt_temperature(PoolState& state, PoolDecision decision, bool new_best,
                         const OptimizerConfig& cfg);

/// Priority: user_stop > max_snippets > wall_time.
std::optional<OptStopReason> check_stop(const PoolState& state, const OptimizerConfig& cfg,
                                        bool stop_flag, std::int64_t now_ms);

}  // namespace chiploop
