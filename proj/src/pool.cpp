#include "chiploop/pool.hpp"

#include <algorithm>

#include "chiploop/error.hpp"
#include "chiploop/levenshtein.hpp"

namespace chiploop {

std::string strip_comments(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  enum class State { code, line_comment, block_comment, string_lit } st = State::code;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    const char next = i + 1 < src.size() ? src[i + 1] : '\0';
    switch (st) {
      case State::code:
        if (c == '/' && next == '/') {
          st = State::line_comment;
          ++i;
        } else if (c == '/' && next == '*') {
          st = State::block_comment;
          ++i;
        } else {
          if (c == '"') st = State::string_lit;
          out.push_back(c);
        }
        break;
      case State::line_comment:
        if (c == '\n') {
          out.push_back(c);
          st = State::code;
        }
        break;
      case State::block_comment:
        if (c == '*' && next == '/') {
          st = State::code;
          ++i;
        }
        break;
      case State::string_lit:
        out.push_back(c);
        if (c == '\\' && next != '\0') {
          out.push_back(next);
          ++i;
        } else if (c == '"' || c == '\n') {
          st = State::code;
        }
        break;
    }
  }
  return out;
}

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::invalid_argument, m); };
  if (n_examples < 1) fail("n_examples must be >= 1");
  if (pool_capacity < n_examples) fail("pool_capacity must be >= n_examples");
  if (!(diversity_min >= 0.0 && diversity_min <= 1.0)) fail("diversity_min must be in [0, 1]");
  if (!(temp_min >= 0.0 && temp_min < temp_max && temp_max <= 2.0)) {
    fail("need 0 <= temp_min < temp_max <= 2");
  }
  if (!(temp_init >= temp_min && temp_init <= temp_max)) fail("temp_init outside [temp_min, temp_max]");
  if (!(cool_factor > 0.0 && cool_factor < 1.0)) fail("cool_factor must be in (0, 1)");
  if (!(heat_factor > 1.0)) fail("heat_factor must be > 1");
  if (stop_max_snippets < 1) fail("stop_max_snippets must be >= 1");
  if (stop_wall_seconds < 1) fail("stop_wall_seconds must be >= 1");
}

nlohmann::json OptimizerConfig::to_json() const {
  return {{"n_examples", n_examples},         {"pool_capacity", pool_capacity},
          {"diversity_min", diversity_min},   {"temp_min", temp_min},
          {"temp_max", temp_max},             {"temp_init", temp_init},
          {"cool_factor", cool_factor},       {"heat_factor", heat_factor},
          {"stop_max_snippets", stop_max_snippets},
          {"stop_wall_seconds", stop_wall_seconds},
          {"rng_seed", rng_seed}};
}

OptimizerConfig OptimizerConfig::from_json(const nlohmann::json& j) {
  OptimizerConfig c;
  c.n_examples = j.value("n_examples", c.n_examples);
  c.pool_capacity = j.value("pool_capacity", c.pool_capacity);
  c.diversity_min = j.value("diversity_min", c.diversity_min);
  c.temp_min = j.value("temp_min", c.temp_min);
  c.temp_max = j.value("temp_max", c.temp_max);
  c.temp_init = j.value("temp_init", c.temp_init);
  c.cool_factor = j.value("cool_factor", c.cool_factor);
  c.heat_factor = j.value("heat_factor", c.heat_factor);
  c.stop_max_snippets = j.value("stop_max_snippets", c.stop_max_snippets);
  c.stop_wall_seconds = j.value("stop_wall_seconds", c.stop_wall_seconds);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  return c;
}

std::string_view to_string(PoolDecision d) {
  switch (d) {
    case PoolDecision::accepted: return "accepted";
    case PoolDecision::rejected_score: return "rejected_score";
    case PoolDecision::rejected_diversity: return "rejected_diversity";
  }
  return "rejected_score";
}

std::string_view to_string(OptStopReason r) {
  switch (r) {
    case OptStopReason::max_snippets: return "max_snippets";
    case OptStopReason::wall_time: return "wall_time";
    case OptStopReason::user_stop: return "user_stop";
  }
  return "user_stop";
}

std::optional<double> min_pool_distance(const PoolState& state, std::string_view stripped) {
  std::optional<double> best;
  for (const auto& e : state.entries) {
    const double d = norm_distance(stripped, e.stripped);
    if (!best || d < *best) best = d;
  }
  return best;
}

namespace {

void track_best(PoolState& state, const CodeCandidate& candidate) {
  if (!state.best || candidate.score() > state.best->score()) state.best = candidate;
}

// Index of the lowest-scoring entry; the oldest wins ties.
std::size_t worst_index(const PoolState& state) {
  std::size_t worst = 0;
  for (std::size_t i = 1; i < state.entries.size(); ++i) {
    if (state.entries[i].score < state.entries[worst].score) worst = i;
  }
  return worst;
}

bool insert_with_capacity(PoolState& state, PoolEntry entry, const OptimizerConfig& cfg) {
  if (state.entries.size() < cfg.pool_capacity) {
    state.entries.push_back(std::move(entry));
    return true;
  }
  const std::size_t worst = worst_index(state);
  if (!(entry.score > state.entries[worst].score)) return false;
  state.entries.erase(state.entries.begin() + static_cast<std::ptrdiff_t>(worst));
  state.entries.push_back(std::move(entry));
  return true;
}

}  // namespace

PoolUpdate update_pool(PoolState& state, const CodeCandidate& candidate,
                       const OptimizerConfig& cfg) {
  if (!candidate.report) {
    throw Error(ErrorCode::invalid_argument, "candidate " + candidate.id + " has no report");
  }
  track_best(state, candidate);

  PoolUpdate update;
  std::string stripped = strip_comments(candidate.source);
  update.min_distance = min_pool_distance(state, stripped);
  const double score = candidate.score();
  if (score == 0.0) {
    update.decision = PoolDecision::rejected_score;
    return update;
  }
  if (update.min_distance && *update.min_distance < cfg.diversity_min) {
    update.decision = PoolDecision::rejected_diversity;
    return update;
  }
  const bool accepted =
      insert_with_capacity(state, PoolEntry{candidate, score, std::move(stripped), false}, cfg);
  update.decision = accepted ? PoolDecision::accepted : PoolDecision::rejected_score;
  return update;
}

void insert_seed(PoolState& state, const CodeCandidate& seed, const OptimizerConfig& cfg) {
  track_best(state, seed);
  insert_with_capacity(state, PoolEntry{seed, seed.score(), strip_comments(seed.source), true},
                       cfg);
}

double adapt_temperature(PoolState& state, PoolDecision decision, bool new_best,
                         const OptimizerConfig& cfg) {
  double t = state.current_temp;
  switch (decision) {
    case PoolDecision::accepted:
      if (new_best) t *= cfg.cool_factor;
      break;
    case PoolDecision::rejected_score:
    case PoolDecision::rejected_diversity:
      t *= cfg.heat_factor;
      break;
  }
  state.current_temp = std::clamp(t, cfg.temp_min, cfg.temp_max);
  return state.current_temp;
}

std::optional<OptStopReason> check_stop(const PoolState& state, const OptimizerConfig& cfg,
                                        bool stop_flag, std::int64_t now_ms) {
  if (stop_flag) return OptStopReason::user_stop;
  if (state.snippets_generated >= cfg.stop_max_snippets) return OptStopReason::max_snippets;
  if (now_ms - state.started_at_ms >= cfg.stop_wall_seconds * 1000) return OptStopReason::wall_time;
  return std::nullopt;
}

}  // namespace chiploop
