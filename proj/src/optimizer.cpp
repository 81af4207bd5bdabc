#include "chiploop/optimizer.hpp"

#include <cstdio>

#include "chiploop/error.hpp"
#include "chiploop/levenshtein.hpp"

namespace fs = std::filesystem;

namespace chiploop {

namespace {

std::string padded_id(std::string_view prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, n);
  return std::string(prefix) + buf;
}

bool aborts_run(ErrorCode code) {
  return code == ErrorCode::tool_missing || code == ErrorCode::mock_exhausted;
}

ordered_json nullable(const std::optional<double>& d) {
  return d ? ordered_json(*d) : ordered_json(nullptr);
}

}  // namespace

PoolOptimizer::PoolOptimizer(Backend& backend, const Evaluator& evaluator, OptimizerConfig cfg,
                             PromptSettings prompts, ExtractionPolicy extraction,
                             Language language, fs::path work_root, Clock& clock)
    : backend_(backend),
      evaluator_(evaluator),
      cfg_(cfg),
      prompts_(std::move(prompts)),
      extraction_(std::move(extraction)),
      language_(language),
      work_root_(std::move(work_root)),
      clock_(clock),
      rng_(cfg.rng_seed) {
  cfg_.validate();
  prompts_.language = std::string(to_string(language_));
}

void PoolOptimizer::emit(const ordered_json& record) {
  if (log_) log_->write(record);
  if (observer_) observer_(record, state_);
}

CodeCandidate PoolOptimizer::evaluate_seed(std::size_t index, const std::string& source) {
  CodeCandidate seed;
  seed.id = padded_id("seed-", index, 3);
  seed.source = source;
  seed.language = language_;
  seed.origin = Origin::seed;
  seed.gen_temperature = 0.0;
  seed.report = evaluator_.evaluate(seed, work_root_ / seed.id);
  return seed;
}

OptimizationResult PoolOptimizer::run(std::span<const std::string> seeds, std::string_view goal) {
  if (seeds.empty()) throw Error(ErrorCode::invalid_argument, "at least one seed is required");
  state_ = PoolState{};
  state_.current_temp = cfg_.temp_init;
  state_.started_at_ms = clock_.now_ms();
  rng_ = Rng(cfg_.rng_seed);

  auto write_stop = [&](std::string_view reason, const std::string* error) {
    ordered_json rec;
    rec["type"] = "stop";
    rec["stop_reason"] = reason;
    rec["iterations"] = state_.snippets_generated;
    rec["best_id"] = state_.best ? ordered_json(state_.best->id) : ordered_json(nullptr);
    rec["best_score"] = state_.best_score();
    if (error) rec["error"] = *error;
    emit(rec);
  };

  try {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const CodeCandidate seed = evaluate_seed(i, seeds[i]);
      insert_seed(state_, seed, cfg_);
      const bool in_pool = std::any_of(state_.entries.begin(), state_.entries.end(),
                                       [&](const PoolEntry& e) { return e.candidate.id == seed.id; });
      ordered_json rec;
      rec["type"] = "seed";
      rec["candidate_id"] = seed.id;
      rec["status"] = to_string(seed.report->status);
      rec["score"] = seed.score();
      rec["in_pool"] = in_pool;
      emit(rec);
    }
  } catch (const Error& e) {
    if (aborts_run(e.code())) {
      const std::string msg = e.what();
      write_stop("aborted", &msg);
    }
    throw;
  }

  const SamplingParams base_params = prompts_.params;
  for (std::size_t iter = 1;; ++iter) {
    const double temp_before = state_.current_temp;
    const double best_before = state_.best_score();
    PromptSettings settings = prompts_;
    settings.params = base_params.with_temperature(temp_before);

    ordered_json rec;
    rec["type"] = "iteration";
    rec["iter"] = iter;
    rec["prompt_hash_pseudocode"] = nullptr;
    rec["prompt_hash_code"] = nullptr;
    rec["candidate_id"] = nullptr;
    rec["status"] = nullptr;
    rec["score"] = 0.0;

    std::optional<CodeCandidate> candidate;
    std::optional<std::string> error;
    std::string status;
    try {
      const auto examples = select_examples(state_, cfg_.n_examples, rng_);
      const PromptBundle pseudo_prompt = build_scot_pseudocode_prompt(goal, examples, settings);
      rec["prompt_hash_pseudocode"] = pseudo_prompt.hash();
      const CompletionResult pseudo = backend_.complete(pseudo_prompt);
      const PromptBundle code_prompt =
          build_scot_code_prompt(pseudo.text, to_string(language_), settings);
      rec["prompt_hash_code"] = code_prompt.hash();
      const CompletionResult code = backend_.complete(code_prompt);
      status = "no_code";
      CodeCandidate c;
      c.id = padded_id("it-", iter, 6);
      c.source = extract_code(code, extraction_);
      c.language = language_;
      c.origin = Origin::pool_loop;
      c.gen_temperature = temp_before;
      c.prompt_hash = code_prompt.hash();
      rec["candidate_id"] = c.id;
      status = "scorer_error";
      c.report = evaluator_.evaluate(c, work_root_ / c.id);
      status = std::string(to_string(c.report->status));
      candidate = std::move(c);
    } catch (const Error& e) {
      if (aborts_run(e.code())) {
        ++state_.snippets_generated;
        const std::string msg = e.what();
        write_stop("aborted", &msg);
        throw;
      }
      if (status.empty()) status = "llm_error";
      error = std::string(to_string(e.code())) + ": " + e.what();
    }
    ++state_.snippets_generated;

    PoolUpdate update;
    if (candidate) {
      update = update_pool(state_, *candidate, cfg_);
      rec["score"] = candidate->score();
    } else {
      update.decision = PoolDecision::rejected_score;
    }
    rec["status"] = status;
    rec["decision"] = to_string(update.decision);

    const std::int64_t now = clock_.now_ms();
    const bool user_stop = stop_flag_ && stop_flag_->load();
    const auto stop = check_stop(state_, cfg_, user_stop, now);
    double temp_after = temp_before;
    if (!stop) {
      const bool new_best = candidate && candidate->score() > best_before;
      temp_after = adapt_temperature(state_, update.decision, new_best, cfg_);
    }
    rec["temp_before"] = temp_before;
    rec["temp_after"] = temp_after;
    rec["min_distance"] = nullable(update.min_distance);
    rec["elapsed_ms"] = now - state_.started_at_ms;
    if (error) rec["error"] = *error;
    emit(rec);

    if (stop) {
      write_stop(to_string(*stop), nullptr);
      OptimizationResult result;
      result.best = *state_.best;
      result.stop_reason = *stop;
      result.iterations = state_.snippets_generated;
      return result;
    }
  }
}

}  // namespace chiploop
