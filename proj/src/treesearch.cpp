#include "chiploop/treesearch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "chiploop/error.hpp"

namespace fs = std::filesystem;

namespace chiploop {

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

void TreeSearchConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  if (d < 1) throw Error(ErrorCode::invalid_argument, "d must be >= 1");
  if (!(target_pass > 0.0 && target_pass <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "target_pass must be in (0, 1]");
  }
}

nlohmann::json TreeSearchConfig::to_json() const {
  return {{"k", k},
          {"d", d},
          {"target_pass", target_pass},
          {"sampling", sampling.to_json()},
          {"workers", workers}};
}

TreeSearchConfig TreeSearchConfig::from_json(const nlohmann::json& j) {
  TreeSearchConfig c;
  c.k = j.value("k", c.k);
  c.d = j.value("d", c.d);
  c.target_pass = j.value("target_pass", c.target_pass);
  if (j.contains("sampling")) c.sampling = SamplingParams::from_json(j["sampling"]);
  c.workers = j.value("workers", c.workers);
  return c;
}

std::string_view to_string(TreeStopReason r) {
  switch (r) {
    case TreeStopReason::target_reached: return "target_reached";
    case TreeStopReason::depth_exhausted: return "depth_exhausted";
    case TreeStopReason::all_failed: return "all_failed";
  }
  return "depth_exhausted";
}

const CodeCandidate& SearchTrace::node(std::string_view id) const {
  const auto it = std::find_if(nodes.begin(), nodes.end(),
                               [&](const CodeCandidate& c) { return c.id == id; });
  if (it == nodes.end()) throw Error(ErrorCode::invalid_argument, "no node " + std::string(id));
  return *it;
}

void write_trace_jsonl(const SearchTrace& trace, JsonlWriter& out) {
  for (const auto& n : trace.nodes) {
    ordered_json rec;
    rec["type"] = "node";
    rec["id"] = n.id;
    rec["parent_id"] = n.parent_id ? ordered_json(*n.parent_id) : ordered_json(nullptr);
    rec["depth"] = n.depth;
    rec["prompt_hash"] = n.prompt_hash;
    rec["score"] = n.score();
    rec["status"] = n.report ? to_string(n.report->status) : "unevaluated";
    rec["pass_count"] = n.report ? n.report->pass_count : 0;
    rec["total_count"] = n.report ? n.report->total_count : 0;
    rec["sample_index"] = n.sample_index;
    out.write(rec);
  }
  ordered_json summary;
  summary["type"] = "summary";
  summary["best_id"] = trace.best_id;
  summary["best_score"] = trace.nodes.empty() ? 0.0 : trace.best().score();
  summary["llm_calls"] = trace.llm_calls;
  summary["stop_reason"] = to_string(trace.stop_reason);
  out.write(summary);
}

std::vector<CodeCandidate> rank(std::vector<CodeCandidate> children) {
  for (const auto& c : children) {
    if (!c.report) throw Error(ErrorCode::unevaluated_child, "child " + c.id + " has no report");
  }
  std::sort(children.begin(), children.end(), [](const CodeCandidate& a, const CodeCandidate& b) {
    if (a.report->score != b.report->score) return a.report->score > b.report->score;
    if (a.report->pass_count != b.report->pass_count) {
      return a.report->pass_count > b.report->pass_count;
    }
    if (a.sample_index != b.sample_index) return a.sample_index < b.sample_index;
    return a.id < b.id;
  });
  return children;
}

TreeSearch::TreeSearch(Backend& backend, const Evaluator& evaluator, TreeSearchConfig cfg,
                       PromptSettings prompts, ExtractionPolicy extraction, Language language,
                       fs::path work_root)
    : backend_(backend),
      evaluator_(evaluator),
      cfg_(std::move(cfg)),
      prompts_(std::move(prompts)),
      extraction_(std::move(extraction)),
      language_(language),
      work_root_(std::move(work_root)) {
  cfg_.validate();
  prompts_.params = cfg_.sampling;
  prompts_.language = std::string(to_string(language_));
}

Expansion TreeSearch::expand(const PromptBundle& conversation, const CodeCandidate* parent,
                             std::size_t depth) {
  std::vector<CompletionResult> completions;
  try {
    completions = sample_k(backend_, conversation, cfg_.k);
  } catch (const PartialBatchError& e) {
    completions = e.completed();
  }

  Expansion out;
  out.llm_calls = cfg_.k;
  std::vector<CodeCandidate> children;
  for (const auto& c : completions) {
    std::string code;
    try {
      code = extract_code(c, extraction_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_code_found) throw;
      continue;
    }
    CodeCandidate child;
    child.id = "d" + std::to_string(depth) + "-s" + std::to_string(c.candidate_index);
    child.source = std::move(code);
    child.language = language_;
    if (parent) child.parent_id = parent->id;
    child.depth = depth;
    child.origin = Origin::tree_search;
    child.gen_temperature = conversation.params().temperature();
    child.prompt_hash = conversation.hash();
    child.sample_index = c.candidate_index;
    out.replies[child.id] = c.text;
    children.push_back(std::move(child));
  }
  if (children.empty()) {
    throw Error(ErrorCode::all_extraction_failed,
                "no completion at depth " + std::to_string(depth) + " contained code");
  }

  parallel_for(children.size(), cfg_.workers, [&](std::size_t i) {
    children[i].report = evaluator_.evaluate(children[i], work_root_ / children[i].id);
  });
  out.ranked = rank(std::move(children));
  return out;
}

SearchTrace TreeSearch::run(std::string_view spec_text) {
  SearchTrace trace;
  PromptBundle conversation =
      build_design_prompt(spec_text, to_string(language_), prompts_);

  Expansion exp = expand(conversation, nullptr, 0);
  trace.llm_calls += exp.llm_calls;
  trace.nodes.insert(trace.nodes.end(), exp.ranked.begin(), exp.ranked.end());
  CodeCandidate current = exp.best();
  std::string current_reply = exp.replies.at(current.id);
  CodeCandidate global_best = current;

  for (std::size_t depth = 1; global_best.score() < cfg_.target_pass && depth < cfg_.d; ++depth) {
    PromptBundle feedback =
        build_feedback_prompt(conversation, current_reply, *current.report, prompts_);
    try {
      exp = expand(feedback, &current, depth);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::all_extraction_failed) throw;
      // The depth is spent; the next depth resamples from the same feedback.
      trace.llm_calls += cfg_.k;
      continue;
    }
    trace.llm_calls += exp.llm_calls;
    trace.nodes.insert(trace.nodes.end(), exp.ranked.begin(), exp.ranked.end());
    conversation = std::move(feedback);
    current = exp.best();
    current_reply = exp.replies.at(current.id);
    if (current.score() > global_best.score()) global_best = current;
  }

  trace.best_id = global_best.id;
  if (global_best.score() >= cfg_.target_pass) {
    trace.stop_reason = TreeStopReason::target_reached;
  } else if (global_best.score() == 0.0) {
    trace.stop_reason = TreeStopReason::all_failed;
  } else {
    trace.stop_reason = TreeStopReason::depth_exhausted;
  }
  return trace;
}

}  // namespace chiploop
