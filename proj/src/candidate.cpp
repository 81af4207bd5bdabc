#include "chiploop/candidate.hpp"

#include "chiploop/error.hpp"

namespace chiploop {

std::string_view to_string(Language lang) {
  return lang == Language::verilog ? "verilog" : "c";
}

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::seed: return "seed";
    case Origin::tree_search: return "tree_search";
    case Origin::pool_loop: return "pool_loop";
  }
  return "seed";
}

std::string_view to_string(EvalStatus status) {
  switch (status) {
    case EvalStatus::compile_error: return "compile_error";
    case EvalStatus::runtime_exception: return "runtime_exception";
    case EvalStatus::timeout: return "timeout";
    case EvalStatus::evaluated: return "evaluated";
  }
  return "evaluated";
}

Language language_from_string(std::string_view s) {
  if (s == "verilog" || s == "systemverilog") return Language::verilog;
  if (s == "c") return Language::c;
  throw Error(ErrorCode::invalid_argument, "unsupported language: " + std::string(s));
}

EvalStatus eval_status_from_string(std::string_view s) {
  for (auto st : {EvalStatus::compile_error, EvalStatus::runtime_exception, EvalStatus::timeout,
                  EvalStatus::evaluated}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::invalid_argument, "unknown status: " + std::string(s));
}

std::string_view source_extension(Language lang) {
  return lang == Language::verilog ? "v" : "c";
}

EvaluationReport EvaluationReport::failure(EvalStatus status, std::string compile_output,
                                           std::string run_output) {
  EvaluationReport r;
  r.status = status;
  r.compile_output = std::move(compile_output);
  r.run_output = std::move(run_output);
  r.score = 0.0;
  return r;
}

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["status"] = to_string(status);
  j["score"] = score;
  j["pass_count"] = pass_count;
  j["total_count"] = total_count;
  j["wall_ms"] = wall_ms;
  j["compile_output"] = compile_output;
  j["run_output"] = run_output;
  return j;
}

}  // namespace chiploop
