#include "chiploop/prompt.hpp"

#include <array>
#include <charconv>
#include <numeric>

#include "chiploop/error.hpp"

namespace chiploop {

namespace {

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string render(const PromptSettings& s, std::string_view name, TemplateValues values) {
  return render_template(s.templates.get(name), values);
}

bool is_utf8_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

}  // namespace

std::string format_score(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf.data(), ptr);
}

std::string truncate_middle(std::string_view text, std::size_t cap) {
  if (text.size() <= cap) return std::string(text);
  // Marker length is bounded using the digit count of the full size.
  const std::string probe = "\n... [" + std::to_string(text.size()) + " bytes elided] ...\n";
  if (cap <= probe.size()) return std::string(text.substr(0, cap));
  const std::size_t budget = cap - probe.size();
  std::size_t head = budget / 2;
  std::size_t tail_start = text.size() - (budget - head);
  while (head > 0 && is_utf8_continuation(text[head])) --head;
  while (tail_start < text.size() && is_utf8_continuation(text[tail_start])) ++tail_start;
  const std::size_t elided = tail_start - head;
  std::string out;
  out.reserve(cap);
  out.append(text.substr(0, head));
  out += "\n... [" + std::to_string(elided) + " bytes elided] ...\n";
  out.append(text.substr(tail_start));
  return out;
}

std::string status_summary(const EvaluationReport& r) {
  switch (r.status) {
    case EvalStatus::compile_error:
      return "compile error (the design did not compile)";
    case EvalStatus::runtime_exception:
      return "runtime exception (simulation failed or aborted)";
    case EvalStatus::timeout:
      return "timeout (compilation or simulation did not finish in time)";
    case EvalStatus::evaluated:
      break;
  }
  if (r.total_count > 0) {
    return std::to_string(r.pass_count) + " of " + std::to_string(r.total_count) +
           " test cases passed";
  }
  return "score " + format_score(r.score);
}

PromptBundle build_design_prompt(std::string_view spec_text, std::string_view target_language,
                                 const PromptSettings& s) {
  if (is_blank(spec_text)) throw Error(ErrorCode::empty_spec, "design specification is empty");
  const std::string lang(target_language);
  std::vector<Message> msgs{
      {Role::system, render(s, "design_system", {{"language", lang}})},
      {Role::user, render(s, "design_user", {{"spec", std::string(spec_text)}, {"language", lang}})},
  };
  return PromptBundle(Stage::design, std::move(msgs), s.params);
}

PromptBundle build_testbench_prompt(const PromptBundle& history, std::string_view design_reply,
                                    std::string_view spec_text, const PromptSettings& s) {
  auto msgs = history.messages();
  msgs.push_back({Role::assistant, std::string(design_reply)});
  msgs.push_back({Role::user, render(s, "testbench_user",
                                     {{"spec", std::string(spec_text)}, {"language", s.language}})});
  return PromptBundle(Stage::testbench, std::move(msgs), s.params);
}

PromptBundle build_feedback_prompt(const PromptBundle& history, std::string_view assistant_reply,
                                   const EvaluationReport& report, const PromptSettings& s) {
  if (report.perfect()) {
    throw Error(ErrorCode::invalid_argument, "feedback requested for a fully passing design");
  }
  std::string tool_output = report.compile_output;
  if (!report.run_output.empty()) {
    if (!tool_output.empty() && tool_output.back() != '\n') tool_output += '\n';
    tool_output += report.run_output;
  }
  auto msgs = history.messages();
  msgs.push_back({Role::assistant, std::string(assistant_reply)});
  msgs.push_back({Role::user, render(s, "feedback_user",
                                     {{"tool_output", truncate_middle(tool_output, s.feedback_cap)},
                                      {"status_summary", status_summary(report)},
                                      {"language", s.language}})});
  return PromptBundle(Stage::feedback, std::move(msgs), s.params);
}

PromptBundle build_scot_pseudocode_prompt(std::string_view goal,
                                          std::span<const ScoredExample> examples,
                                          const PromptSettings& s) {
  std::string block;
  if (!examples.empty()) {
    block = "\nExamples from the candidate pool (a higher score is better):\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto& ex = examples[i];
      if (ex.source.empty()) throw Error(ErrorCode::invalid_argument, "example source is empty");
      std::string score = format_score(ex.score);
      if (!s.score_unit.empty()) score += " " + s.score_unit;
      block += "\n";
      block += render(s, "scot_example",
                      {{"index", std::to_string(i + 1)},
                       {"label", ex.label},
                       {"score", score},
                       {"source", ex.source},
                       {"language", s.language}});
      block += "\n";
    }
  }
  std::vector<Message> msgs{
      {Role::system, render(s, "scot_pseudocode_system", {{"language", s.language}})},
      {Role::user, render(s, "scot_pseudocode_user",
                          {{"goal", std::string(goal)},
                           {"examples_block", block},
                           {"language", s.language}})},
  };
  return PromptBundle(Stage::scot_pseudocode, std::move(msgs), s.params);
}

PromptBundle build_scot_code_prompt(std::string_view pseudocode, std::string_view target_language,
                                    const PromptSettings& s) {
  if (is_blank(pseudocode)) throw Error(ErrorCode::empty_pseudocode, "pseudocode is empty");
  const std::string lang(target_language);
  std::vector<Message> msgs{
      {Role::system, render(s, "scot_code_system", {{"language", lang}})},
      {Role::user, render(s, "scot_code_user",
                          {{"pseudocode", std::string(pseudocode)},
                           {"caution_sentence", s.templates.get("caution_sentence")},
                           {"language", lang}})},
  };
  return PromptBundle(Stage::scot_code, std::move(msgs), s.params);
}

std::vector<ScoredExample> select_examples(const PoolState& pool, std::size_t n, Rng& rng) {
  if (pool.entries.empty()) throw Error(ErrorCode::empty_pool, "candidate pool is empty");
  std::vector<std::size_t> idx(pool.entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t take = std::min(n, idx.size());
  std::vector<ScoredExample> out;
  out.reserve(take);
  // Partial Fisher-Yates: position i receives a uniform pick from [i, size).
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
    const auto& e = pool.entries[idx[i]];
    out.push_back({e.candidate.source, e.score, e.candidate.id});
  }
  return out;
}

}  // namespace chiploop
