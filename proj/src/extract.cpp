#include <algorithm>
#include <cctype>

#include "chiploop/error.hpp"
#include "chiploop/prompt.hpp"

namespace chiploop {

namespace {

struct FencedBlock {
  std::string tag;
  std::string body;
};

std::string_view trim_left(std::string_view s) {
  const auto p = s.find_first_not_of(" \t");
  return p == std::string_view::npos ? std::string_view{} : s.substr(p);
}

std::string_view trim(std::string_view s) {
  s = trim_left(s);
  const auto p = s.find_last_not_of(" \t\r");
  return p == std::string_view::npos ? std::string_view{} : s.substr(0, p + 1);
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<FencedBlock> fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  std::optional<FencedBlock> open;
  bool first_line = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    const auto stripped = trim_left(line);
    if (!open) {
      if (stripped.starts_with("```")) {
        const auto info = trim(stripped.substr(3));
        const auto word_end = info.find_first_of(" \t{");
        open = FencedBlock{lowercase(info.substr(0, word_end)), {}};
        first_line = true;
      }
      continue;
    }
    if (stripped.starts_with("```") && trim(stripped.substr(3)).empty()) {
      blocks.push_back(std::move(*open));
      open.reset();
      continue;
    }
    if (!first_line) open->body += '\n';
    std::string_view content = line;
    if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
    open->body += content;
    first_line = false;
  }
  // An unterminated fence (e.g. a length-truncated reply) runs to the end.
  if (open) blocks.push_back(std::move(*open));
  return blocks;
}

std::string join_blocks(const std::vector<FencedBlock>& blocks, auto&& keep) {
  std::string out;
  bool first = true;
  for (const auto& b : blocks) {
    if (!keep(b)) continue;
    if (!first) out += '\n';
    out += b.body;
    first = false;
  }
  return out;
}

std::string remove_fence_markers(std::string s) {
  for (auto p = s.find("```"); p != std::string::npos; p = s.find("```", p)) s.erase(p, 3);
  return s;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

std::string module_span(std::string_view text, std::string_view tag) {
  if (tag == "c" || tag == "cpp" || tag == "c++") {
    const auto inc = text.find("#include");
    const auto main = text.find("int main");
    const auto start = std::min(inc, main);
    return start == std::string_view::npos ? std::string{} : std::string(text.substr(start));
  }
  std::size_t start = std::string_view::npos;
  for (auto p = text.find("module"); p != std::string_view::npos; p = text.find("module", p + 1)) {
    const bool left_ok = p == 0 || !is_ident_char(text[p - 1]);
    const bool right_ok = p + 6 >= text.size() || !is_ident_char(text[p + 6]);
    if (left_ok && right_ok) {
      start = p;
      break;
    }
  }
  const auto end = text.rfind("endmodule");
  if (start == std::string_view::npos || end == std::string_view::npos || end < start) return {};
  return std::string(text.substr(start, end + 9 - start));
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

ExtractionPolicy::ExtractionPolicy(std::string tag, ExtractionFallback fb)
    : language_tag(std::move(tag)), fallback(fb) {
  if (language_tag.empty()) throw Error(ErrorCode::invalid_argument, "language_tag is empty");
  if (lowercase(language_tag) != language_tag) {
    throw Error(ErrorCode::invalid_argument, "language_tag must be lowercase");
  }
}

ExtractionFallback extraction_fallback_from_string(std::string_view s) {
  if (s == "module_span") return ExtractionFallback::module_span;
  if (s == "whole_text") return ExtractionFallback::whole_text;
  if (s == "fail") return ExtractionFallback::fail;
  throw Error(ErrorCode::invalid_argument, "unknown extraction fallback: " + std::string(s));
}

std::string extract_code(std::string_view text, const ExtractionPolicy& policy) {
  const auto blocks = fenced_blocks(text);
  if (!blocks.empty()) {
    auto tagged = remove_fence_markers(
        join_blocks(blocks, [&](const FencedBlock& b) { return b.tag == policy.language_tag; }));
    if (!is_blank(tagged)) return tagged;
    auto untagged = remove_fence_markers(
        join_blocks(blocks, [](const FencedBlock& b) { return b.tag.empty(); }));
    if (!is_blank(untagged)) return untagged;
  }
  std::string fallback;
  switch (policy.fallback) {
    case ExtractionFallback::module_span:
      fallback = remove_fence_markers(module_span(text, policy.language_tag));
      break;
    case ExtractionFallback::whole_text:
      fallback = remove_fence_markers(std::string(text));
      break;
    case ExtractionFallback::fail:
      break;
  }
  if (is_blank(fallback)) {
    throw Error(ErrorCode::no_code_found, "no " + policy.language_tag + " code in completion");
  }
  return fallback;
}

std::string extract_code(const CompletionResult& completion, const ExtractionPolicy& policy) {
  if (completion.text.empty()) throw Error(ErrorCode::no_code_found, "completion is empty");
  return extract_code(completion.text, policy);
}

}  // namespace chiploop
