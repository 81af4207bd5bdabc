#include "chiploop/templates.hpp"

#include <algorithm>

#include "chiploop/error.hpp"
#include "chiploop/jsonl.hpp"

namespace chiploop {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& default_template_table();
}

namespace {

struct TemplateRule {
  std::vector<std::string> allowed;
  std::vector<std::string> required;
};

const std::map<std::string, TemplateRule, std::less<>>& rules() {
  static const std::map<std::string, TemplateRule, std::less<>> r{
      {"design_system", {{"language"}, {}}},
      {"design_user", {{"spec", "language"}, {"spec"}}},
      {"testbench_user", {{"spec", "language"}, {}}},
      {"feedback_user", {{"tool_output", "status_summary", "language"}, {"tool_output"}}},
      {"scot_pseudocode_system", {{"language"}, {}}},
      {"scot_pseudocode_user", {{"goal", "examples_block", "language"}, {"goal", "examples_block"}}},
      {"scot_example", {{"index", "label", "score", "source", "language"}, {"score", "source"}}},
      {"scot_code_system", {{"language"}, {}}},
      {"scot_code_user",
       {{"pseudocode", "caution_sentence", "language"}, {"pseudocode", "caution_sentence"}}},
      {"caution_sentence", {{}, {}}},
  };
  return r;
}

// Template files conventionally end with a newline that is not part of the text.
std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

template <typename Fn>
void scan(std::string_view tpl, Fn&& on_placeholder) {
  std::size_t pos = 0;
  while (true) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) return;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) return;
    on_placeholder(open, close + 2, tpl.substr(open + 2, close - open - 2));
    pos = close + 2;
  }
}

}  // namespace

std::string render_template(std::string_view tpl, const TemplateValues& values) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t last = 0;
  scan(tpl, [&](std::size_t begin, std::size_t end, std::string_view name) {
    const auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorCode::template_error, "no value for placeholder {{" + std::string(name) + "}}");
    }
    out.append(tpl.substr(last, begin - last));
    out += it->second;
    last = end;
  });
  out.append(tpl.substr(last));
  return out;
}

std::vector<std::string> template_placeholders(std::string_view tpl) {
  std::vector<std::string> names;
  scan(tpl, [&](std::size_t, std::size_t, std::string_view name) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
  });
  return names;
}

const std::vector<std::string>& PromptTemplates::names() {
  static const std::vector<std::string> n = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : rules()) v.push_back(k);
    return v;
  }();
  return n;
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  for (const auto& [name, body] : detail::default_template_table()) {
    t.set(std::string(name), strip_final_newline(std::string(body)));
  }
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t = defaults();
  for (const auto& name : names()) {
    const auto file = dir / (name + ".txt");
    if (std::filesystem::exists(file)) t.set(name, strip_final_newline(read_file(file)));
  }
  return t;
}

const std::string& PromptTemplates::get(std::string_view name) const {
  const auto it = bodies_.find(name);
  if (it == bodies_.end()) {
    throw Error(ErrorCode::template_error, "unknown template: " + std::string(name));
  }
  return it->second;
}

void PromptTemplates::set(const std::string& name, std::string body) {
  const auto rule = rules().find(name);
  if (rule == rules().end()) throw Error(ErrorCode::template_error, "unknown template: " + name);
  const auto used = template_placeholders(body);
  for (const auto& p : used) {
    const auto& allowed = rule->second.allowed;
    if (std::find(allowed.begin(), allowed.end(), p) == allowed.end()) {
      throw Error(ErrorCode::template_error,
                  "template " + name + " uses undefined placeholder {{" + p + "}}");
    }
  }
  for (const auto& p : rule->second.required) {
    if (std::find(used.begin(), used.end(), p) == used.end()) {
      throw Error(ErrorCode::template_error,
                  "template " + name + " must contain {{" + p + "}}");
    }
  }
  bodies_[name] = std::move(body);
}

}  // namespace chiploop
