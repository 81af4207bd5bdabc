#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chiploop {

using TemplateValues = std::map<std::string, std::string, std::less<>>;

/// Substitutes every {{name}} in a single pass; substituted text is never
/// re-scanned. Unknown placeholders throw TemplateError.
std::string render_template(std::string_view tpl, const TemplateValues& values);

/// Placeholder names referenced by a template, in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view tpl);

// The named prompt templates. Each name has a fixed set of allowed
// placeholders and a set that must appear.
class PromptTemplates {
 public:
  static PromptTemplates defaults();

  /// Defaults, overridden by any <name>.txt present in `dir`.
  static PromptTemplates load(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  void set(const std::string& name, std::string body);

  static const std::vector<std::string>& names();

 private:
  std::map<std::string, std::string, std::less<>> bodies_;
};

}  // namespace chiploop
