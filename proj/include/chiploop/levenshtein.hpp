#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chiploop {

// Edit distance with unit costs for insertion, deletion and substitution.
// Two-row dynamic program: O(|a|*|b|) time, O(min(|a|,|b|)) memory.
template <typename Sequence>
  requires requires(const Sequence& s) { s.size(); s[0]; }
std::size_t levenshtein(const Sequence& a, const Sequence& b) {
  const Sequence& longer = a.size() >= b.size() ? a : b;
  const Sequence& shorter = a.size() >= b.size() ? b : a;
  const std::size_t n = shorter.size();

  std::vector<std::size_t> row(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = j;

  for (std::size_t i = 1; i <= longer.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t up = row[j];
      const std::size_t subst = diag + (longer[i - 1] == shorter[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, subst});
      diag = up;
    }
  }
  return row[n];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein<std::string_view>(a, b);
}

/// levenshtein(a, b) / max(|a|, |b|); 0 when both are empty.
inline double norm_distance(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

/// Removes // line and /* */ block comments (C and Verilog syntax), leaving
/// string literals intact.
std::string strip_comments(std::string_view source);

}  // namespace chiploop
