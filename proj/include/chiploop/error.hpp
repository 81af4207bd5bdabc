#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chiploop {

enum class ErrorCode {
  invalid_argument,
  backend_unreachable,
  backend_refused,
  mock_exhausted,
  fixture_malformed,
  partial_batch,
  empty_spec,
  empty_pseudocode,
  empty_pool,
  no_code_found,
  tool_missing,
  no_testcases,
  score_unparsable,
  unevaluated_child,
  all_extraction_failed,
  template_error,
  config_error,
  io_error,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline bool is(const Error& e, ErrorCode code) { return e.code() == code; }

}  // namespace chiploop
