#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace chiploop {

struct ProcessResult {
  int exit_code = 0;       // 128 + signal number when killed by a signal
  bool timed_out = false;
  std::string output;      // stdout (and stderr when merged)
  std::string error_output;  // stderr when not merged
  std::chrono::milliseconds elapsed{0};
};

struct ProcessOptions {
  std::filesystem::path cwd;
  std::chrono::milliseconds timeout{60'000};
  bool merge_stderr = true;
};

// Runs argv[0] (looked up on PATH) directly, without a shell, in its own
// process group. On timeout the whole group is killed. Throws ToolMissing when
// the executable cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opts);

}  // namespace chiploop
