#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "chiploop/config.hpp"

namespace chiploop::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitBelowTarget = 2;
inline constexpr int kExitDivergence = 3;

struct CommonOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> log;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

/// Loads the config and applies command-line overrides.
RunConfig load_config(const CommonOptions& opts);

int cmd_generate(const RunConfig& cfg, std::ostream& err);
int cmd_optimize(const RunConfig& cfg, std::ostream& err, const std::atomic<bool>* stop_flag);
int cmd_eval(const std::filesystem::path& source, const RunConfig& cfg, std::ostream& out,
             std::ostream& err);
int cmd_replay(const std::filesystem::path& log, std::ostream& err);

/// Parses argv and dispatches; installs a SIGINT handler for optimize.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace chiploop::cli
