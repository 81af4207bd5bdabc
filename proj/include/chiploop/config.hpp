#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "chiploop/candidate.hpp"
#include "chiploop/clock.hpp"
#include "chiploop/evalharness.hpp"
#include "chiploop/llm.hpp"
#include "chiploop/pool.hpp"
#include "chiploop/prompt.hpp"
#include "chiploop/treesearch.hpp"

namespace chiploop {

struct BackendSettings {
  std::string kind = "mock";  // "mock" or "http"
  std::filesystem::path fixture;
  HttpBackendConfig http;
  std::string api_key_env = "OPENAI_API_KEY";
};

struct RunPaths {
  std::optional<std::filesystem::path> spec;
  std::optional<std::filesystem::path> testbench;
  std::optional<std::filesystem::path> seeds;
  std::optional<std::filesystem::path> goal;
  std::optional<std::filesystem::path> output;
};

// One JSON document configures a run. Relative paths resolve against the
// directory of the config file; the snapshot written next to each log holds
// the resolved (absolute) form.
struct RunConfig {
  Language language = Language::verilog;
  BackendSettings backend;
  ToolAdapterSpec adapter;
  TreeSearchConfig tree;
  OptimizerConfig opt;
  SamplingParams opt_sampling = SamplingParams();  // temperature is driven by the optimizer
  std::optional<std::filesystem::path> templates_dir;
  std::string score_unit;
  std::size_t feedback_cap = kFeedbackCapBytes;
  ExtractionPolicy extraction;
  RunPaths paths;
  std::filesystem::path log_path = "chiploop-run.jsonl";
  std::string clock;  // "stepping" or "wall"; empty picks by backend kind
  std::int64_t clock_step_ms = 1000;
  std::size_t workers = 1;

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Resolved form; never contains the API key.
  nlohmann::json to_json() const;

  PromptSettings prompt_settings(const SamplingParams& params) const;
  std::unique_ptr<Backend> make_backend() const;
  std::unique_ptr<Clock> make_clock() const;
  std::string effective_clock() const;

  std::filesystem::path snapshot_path() const;
  std::filesystem::path call_log_path() const;
  std::filesystem::path work_root() const;
  std::filesystem::path output_path() const;
};

}  // namespace chiploop
