#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chiploop/error.hpp"
#include "chiploop/jsonl.hpp"

namespace chiploop {

using json = nlohmann::json;

// Sampling parameters for one completion request. Temperature is bounded to
// [0, 2]; construction outside the bounds throws InvalidArgument.
class SamplingParams {
 public:
  static constexpr double kMinTemperature = 0.0;
  static constexpr double kMaxTemperature = 2.0;

  explicit SamplingParams(double temperature = 0.8, int max_tokens = 2048,
                          std::optional<double> top_p = std::nullopt,
                          std::optional<std::uint64_t> seed = std::nullopt);

  double temperature() const { return temperature_; }
  int max_tokens() const { return max_tokens_; }
  const std::optional<double>& top_p() const { return top_p_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

  SamplingParams with_temperature(double t) const;

  json to_json() const;
  static SamplingParams from_json(const json& j);

  bool operator==(const SamplingParams&) const = default;

 private:
  double temperature_;
  int max_tokens_;
  std::optional<double> top_p_;
  std::optional<std::uint64_t> seed_;
};

enum class Role { system, user, assistant };
enum class Stage { design, testbench, feedback, scot_pseudocode, scot_code };

std::string_view to_string(Role role);
std::string_view to_string(Stage stage);
Role role_from_string(std::string_view s);
Stage stage_from_string(std::string_view s);

struct Message {
  Role role;
  std::string content;
  bool operator==(const Message&) const = default;
};

// An ordered conversation plus sampling parameters. The hash covers messages
// and params only (not the stage) and is computed from a canonical JSON
// serialization, so it is identical across runs and platforms.
class PromptBundle {
 public:
  PromptBundle(Stage stage, std::vector<Message> messages, SamplingParams params);

  Stage stage() const { return stage_; }
  const std::vector<Message>& messages() const { return messages_; }
  const SamplingParams& params() const { return params_; }
  const std::string& hash() const { return hash_; }

  PromptBundle with_params(SamplingParams params) const;

  /// All message contents joined; convenient for containment checks.
  std::string full_text() const;

  json to_json() const;
  static PromptBundle from_json(const json& j);

 private:
  Stage stage_;
  std::vector<Message> messages_;
  SamplingParams params_;
  std::string hash_;
};

std::string bundle_hash(const std::vector<Message>& messages, const SamplingParams& params);

enum class FinishReason { stop, length, error };
std::string_view to_string(FinishReason r);

struct CompletionResult {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  std::string model_id;
  std::size_t candidate_index = 0;
  std::int64_t latency_ms = 0;
};

// Raised by sample_k when some (but not all) of the k requests fail.
// Successful results remain available to the caller.
class PartialBatchError : public Error {
 public:
  PartialBatchError(std::vector<std::size_t> failed, std::vector<CompletionResult> ok,
                    const std::string& first_failure);

  const std::vector<std::size_t>& failed_indices() const { return failed_; }
  const std::vector<CompletionResult>& completed() const { return completed_; }

 private:
  std::vector<std::size_t> failed_;
  std::vector<CompletionResult> completed_;
};

// A chat-completion backend. complete() records every request/response pair
// in the attached call log (if any) and returns the raw text unchanged.
class Backend {
 public:
  virtual ~Backend() = default;

  CompletionResult complete(const PromptBundle& bundle, std::size_t candidate_index = 0);

  void attach_call_log(std::shared_ptr<JsonlWriter> log) { call_log_ = std::move(log); }
  virtual bool is_mock() const { return false; }

 protected:
  virtual CompletionResult do_complete(const PromptBundle& bundle, std::size_t candidate_index) = 0;

 private:
  std::shared_ptr<JsonlWriter> call_log_;
};

/// Issues k independent requests in index order.
std::vector<CompletionResult> sample_k(Backend& backend, const PromptBundle& bundle, std::size_t k);

// Deterministic scripted backend. Sequence mode replays responses in global
// call order; keyed mode replays per-bundle-hash queues, with null-keyed
// entries acting as a shared fallback queue. An entry may carry an "error"
// ("unreachable" or "refused") instead of text to script backend failures.
class MockBackend : public Backend {
 public:
  enum class Mode { keyed, sequence };

  struct Entry {
    std::optional<std::string> key;
    std::string text;
    std::optional<std::string> error;
    FinishReason finish_reason = FinishReason::stop;
  };

  MockBackend(Mode mode, std::vector<Entry> entries);

  static std::unique_ptr<MockBackend> from_json(const json& fixture);
  static std::unique_ptr<MockBackend> load(const std::filesystem::path& path);

  Mode mode() const { return mode_; }
  std::size_t calls() const;
  bool is_mock() const override { return true; }

 protected:
  CompletionResult do_complete(const PromptBundle& bundle, std::size_t candidate_index) override;

 private:
  Mode mode_;
  mutable std::mutex mutex_;
  std::deque<Entry> sequence_;
  std::unordered_map<std::string, std::deque<Entry>> keyed_;
  std::size_t calls_ = 0;
};

struct HttpBackendConfig {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;
  int timeout_s = 120;
  int attempts = 3;
  std::chrono::milliseconds backoff_base{1000};
};

// OpenAI-compatible chat-completion client. Transport failures are retried
// with exponential backoff; non-2xx responses fail immediately.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);

  const HttpBackendConfig& config() const { return cfg_; }
  static json request_body(const PromptBundle& bundle, const std::string& model);

 protected:
  CompletionResult do_complete(const PromptBundle& bundle, std::size_t candidate_index) override;

 private:
  HttpBackendConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace chiploop
