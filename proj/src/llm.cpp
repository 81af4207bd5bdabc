#include "chiploop/llm.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "chiploop/hash.hpp"

namespace chiploop {

SamplingParams::SamplingParams(double temperature, int max_tokens, std::optional<double> top_p,
                               std::optional<std::uint64_t> seed)
    : temperature_(temperature), max_tokens_(max_tokens), top_p_(top_p), seed_(seed) {
  if (!(temperature >= kMinTemperature && temperature <= kMaxTemperature)) {
    std::ostringstream msg;
    msg << "temperature " << temperature << " outside [" << kMinTemperature << ", "
        << kMaxTemperature << "]";
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
  if (max_tokens < 1) throw Error(ErrorCode::invalid_argument, "max_tokens must be >= 1");
  if (top_p && !(*top_p > 0.0 && *top_p <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "top_p must be in (0, 1]");
  }
}

SamplingParams SamplingParams::with_temperature(double t) const {
  return SamplingParams(t, max_tokens_, top_p_, seed_);
}

json SamplingParams::to_json() const {
  json j;
  j["temperature"] = temperature_;
  j["max_tokens"] = max_tokens_;
  j["top_p"] = top_p_ ? json(*top_p_) : json(nullptr);
  j["seed"] = seed_ ? json(*seed_) : json(nullptr);
  return j;
}

SamplingParams SamplingParams::from_json(const json& j) {
  std::optional<double> top_p;
  std::optional<std::uint64_t> seed;
  if (j.contains("top_p") && !j["top_p"].is_null()) top_p = j["top_p"].get<double>();
  if (j.contains("seed") && !j["seed"].is_null()) seed = j["seed"].get<std::uint64_t>();
  return SamplingParams(j.value("temperature", 0.8), j.value("max_tokens", 2048), top_p, seed);
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::design: return "design";
    case Stage::testbench: return "testbench";
    case Stage::feedback: return "feedback";
    case Stage::scot_pseudocode: return "scot_pseudocode";
    case Stage::scot_code: return "scot_code";
  }
  return "design";
}

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw Error(ErrorCode::invalid_argument, "unknown role: " + std::string(s));
}

Stage stage_from_string(std::string_view s) {
  for (Stage st : {Stage::design, Stage::testbench, Stage::feedback, Stage::scot_pseudocode,
                   Stage::scot_code}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::invalid_argument, "unknown stage: " + std::string(s));
}

std::string bundle_hash(const std::vector<Message>& messages, const SamplingParams& params) {
  // nlohmann::json objects keep keys sorted, which makes this dump canonical.
  json canonical;
  canonical["messages"] = json::array();
  for (const auto& m : messages) {
    canonical["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  canonical["params"] = params.to_json();
  return sha256_hex(canonical.dump());
}

PromptBundle::PromptBundle(Stage stage, std::vector<Message> messages, SamplingParams params)
    : stage_(stage), messages_(std::move(messages)), params_(std::move(params)) {
  if (messages_.empty()) throw Error(ErrorCode::invalid_argument, "prompt has no messages");
  if (messages_.front().role == Role::assistant) {
    throw Error(ErrorCode::invalid_argument, "first message must be system or user");
  }
  hash_ = bundle_hash(messages_, params_);
}

PromptBundle PromptBundle::with_params(SamplingParams params) const {
  return PromptBundle(stage_, messages_, std::move(params));
}

std::string PromptBundle::full_text() const {
  std::string out;
  for (const auto& m : messages_) {
    out += m.content;
    out += '\n';
  }
  return out;
}

json PromptBundle::to_json() const {
  json j;
  j["stage"] = to_string(stage_);
  j["messages"] = json::array();
  for (const auto& m : messages_) {
    j["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  j["params"] = params_.to_json();
  j["bundle_hash"] = hash_;
  return j;
}

PromptBundle PromptBundle::from_json(const json& j) {
  std::vector<Message> messages;
  for (const auto& m : j.at("messages")) {
    messages.push_back({role_from_string(m.at("role").get<std::string>()),
                        m.at("content").get<std::string>()});
  }
  return PromptBundle(stage_from_string(j.at("stage").get<std::string>()), std::move(messages),
                      SamplingParams::from_json(j.at("params")));
}

PartialBatchError::PartialBatchError(std::vector<std::size_t> failed,
                                     std::vector<CompletionResult> ok,
                                     const std::string& first_failure)
    : Error(ErrorCode::partial_batch,
            [&] {
              std::ostringstream msg;
              msg << "partial batch; failed indices:";
              for (auto i : failed) msg << ' ' << i;
              msg << " (" << first_failure << ")";
              return msg.str();
            }()),
      failed_(std::move(failed)),
      completed_(std::move(ok)) {}

CompletionResult Backend::complete(const PromptBundle& bundle, std::size_t candidate_index) {
  const auto start = std::chrono::steady_clock::now();
  try {
    CompletionResult result = do_complete(bundle, candidate_index);
    result.candidate_index = candidate_index;
    if (result.latency_ms == 0) {
      result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    }
    if (call_log_) {
      ordered_json rec;
      rec["request"] = bundle.to_json();
      rec["candidate_index"] = candidate_index;
      rec["response"] = {{"text", result.text},
                         {"finish_reason", to_string(result.finish_reason)},
                         {"model_id", result.model_id},
                         {"latency_ms", result.latency_ms}};
      call_log_->write(rec);
    }
    return result;
  } catch (const Error& e) {
    if (call_log_) {
      ordered_json rec;
      rec["request"] = bundle.to_json();
      rec["candidate_index"] = candidate_index;
      rec["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
      call_log_->write(rec);
    }
    throw;
  }
}

std::vector<CompletionResult> sample_k(Backend& backend, const PromptBundle& bundle,
                                       std::size_t k) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  std::vector<CompletionResult> ok;
  std::vector<std::size_t> failed;
  std::optional<Error> first_error;
  for (std::size_t i = 0; i < k; ++i) {
    try {
      ok.push_back(backend.complete(bundle, i));
    } catch (const Error& e) {
      // A spent fixture is not a per-sample failure; the whole run is over.
      if (e.code() == ErrorCode::mock_exhausted) throw;
      failed.push_back(i);
      if (!first_error) first_error = e;
    }
  }
  if (failed.empty()) return ok;
  if (failed.size() == k) throw *first_error;
  throw PartialBatchError(std::move(failed), std::move(ok), first_error->what());
}

// ---------------------------------------------------------------------------

MockBackend::MockBackend(Mode mode, std::vector<Entry> entries) : mode_(mode) {
  for (auto& e : entries) {
    if (mode_ == Mode::keyed && e.key) {
      keyed_[*e.key].push_back(std::move(e));
    } else {
      sequence_.push_back(std::move(e));
    }
  }
}

std::unique_ptr<MockBackend> MockBackend::from_json(const json& fixture) {
  auto malformed = [](const std::string& why) {
    return Error(ErrorCode::fixture_malformed, "mock fixture: " + why);
  };
  if (!fixture.is_object()) throw malformed("document must be an object");
  if (!fixture.contains("mode") || !fixture["mode"].is_string()) throw malformed("missing mode");
  const auto mode_str = fixture["mode"].get<std::string>();
  Mode mode;
  if (mode_str == "keyed") {
    mode = Mode::keyed;
  } else if (mode_str == "sequence") {
    mode = Mode::sequence;
  } else {
    throw malformed("mode must be \"keyed\" or \"sequence\"");
  }
  if (!fixture.contains("responses") || !fixture["responses"].is_array()) {
    throw malformed("responses must be an array");
  }
  std::vector<Entry> entries;
  std::size_t idx = 0;
  for (const auto& r : fixture["responses"]) {
    const std::string where = "responses[" + std::to_string(idx++) + "]";
    if (!r.is_object()) throw malformed(where + " must be an object");
    Entry e;
    if (r.contains("key") && !r["key"].is_null()) {
      if (!r["key"].is_string()) throw malformed(where + ".key must be a string or null");
      e.key = r["key"].get<std::string>();
    }
    const bool has_text = r.contains("text") && r["text"].is_string();
    if (r.contains("error") && !r["error"].is_null()) {
      if (!r["error"].is_string()) throw malformed(where + ".error must be a string");
      e.error = r["error"].get<std::string>();
      if (*e.error != "unreachable" && *e.error != "refused") {
        throw malformed(where + ".error must be \"unreachable\" or \"refused\"");
      }
    } else if (!has_text) {
      throw malformed(where + ".text must be a string");
    }
    if (has_text) e.text = r["text"].get<std::string>();
    if (r.contains("finish_reason")) {
      const auto fr = r["finish_reason"].get<std::string>();
      e.finish_reason = fr == "length" ? FinishReason::length
                        : fr == "error" ? FinishReason::error
                                        : FinishReason::stop;
    }
    entries.push_back(std::move(e));
  }
  return std::make_unique<MockBackend>(mode, std::move(entries));
}

std::unique_ptr<MockBackend> MockBackend::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::fixture_malformed, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

CompletionResult MockBackend::do_complete(const PromptBundle& bundle, std::size_t) {
  Entry entry;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    std::deque<Entry>* queue = &sequence_;
    if (mode_ == Mode::keyed) {
      auto it = keyed_.find(bundle.hash());
      if (it != keyed_.end() && !it->second.empty()) queue = &it->second;
    }
    if (queue->empty()) {
      throw Error(ErrorCode::mock_exhausted,
                  mode_ == Mode::keyed ? "no scripted response for bundle " + bundle.hash()
                                       : "scripted response sequence exhausted after " +
                                             std::to_string(calls_ - 1) + " calls");
    }
    entry = std::move(queue->front());
    queue->pop_front();
  }
  if (entry.error) {
    if (*entry.error == "unreachable") {
      throw Error(ErrorCode::backend_unreachable, "scripted transport failure");
    }
    throw Error(ErrorCode::backend_refused, "scripted refusal");
  }
  CompletionResult r;
  r.text = std::move(entry.text);
  r.finish_reason = entry.finish_reason;
  r.model_id = "mock";
  return r;
}

}  // namespace chiploop
