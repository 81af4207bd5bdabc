#include <httplib.h>

#include <chrono>
#include <thread>

#include "chiploop/llm.hpp"

namespace chiploop {

namespace {

// Splits "http://host:port/v1/chat/completions" into ("http://host:port",
// "/v1/chat/completions").
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::config_error, "backend url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.attempts < 1) throw Error(ErrorCode::config_error, "attempts must be >= 1");
  std::tie(scheme_host_port_, path_) = split_url(cfg_.url);
}

json HttpBackend::request_body(const PromptBundle& bundle, const std::string& model) {
  json body;
  body["model"] = model;
  body["messages"] = json::array();
  for (const auto& m : bundle.messages()) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const auto& p = bundle.params();
  body["temperature"] = p.temperature();
  body["max_tokens"] = p.max_tokens();
  if (p.top_p()) body["top_p"] = *p.top_p();
  if (p.seed()) body["seed"] = *p.seed();
  body["n"] = 1;
  body["stream"] = false;
  return body;
}

CompletionResult HttpBackend::do_complete(const PromptBundle& bundle, std::size_t) {
  const std::string body = request_body(bundle, cfg_.model).dump();
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  std::string last_transport_error;
  for (int attempt = 0; attempt < cfg_.attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.backoff_base * (1 << (attempt - 1)));
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(cfg_.timeout_s));
    client.set_write_timeout(std::chrono::seconds(cfg_.timeout_s));
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_transport_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::backend_refused,
                  "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    json payload;
    try {
      payload = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::backend_refused, std::string("unparsable response body: ") + e.what());
    }
    if (!payload.contains("choices") || !payload["choices"].is_array() ||
        payload["choices"].empty()) {
      throw Error(ErrorCode::backend_refused, "response has no choices: " + res->body);
    }
    const auto& choice = payload["choices"][0];
    CompletionResult r;
    const auto& msg = choice.value("message", json::object());
    if (msg.contains("content") && msg["content"].is_string()) {
      r.text = msg["content"].get<std::string>();
    }
    const std::string finish =
        choice.contains("finish_reason") && choice["finish_reason"].is_string()
            ? choice["finish_reason"].get<std::string>()
            : "stop";
    r.finish_reason = finish == "stop"     ? FinishReason::stop
                      : finish == "length" ? FinishReason::length
                                           : FinishReason::error;
    r.model_id = payload.value("model", cfg_.model);
    r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    return r;
  }
  throw Error(ErrorCode::backend_unreachable,
              "after " + std::to_string(cfg_.attempts) + " attempts: " + last_transport_error);
}

}  // namespace chiploop
