#include "chiploop/config.hpp"

#include <cstdlib>

#include "chiploop/error.hpp"
#include "chiploop/jsonl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace chiploop {

namespace {

std::optional<fs::path> path_field(const json& obj, const char* key, const fs::path& base) {
  if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return std::nullopt;
  const fs::path p = obj[key].get<std::string>();
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

json path_json(const std::optional<fs::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

fs::path with_suffix(const fs::path& p, std::string_view suffix) {
  return fs::path(p.string() + std::string(suffix));
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_in) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "config must be a JSON object");
  const fs::path base = fs::absolute(base_in);
  RunConfig c;
  try {
    c.language = language_from_string(j.value("language", std::string("verilog")));

    const json backend = j.value("backend", json::object());
    c.backend.kind = backend.value("kind", std::string("mock"));
    if (c.backend.kind != "mock" && c.backend.kind != "http") {
      throw Error(ErrorCode::config_error, "backend.kind must be \"mock\" or \"http\"");
    }
    if (auto f = path_field(backend, "fixture", base)) c.backend.fixture = *f;
    c.backend.http.url = backend.value("url", std::string());
    c.backend.http.model = backend.value("model", std::string());
    c.backend.http.api_key = backend.value("api_key", std::string());
    c.backend.http.timeout_s = backend.value("timeout_s", 120);
    c.backend.http.attempts = backend.value("attempts", 3);
    c.backend.http.backoff_base = std::chrono::milliseconds(backend.value("backoff_ms", 1000));
    c.backend.api_key_env = backend.value("api_key_env", c.backend.api_key_env);
    if (const char* key = std::getenv(c.backend.api_key_env.c_str()); key && *key) {
      c.backend.http.api_key = key;
    }

    c.adapter = ToolAdapterSpec::from_json(j.value("adapter", json::object()));
    if (auto tb = path_field(j.value("adapter", json::object()), "testbench", base)) {
      c.adapter.testbench = *tb;
    }

    if (j.contains("tree")) c.tree = TreeSearchConfig::from_json(j["tree"]);
    if (j.contains("opt")) {
      c.opt = OptimizerConfig::from_json(j["opt"]);
      if (j["opt"].contains("sampling")) {
        json s = j["opt"]["sampling"];
        s["temperature"] = c.opt.temp_init;
        c.opt_sampling = SamplingParams::from_json(s);
      }
    }

    const json prompt = j.value("prompt", json::object());
    c.templates_dir = path_field(prompt, "templates_dir", base);
    c.score_unit = prompt.value("score_unit", std::string());
    c.feedback_cap = prompt.value("feedback_cap", kFeedbackCapBytes);

    const json extraction = j.value("extraction", json::object());
    c.extraction = ExtractionPolicy(
        extraction.value("language_tag", std::string(to_string(c.language))),
        extraction_fallback_from_string(extraction.value("fallback", std::string("module_span"))));

    const json paths = j.value("paths", json::object());
    c.paths.spec = path_field(paths, "spec", base);
    c.paths.testbench = path_field(paths, "testbench", base);
    c.paths.seeds = path_field(paths, "seeds", base);
    c.paths.goal = path_field(paths, "goal", base);
    c.paths.output = path_field(paths, "output", base);
    if (c.paths.testbench) c.adapter.testbench = c.paths.testbench;

    if (auto lp = path_field(j, "log_path", base)) c.log_path = *lp;
    else c.log_path = base / c.log_path;
    c.clock = j.value("clock", std::string());
    if (!c.clock.empty() && c.clock != "stepping" && c.clock != "wall") {
      throw Error(ErrorCode::config_error, "clock must be \"stepping\" or \"wall\"");
    }
    c.clock_step_ms = j.value("clock_step_ms", c.clock_step_ms);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_error) throw;
    throw Error(ErrorCode::config_error, std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::config_error, "config file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config_error, path.string() + ": " + e.what());
  }
  return from_json(doc, fs::absolute(path).parent_path());
}

json RunConfig::to_json() const {
  json j;
  j["language"] = to_string(language);
  j["backend"] = {{"kind", backend.kind},
                  {"fixture", backend.fixture.empty() ? json(nullptr) : json(backend.fixture.string())},
                  {"url", backend.http.url},
                  {"model", backend.http.model},
                  {"timeout_s", backend.http.timeout_s},
                  {"attempts", backend.http.attempts},
                  {"backoff_ms", backend.http.backoff_base.count()},
                  {"api_key_env", backend.api_key_env}};
  j["adapter"] = adapter.to_json();
  j["tree"] = tree.to_json();
  j["opt"] = opt.to_json();
  j["opt"]["sampling"] = opt_sampling.to_json();
  j["prompt"] = {{"templates_dir", path_json(templates_dir)},
                 {"score_unit", score_unit},
                 {"feedback_cap", feedback_cap}};
  j["extraction"] = {{"language_tag", extraction.language_tag},
                     {"fallback", extraction.fallback == ExtractionFallback::module_span ? "module_span"
                                  : extraction.fallback == ExtractionFallback::whole_text ? "whole_text"
                                                                                          : "fail"}};
  j["paths"] = {{"spec", path_json(paths.spec)},
                {"testbench", path_json(paths.testbench)},
                {"seeds", path_json(paths.seeds)},
                {"goal", path_json(paths.goal)},
                {"output", path_json(paths.output)}};
  j["log_path"] = log_path.string();
  j["clock"] = effective_clock();
  j["clock_step_ms"] = clock_step_ms;
  j["workers"] = workers;
  return j;
}

PromptSettings RunConfig::prompt_settings(const SamplingParams& params) const {
  PromptSettings s;
  s.templates = templates_dir ? PromptTemplates::load(*templates_dir) : PromptTemplates::defaults();
  s.params = params;
  s.language = std::string(to_string(language));
  s.score_unit = score_unit;
  s.feedback_cap = feedback_cap;
  return s;
}

std::unique_ptr<Backend> RunConfig::make_backend() const {
  if (backend.kind == "mock") {
    if (backend.fixture.empty()) throw Error(ErrorCode::config_error, "mock backend needs backend.fixture");
    if (!fs::exists(backend.fixture)) {
      throw Error(ErrorCode::config_error, "mock fixture not found: " + backend.fixture.string());
    }
    return MockBackend::load(backend.fixture);
  }
  if (backend.http.url.empty()) throw Error(ErrorCode::config_error, "http backend needs backend.url");
  return std::make_unique<HttpBackend>(backend.http);
}

std::string RunConfig::effective_clock() const {
  if (!clock.empty()) return clock;
  return backend.kind == "mock" ? "stepping" : "wall";
}

std::unique_ptr<Clock> RunConfig::make_clock() const {
  if (effective_clock() == "wall") return std::make_unique<WallClock>();
  return std::make_unique<SteppingClock>(clock_step_ms);
}

fs::path RunConfig::snapshot_path() const { return with_suffix(log_path, ".config.json"); }
fs::path RunConfig::call_log_path() const { return with_suffix(log_path, ".calls.jsonl"); }
fs::path RunConfig::work_root() const { return with_suffix(log_path, ".work"); }

fs::path RunConfig::output_path() const {
  if (paths.output) return *paths.output;
  return with_suffix(log_path, ".best." + std::string(source_extension(language)));
}

}  // namespace chiploop
