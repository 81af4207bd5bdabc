#include "chiploop/evalharness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>

#include "chiploop/error.hpp"
#include "chiploop/jsonl.hpp"
#include "chiploop/process.hpp"

namespace fs = std::filesystem;

namespace chiploop {

namespace {

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls fn(name) for every {name} in token.
template <typename Fn>
void for_each_placeholder(std::string_view token, Fn&& fn) {
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (token[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < token.size() && is_placeholder_char(token[j])) ++j;
    if (j < token.size() && token[j] == '}' && j > i + 1) {
      fn(token.substr(i + 1, j - i - 1));
      i = j;
    }
  }
}

void check_template(const std::vector<std::string>& cmd, const std::vector<std::string>& allowed,
                    std::string_view what) {
  for (const auto& tok : cmd) {
    for_each_placeholder(tok, [&](std::string_view name) {
      if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
        throw Error(ErrorCode::invalid_argument, std::string(what) +
                                                     " references undefined placeholder {" +
                                                     std::string(name) + "}");
      }
    });
  }
}

struct Substitutions {
  std::vector<std::pair<std::string, std::string>> values;

  std::vector<std::string> apply(const std::vector<std::string>& cmd) const {
    std::vector<std::string> out;
    out.reserve(cmd.size());
    for (const auto& tok : cmd) {
      std::string result;
      std::size_t last = 0;
      for (std::size_t i = 0; i < tok.size(); ++i) {
        if (tok[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < tok.size() && is_placeholder_char(tok[j])) ++j;
        if (j >= tok.size() || tok[j] != '}' || j == i + 1) continue;
        const auto name = std::string_view(tok).substr(i + 1, j - i - 1);
        for (const auto& [k, v] : values) {
          if (k == name) {
            result.append(tok, last, i - last);
            result += v;
            last = j + 1;
            break;
          }
        }
        i = j;
      }
      result.append(tok, last, std::string::npos);
      out.push_back(std::move(result));
    }
    return out;
  }
};

fs::path artifact_path(const fs::path& workdir) { return workdir / "build" / "artifact"; }

fs::path source_path(const fs::path& workdir, Language lang) {
  return workdir / ("src." + std::string(source_extension(lang)));
}

std::chrono::milliseconds seconds(int s) { return std::chrono::milliseconds(1000LL * s); }

}  // namespace

const std::vector<std::string>& compile_placeholders() {
  static const std::vector<std::string> v{"src", "out", "workdir", "testbench"};
  return v;
}
const std::vector<std::string>& run_placeholders() {
  static const std::vector<std::string> v{"out", "workdir"};
  return v;
}
const std::vector<std::string>& score_placeholders() {
  static const std::vector<std::string> v{"src", "out", "workdir"};
  return v;
}

void ToolAdapterSpec::validate() const {
  if (compile_cmd.empty()) throw Error(ErrorCode::invalid_argument, "compile_cmd is required");
  if (score_mode == ScoreMode::pass_fraction && run_cmd.empty()) {
    throw Error(ErrorCode::invalid_argument, "run_cmd is required in pass_fraction mode");
  }
  if (score_mode == ScoreMode::external_command && score_cmd.empty()) {
    throw Error(ErrorCode::invalid_argument, "score_cmd is required in external_command mode");
  }
  if (compile_timeout_s < 1 || run_timeout_s < 1 || score_timeout_s < 1) {
    throw Error(ErrorCode::invalid_argument, "timeouts must be positive");
  }
  check_template(compile_cmd, compile_placeholders(), "compile_cmd");
  check_template(run_cmd, run_placeholders(), "run_cmd");
  check_template(score_cmd, score_placeholders(), "score_cmd");
  bool uses_testbench = false;
  for (const auto& tok : compile_cmd) {
    for_each_placeholder(tok, [&](std::string_view n) { uses_testbench |= n == "testbench"; });
  }
  if (uses_testbench && !testbench) {
    throw Error(ErrorCode::invalid_argument, "compile_cmd uses {testbench} but none is configured");
  }
  try {
    std::regex check(fatal_regex);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::invalid_argument, "bad fatal_regex: " + std::string(e.what()));
  }
}

nlohmann::json ToolAdapterSpec::to_json() const {
  nlohmann::json j;
  j["compile_cmd"] = compile_cmd;
  j["run_cmd"] = run_cmd;
  j["score_cmd"] = score_cmd;
  j["score_mode"] = score_mode == ScoreMode::pass_fraction ? "pass_fraction" : "external_command";
  j["compile_timeout_s"] = compile_timeout_s;
  j["run_timeout_s"] = run_timeout_s;
  j["score_timeout_s"] = score_timeout_s;
  j["fatal_regex"] = fatal_regex;
  j["testbench"] = testbench ? nlohmann::json(testbench->string()) : nlohmann::json(nullptr);
  return j;
}

namespace {

std::vector<std::string> command_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return {};
  const auto& v = j[key];
  if (v.is_array()) return v.get<std::vector<std::string>>();
  if (v.is_string()) {
    // Whitespace-split convenience form; no quoting rules.
    std::vector<std::string> out;
    std::string cur;
    for (char c : v.get<std::string>()) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }
  throw Error(ErrorCode::config_error, std::string(key) + " must be an array or string");
}

}  // namespace

ToolAdapterSpec ToolAdapterSpec::from_json(const nlohmann::json& j) {
  ToolAdapterSpec a;
  a.compile_cmd = command_from_json(j, "compile_cmd");
  a.run_cmd = command_from_json(j, "run_cmd");
  a.score_cmd = command_from_json(j, "score_cmd");
  const auto mode = j.value("score_mode", std::string("pass_fraction"));
  if (mode == "pass_fraction") {
    a.score_mode = ScoreMode::pass_fraction;
  } else if (mode == "external_command") {
    a.score_mode = ScoreMode::external_command;
  } else {
    throw Error(ErrorCode::config_error, "unknown score_mode: " + mode);
  }
  a.compile_timeout_s = j.value("compile_timeout_s", a.compile_timeout_s);
  a.run_timeout_s = j.value("run_timeout_s", a.run_timeout_s);
  a.score_timeout_s = j.value("score_timeout_s", a.score_timeout_s);
  a.fatal_regex = j.value("fatal_regex", a.fatal_regex);
  if (j.contains("testbench") && !j["testbench"].is_null()) {
    a.testbench = j["testbench"].get<std::string>();
  }
  return a;
}

CompileOutcome compile(const CodeCandidate& candidate, const ToolAdapterSpec& adapter,
                       const fs::path& workdir_in) {
  const fs::path workdir = fs::absolute(workdir_in);
  fs::create_directories(workdir);
  if (!fs::is_empty(workdir)) {
    throw Error(ErrorCode::invalid_argument, "workdir is not empty: " + workdir.string());
  }
  fs::create_directories(workdir / "build");
  fs::create_directories(workdir / "logs");
  const fs::path src = source_path(workdir, candidate.language);
  write_file(src, candidate.source);

  Substitutions subs{{{"src", src.string()},
                      {"out", artifact_path(workdir).string()},
                      {"workdir", workdir.string()},
                      {"testbench", adapter.testbench ? fs::absolute(*adapter.testbench).string()
                                                      : std::string()}}};
  const auto proc = run_process(subs.apply(adapter.compile_cmd),
                                {workdir, seconds(adapter.compile_timeout_s), true});
  write_file(workdir / "logs" / "compile.txt", proc.output);

  CompileOutcome out;
  out.output = proc.output;
  out.artifact = artifact_path(workdir);
  if (proc.timed_out) {
    out.status = StageStatus::timed_out;
  } else if (proc.exit_code != 0) {
    out.status = StageStatus::failed;
  }
  return out;
}

RunOutcome run_sim(const fs::path& artifact, const ToolAdapterSpec& adapter,
                   const fs::path& workdir_in) {
  const fs::path workdir = fs::absolute(workdir_in);
  fs::create_directories(workdir / "logs");
  Substitutions subs{{{"out", fs::absolute(artifact).string()}, {"workdir", workdir.string()}}};
  const auto proc =
      run_process(subs.apply(adapter.run_cmd), {workdir, seconds(adapter.run_timeout_s), true});
  write_file(workdir / "logs" / "run.txt", proc.output);

  RunOutcome out;
  out.exit_code = proc.exit_code;
  out.output = proc.output;
  if (proc.timed_out) {
    out.status = EvalStatus::timeout;
  } else if (proc.exit_code != 0 ||
             std::regex_search(proc.output, std::regex(adapter.fatal_regex))) {
    out.status = EvalStatus::runtime_exception;
  }
  return out;
}

PassFraction parse_pass_fraction(std::string_view text) {
  static constexpr std::string_view kPrefix = "TESTCASE ";
  PassFraction pf;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.starts_with(kPrefix)) continue;
    line.remove_prefix(kPrefix.size());
    std::size_t digits = 0;
    while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
    if (digits == 0 || line[0] == '0') continue;
    line.remove_prefix(digits);
    if (line == ": PASS") {
      ++pf.pass_count;
      ++pf.total_count;
    } else if (line == ": FAIL") {
      ++pf.total_count;
    }
  }
  if (pf.total_count == 0) {
    throw Error(ErrorCode::no_testcases, "simulator output contains no TESTCASE lines");
  }
  pf.fraction = static_cast<double>(pf.pass_count) / static_cast<double>(pf.total_count);
  return pf;
}

double parse_external_score(std::string_view text) {
  auto end = text.find_last_not_of(" \t\r\n\f\v");
  if (end == std::string_view::npos) {
    throw Error(ErrorCode::score_unparsable, "external scorer printed nothing");
  }
  auto begin = text.find_last_of(" \t\r\n\f\v", end);
  begin = begin == std::string_view::npos ? 0 : begin + 1;
  const std::string_view token = text.substr(begin, end - begin + 1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::score_unparsable,
                "external scorer output is not a number: '" + std::string(token) + "'");
  }
  return value;
}

EvaluationReport score_candidate(const CodeCandidate& candidate, const ToolAdapterSpec& adapter,
                                 const fs::path& workdir_in) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path workdir = fs::absolute(workdir_in);
  auto finish = [&](EvaluationReport r) {
    r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    return r;
  };

  const auto comp = compile(candidate, adapter, workdir);
  if (comp.status == StageStatus::failed) {
    return finish(EvaluationReport::failure(EvalStatus::compile_error, comp.output));
  }
  if (comp.status == StageStatus::timed_out) {
    return finish(EvaluationReport::failure(EvalStatus::timeout, comp.output));
  }

  EvaluationReport report;
  report.compile_output = comp.output;
  if (!adapter.run_cmd.empty()) {
    const auto run = run_sim(comp.artifact, adapter, workdir);
    if (run.status != EvalStatus::evaluated) {
      return finish(EvaluationReport::failure(run.status, comp.output, run.output));
    }
    report.run_output = run.output;
  }

  if (adapter.score_mode == ScoreMode::pass_fraction) {
    try {
      const auto pf = parse_pass_fraction(report.run_output);
      report.pass_count = pf.pass_count;
      report.total_count = pf.total_count;
      report.score = pf.fraction;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_testcases) throw;
      return finish(EvaluationReport::failure(
          EvalStatus::runtime_exception, comp.output,
          report.run_output + "\n[chiploop] testbench produced no TESTCASE lines\n"));
    }
    return finish(std::move(report));
  }

  Substitutions subs{{{"src", source_path(workdir, candidate.language).string()},
                      {"out", comp.artifact.string()},
                      {"workdir", workdir.string()}}};
  const auto proc = run_process(subs.apply(adapter.score_cmd),
                                {workdir, seconds(adapter.score_timeout_s), false});
  write_file(workdir / "logs" / "score.txt", proc.output + proc.error_output);
  if (proc.timed_out) {
    return finish(EvaluationReport::failure(EvalStatus::timeout, comp.output,
                                            report.run_output + proc.output));
  }
  if (proc.exit_code != 0) {
    return finish(EvaluationReport::failure(EvalStatus::runtime_exception, comp.output,
                                            report.run_output + proc.output + proc.error_output));
  }
  report.score = parse_external_score(proc.output);
  return finish(std::move(report));
}

ToolEvaluator::ToolEvaluator(ToolAdapterSpec adapter) : adapter_(std::move(adapter)) {
  adapter_.validate();
}

EvaluationReport ToolEvaluator::evaluate(const CodeCandidate& candidate,
                                         const fs::path& workdir) const {
  return score_candidate(candidate, adapter_, workdir);
}

}  // namespace chiploop
