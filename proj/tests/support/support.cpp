#include "support.hpp"

#include <unistd.h>

#include <fstream>
#include <regex>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "chiploop/process.hpp"

namespace fs = std::filesystem;

namespace chiploop::testkit {

fs::path fakesim_path() { return CHIPLOOP_FAKESIM; }
fs::path cli_path() { return CHIPLOOP_CLI; }
fs::path source_dir() { return CHIPLOOP_SOURCE_DIR; }

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "chiploop-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

ToolAdapterSpec fake_pass_adapter(int run_timeout_s) {
  ToolAdapterSpec a;
  a.compile_cmd = {fakesim_path().string(), "compile", "{src}", "{out}"};
  a.run_cmd = {fakesim_path().string(), "run", "{out}"};
  a.score_mode = ScoreMode::pass_fraction;
  a.compile_timeout_s = 10;
  a.run_timeout_s = run_timeout_s;
  return a;
}

ToolAdapterSpec fake_nop_adapter() {
  ToolAdapterSpec a;
  a.compile_cmd = {fakesim_path().string(), "compile", "{src}", "{out}"};
  a.score_cmd = {fakesim_path().string(), "score", "{src}"};
  a.score_mode = ScoreMode::external_command;
  a.compile_timeout_s = 10;
  a.score_timeout_s = 10;
  return a;
}

EvaluationReport DirectiveEvaluator::evaluate(const CodeCandidate& candidate,
                                              const fs::path&) const {
  const std::string& src = candidate.source;
  if (src.find("SYNTAX_ERROR") != std::string::npos) {
    return EvaluationReport::failure(EvalStatus::compile_error, "syntax error, line 1\n");
  }
  if (src.find("// @crash") != std::string::npos) {
    return EvaluationReport::failure(EvalStatus::runtime_exception, {}, "FATAL: crash\n");
  }
  EvaluationReport r;
  r.status = EvalStatus::evaluated;
  static const std::regex pass_re(R"(// @pass (\d+)/(\d+))");
  std::smatch m;
  if (std::regex_search(src, m, pass_re)) {
    r.pass_count = std::stoul(m[1]);
    r.total_count = std::stoul(m[2]);
    r.score = static_cast<double>(r.pass_count) / static_cast<double>(r.total_count);
    std::ostringstream out;
    for (std::size_t i = 1; i <= r.total_count; ++i) {
      out << "TESTCASE " << i << ": " << (i <= r.pass_count ? "PASS" : "FAIL") << "\n";
    }
    r.run_output = out.str();
  } else {
    r.score = static_cast<double>(regex_nop_count(src));
  }
  return r;
}

nlohmann::json sequence_fixture(const std::vector<std::string>& texts) {
  nlohmann::json doc{{"mode", "sequence"}, {"responses", nlohmann::json::array()}};
  for (const auto& t : texts) doc["responses"].push_back({{"key", nullptr}, {"text", t}});
  return doc;
}

std::string verilog_reply(std::string_view directive, std::string_view body) {
  std::string s = "Here you go.\n```verilog\n// ";
  s += directive;
  s += "\nmodule top(input a, output y);\n  ";
  s += body;
  s += "\nendmodule\n```\n";
  return s;
}

// Textbook recursion on suffixes; exponential, fine for short inputs.
std::size_t naive_levenshtein(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t cost = a.front() == b.front() ? 0 : 1;
  const std::size_t del = naive_levenshtein(a.substr(1), b) + 1;
  const std::size_t ins = naive_levenshtein(a, b.substr(1)) + 1;
  const std::size_t sub = naive_levenshtein(a.substr(1), b.substr(1)) + cost;
  return std::min({del, ins, sub});
}

std::size_t regex_nop_count(const std::string& source) {
  static const std::regex nop_re(R"(\bnop\b)");
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(source.begin(), source.end(), nop_re), std::sregex_iterator()));
}

ExecResult run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv{cli_path().string()};
  argv.insert(argv.end(), args.begin(), args.end());
  ProcessOptions opts;
  opts.merge_stderr = false;
  opts.timeout = std::chrono::seconds(120);
  const ProcessResult r = run_process(argv, opts);
  return {r.exit_code, r.output, r.error_output};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, std::string_view text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace chiploop::testkit

namespace chiploop::testkit {

const std::vector<GrammarFixture>& grammar_fixtures() {
  static const std::vector<GrammarFixture> fixtures = [] {
    std::string all_pass;
    for (int i = 1; i <= 10; ++i) all_pass += "TESTCASE " + std::to_string(i) + ": PASS\n";
    return std::vector<GrammarFixture>{
        {"mixed", "TESTCASE 1: PASS\nTESTCASE 2: FAIL\nTESTCASE 3: PASS", false, 2, 3},
        {"noise", "VCD info: dumpfile\nsimulation finished\nPASS\n", true, 0, 0},
        {"all_pass", all_pass, false, 10, 10},
    };
  }();
  return fixtures;
}

}  // namespace chiploop::testkit

#include <random>

#include "chiploop/error.hpp"
#include "chiploop/treesearch.hpp"

namespace chiploop::testkit {

TreeScenarioResult check_tree_scenario(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  TreeScenarioResult out;
  out.k = 1 + gen() % 4;
  out.d = 1 + gen() % 4;
  const double target = gen() % 2 ? 1.0 : 0.8;

  nlohmann::json fixture{{"mode", "sequence"}, {"responses", nlohmann::json::array()}};
  for (std::size_t i = 0; i < out.k * out.d; ++i) {
    const auto roll = gen() % 100;
    nlohmann::json entry{{"key", nullptr}};
    if (roll < 50) {
      entry["text"] = verilog_reply("@pass " + std::to_string(gen() % 11) + "/10");
    } else if (roll < 65) {
      entry["text"] = verilog_reply("draft", "SYNTAX_ERROR");
    } else if (roll < 75) {
      entry["text"] = verilog_reply("@crash");
    } else if (roll < 90) {
      entry["text"] = "Sorry, I need more details about the interface.";
    } else {
      entry["error"] = "refused";
    }
    fixture["responses"].push_back(entry);
  }

  auto mock = MockBackend::from_json(fixture);
  DirectiveEvaluator evaluator;
  TreeSearchConfig cfg;
  cfg.k = out.k;
  cfg.d = out.d;
  cfg.target_pass = target;
  TreeSearch search(*mock, evaluator, cfg, PromptSettings{},
                    ExtractionPolicy("verilog", ExtractionFallback::fail), Language::verilog,
                    "/nonexistent/unused");
  auto fail = [&](std::string why) {
    out.violation = "seed " + std::to_string(seed) + ": " + why;
    return out;
  };

  SearchTrace trace;
  try {
    trace = search.run("random scenario");
  } catch (const Error& e) {
    const bool expected = e.code() == ErrorCode::all_extraction_failed ||
                          e.code() == ErrorCode::backend_refused;
    if (!expected) return fail(std::string("unexpected error ") + e.what());
    if (mock->calls() > out.k * out.d) return fail("budget exceeded before error");
    return out;
  }
  out.completed = true;
  out.llm_calls = trace.llm_calls;

  if (trace.llm_calls > out.k * out.d) return fail("llm_calls above k*d");
  if (mock->calls() != trace.llm_calls) return fail("reported calls differ from backend calls");
  if (trace.stop_reason != TreeStopReason::target_reached && trace.llm_calls != out.k * out.d) {
    return fail("budget not exhausted without early stop");
  }

  double max_score = 0.0;
  for (const auto& n : trace.nodes) max_score = std::max(max_score, n.score());
  if (trace.best().score() != max_score) return fail("returned node is not the max-score node");

  const bool reached = max_score >= target;
  if (reached != (trace.stop_reason == TreeStopReason::target_reached)) return fail("stop reason vs target");
  if (!reached && (max_score == 0.0) != (trace.stop_reason == TreeStopReason::all_failed)) {
    return fail("all_failed mismatch");
  }

  // Lineage: each depth's parent is the ranked best of the latest populated earlier depth.
  std::map<std::size_t, std::vector<CodeCandidate>> by_depth;
  for (const auto& n : trace.nodes) by_depth[n.depth].push_back(n);
  std::optional<std::string> previous_best;
  double running_best = 0.0;
  for (const auto& [depth, nodes] : by_depth) {
    for (const auto& n : nodes) {
      if (depth == 0 ? n.parent_id.has_value() : n.parent_id != previous_best) {
        return fail("lineage broken at " + n.id);
      }
    }
    const auto ranked = rank(nodes);
    previous_best = ranked.front().id;
    const double depth_best = std::max(running_best, ranked.front().score());
    if (depth_best < running_best) return fail("global best decreased");
    running_best = depth_best;
  }
  return out;
}

}  // namespace chiploop::testkit

namespace chiploop::testkit {

std::string nop_program(std::size_t nops, std::mt19937_64& gen) {
  static const char* kNames[] = {"acc", "tmp", "idx", "val", "sum", "cnt", "reg0", "reg1"};
  std::string s = "#include <stdint.h>\n\nint main(void) {\n";
  const std::size_t vars = 1 + gen() % 4;
  for (std::size_t v = 0; v < vars; ++v) {
    s += "  volatile uint32_t " + std::string(kNames[gen() % 8]) + std::to_string(v) + " = " +
         std::to_string(gen() % 1000) + ";\n";
  }
  for (std::size_t i = 0; i < nops; ++i) {
    if (gen() % 3 == 0) s += "  " + std::string(kNames[gen() % 8]) + "0 += " + std::to_string(gen() % 97) + ";\n";
    s += "  __asm__ volatile(\"nop\");\n";
  }
  s += "  return 0;\n}\n";
  return s;
}

NopScenario nop_scenario(std::size_t iterations, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  NopScenario sc;
  sc.seeds = {nop_program(1, gen), nop_program(2, gen)};
  sc.fixture = {{"mode", "sequence"}, {"responses", nlohmann::json::array()}};
  for (std::size_t i = 0; i < iterations; ++i) {
    const std::size_t trend = 1 + (i * 20) / std::max<std::size_t>(iterations, 1);
    std::string code = nop_program(trend + gen() % 6, gen);
    if (gen() % 10 == 0) code.insert(code.find("  return"), "  SYNTAX_ERROR\n");
    sc.snippets.push_back(code);
    sc.fixture["responses"].push_back(
        {{"key", nullptr}, {"text", "1. declare counters\n2. repeat: emit nop\n3. return 0"}});
    sc.fixture["responses"].push_back({{"key", nullptr}, {"text", "```c\n" + code + "```\n"}});
  }
  return sc;
}

}  // namespace chiploop::testkit
