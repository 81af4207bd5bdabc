// Acceptance gate: one [PASS]/[FAIL]/[SKIP] line per criterion.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "chiploop/error.hpp"
#include "chiploop/evalharness.hpp"
#include "chiploop/levenshtein.hpp"
#include "chiploop/optimizer.hpp"
#include "chiploop/process.hpp"
#include "chiploop/treesearch.hpp"
#include "support/support.hpp"

using namespace chiploop;
using nlohmann::json;
namespace fs = std::filesystem;
using Clk = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kC2MaxSeconds = 30.0;
constexpr std::size_t kC3Pairs = 1000;
constexpr std::size_t kC3MaxLen = 64;
constexpr int kC4TimeoutSeconds = 2;
constexpr std::size_t kC5Shuffles = 100;
constexpr double kC6MaxSeconds = 10.0;
constexpr std::size_t kC7Seeds = 200;
constexpr std::size_t kC7MinCompleted = 50;
constexpr std::size_t kC8Iterations = 200;
constexpr double kC8MaxSeconds = 60.0;
constexpr std::size_t kC9Iterations = 40;

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }

double seconds_since(Clk::time_point t) {
  return std::chrono::duration<double>(Clk::now() - t).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

Outcome c2_levenshtein_oracle() {
  std::vector<std::string> words{""};
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].size() == 5) continue;
    for (char c : {'a', 'b', 'c'}) words.push_back(words[i] + c);
  }
  const auto start = Clk::now();
  std::size_t pairs = 0, mismatches = 0;
  for (const auto& a : words) {
    for (const auto& b : words) {
      ++pairs;
      if (levenshtein(a, b) != testkit::naive_levenshtein(a, b)) ++mismatches;
    }
  }
  const double secs = seconds_since(start);
  const std::string d = std::to_string(words.size()) + " strings, " + std::to_string(pairs) +
                        " pairs, " + std::to_string(mismatches) + " mismatches, " + fmt(secs) + " s";
  if (words.size() != 364) return fail("expected 364 strings; " + d);
  return mismatches == 0 && secs < kC2MaxSeconds ? pass(d) : fail(d);
}

Outcome c3_metric_properties() {
  std::mt19937_64 gen(20240601);
  auto rand_str = [&] {
    std::string s(gen() % (kC3MaxLen + 1), ' ');
    for (auto& c : s) c = static_cast<char>('a' + gen() % 4);
    return s;
  };
  std::size_t violations = 0;
  for (std::size_t i = 0; i < kC3Pairs; ++i) {
    const auto a = rand_str(), b = rand_str(), c = rand_str();
    const auto ab = levenshtein(a, b);
    const std::size_t len_gap = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
    if (levenshtein(a, a) != 0) ++violations;
    if (ab != levenshtein(b, a)) ++violations;
    if (levenshtein(a, c) > ab + levenshtein(b, c)) ++violations;
    if (ab < len_gap) ++violations;
  }
  const std::string d = std::to_string(kC3Pairs) + " seeded pairs, " + std::to_string(violations) + " violations";
  return violations == 0 ? pass(d) : fail(d);
}

Outcome c4_zero_rule() {
  testkit::TempDir dir;
  struct Case {
    const char* name;
    std::string source;
    EvalStatus expect;
  };
  const std::vector<Case> cases{
      {"compile_error", "module m;\nSYNTAX_ERROR\nendmodule\n", EvalStatus::compile_error},
      {"runtime_exception", "// @pass 3/3\n// @crash\nmodule m; endmodule\n", EvalStatus::runtime_exception},
      {"timeout", "// @pass 3/3\n// @hang\nmodule m; endmodule\n", EvalStatus::timeout},
  };
  std::ostringstream d;
  bool ok = true;
  for (const auto& c : cases) {
    CodeCandidate cand;
    cand.id = c.name;
    cand.source = c.source;
    const auto r = score_candidate(cand, testkit::fake_pass_adapter(kC4TimeoutSeconds), dir / c.name);
    const bool good = r.status == c.expect && r.score == 0.0;
    ok = ok && good;
    d << c.name << "->" << to_string(r.status) << " score=" << r.score << "; ";
  }
  return ok ? pass(d.str()) : fail(d.str());
}

Outcome c5_pass_fraction() {
  std::ostringstream d;
  bool ok = true;
  for (const auto& f : testkit::grammar_fixtures()) {
    if (f.expect_no_testcases) {
      try {
        parse_pass_fraction(f.text);
        ok = false;
        d << f.name << ": no error; ";
      } catch (const Error& e) {
        ok = ok && e.code() == ErrorCode::no_testcases;
        d << f.name << ": " << to_string(e.code()) << "; ";
      }
      continue;
    }
    const auto r = parse_pass_fraction(f.text);
    const double want = static_cast<double>(f.pass) / static_cast<double>(f.total);
    ok = ok && r.pass_count == f.pass && r.total_count == f.total && r.fraction == want;
    d << f.name << ": (" << r.pass_count << "," << r.total_count << ") ; ";
  }
  std::mt19937_64 gen(77);
  std::size_t bad = 0;
  for (std::size_t round = 0; round < kC5Shuffles; ++round) {
    std::vector<std::string> lines;
    std::size_t pass_n = 0, total_n = 1 + gen() % 30;
    for (std::size_t i = 1; i <= total_n; ++i) {
      const bool p = gen() % 2;
      pass_n += p;
      lines.push_back("TESTCASE " + std::to_string(i) + (p ? ": PASS" : ": FAIL"));
    }
    for (int i = 0; i < 5; ++i) lines.push_back("noise " + std::to_string(gen() % 100));
    const auto reference = parse_pass_fraction([&] {
      std::string s;
      for (const auto& l : lines) s += l + "\n";
      return s;
    }());
    std::shuffle(lines.begin(), lines.end(), gen);
    std::string shuffled;
    for (const auto& l : lines) shuffled += l + "\n";
    const auto r = parse_pass_fraction(shuffled);
    if (r.pass_count != reference.pass_count || r.total_count != reference.total_count ||
        r.pass_count != pass_n || r.total_count != total_n) {
      ++bad;
    }
  }
  d << kC5Shuffles << " shuffles, " << bad << " mismatches";
  return ok && bad == 0 ? pass(d.str()) : fail(d.str());
}

Outcome c6_tree_end_to_end() {
  testkit::TempDir dir;
  const auto start = Clk::now();
  const auto fixture = json::parse(testkit::slurp(testkit::source_dir() / "demo/generate/fixture.json"));
  auto mock = MockBackend::from_json(fixture);
  ToolEvaluator ev(testkit::fake_pass_adapter());
  TreeSearchConfig cfg;
  cfg.k = 3;
  cfg.d = 3;
  cfg.target_pass = 1.0;
  TreeSearch ts(*mock, ev, cfg, PromptSettings{}, ExtractionPolicy{}, Language::verilog, dir.path());
  const auto trace = ts.run(testkit::slurp(testkit::source_dir() / "demo/generate/spec.txt"));
  const double secs = seconds_since(start);
  // Hand-traced winner: depth-0 best d0-s2 (6/10), then d1-s1 passes 10/10.
  const bool ok = trace.best().score() == 1.0 && trace.stop_reason == TreeStopReason::target_reached &&
                  trace.llm_calls == 2 * cfg.k && trace.best_id == "d1-s1" &&
                  trace.best().parent_id == "d0-s2" && secs < kC6MaxSeconds;
  const std::string d = "best=" + trace.best_id + " score=" + fmt(trace.best().score()) +
                        " stop=" + std::string(to_string(trace.stop_reason)) +
                        " llm_calls=" + std::to_string(trace.llm_calls) + " (2k=" +
                        std::to_string(2 * cfg.k) + ") " + fmt(secs) + " s";
  return ok ? pass(d) : fail(d);
}

Outcome c7_tree_properties() {
  std::size_t completed = 0;
  std::string first_violation;
  std::size_t violations = 0;
  for (std::uint64_t seed = 1; seed <= kC7Seeds; ++seed) {
    const auto r = testkit::check_tree_scenario(seed);
    completed += r.completed;
    if (!r.violation.empty()) {
      ++violations;
      if (first_violation.empty()) first_violation = r.violation;
    }
  }
  std::string d = std::to_string(kC7Seeds) + " seeds, " + std::to_string(completed) +
                  " completed searches, " + std::to_string(violations) + " violations";
  if (!first_violation.empty()) d += " (" + first_violation + ")";
  return violations == 0 && completed >= kC7MinCompleted ? pass(d) : fail(d);
}

Outcome c8_optimizer_end_to_end() {
  const auto sc = testkit::nop_scenario(kC8Iterations, 8);
  // Oracle: direct token count over the scripted snippets and seeds.
  std::size_t expected = 0;
  for (const auto& s : sc.seeds) expected = std::max(expected, testkit::regex_nop_count(s));
  for (const auto& s : sc.snippets) {
    if (s.find("SYNTAX_ERROR") == std::string::npos) expected = std::max(expected, testkit::regex_nop_count(s));
  }

  testkit::TempDir dir;
  auto mock = MockBackend::from_json(sc.fixture);
  ToolEvaluator ev(testkit::fake_nop_adapter());
  OptimizerConfig cfg;
  cfg.n_examples = 3;
  cfg.pool_capacity = 8;
  cfg.diversity_min = 0.1;
  cfg.stop_max_snippets = kC8Iterations;
  cfg.rng_seed = 42;
  SteppingClock clock;
  PromptSettings prompts;
  prompts.score_unit = "nops";
  PoolOptimizer opt(*mock, ev, cfg, prompts, ExtractionPolicy("c"), Language::c, dir.path(), clock);

  double last_best = -1.0;
  std::size_t monotone_bad = 0, diversity_bad = 0, temp_bad = 0, accepted = 0;
  opt.set_observer([&](const ordered_json& rec, const PoolState& st) {
    if (st.best_score() < last_best) ++monotone_bad;
    last_best = st.best_score();
    if (rec["type"] != "iteration") return;
    if (st.current_temp < cfg.temp_min || st.current_temp > cfg.temp_max) ++temp_bad;
    if (rec["decision"] != "accepted") return;
    ++accepted;
    for (std::size_t i = 0; i < st.entries.size(); ++i) {
      for (std::size_t j = i + 1; j < st.entries.size(); ++j) {
        if (st.entries[i].seed || st.entries[j].seed) continue;
        if (norm_distance(st.entries[i].stripped, st.entries[j].stripped) < cfg.diversity_min) ++diversity_bad;
      }
    }
  });
  const auto start = Clk::now();
  const auto result = opt.run(sc.seeds, "Maximise the number of nop instructions.");
  const double secs = seconds_since(start);
  const bool ok = result.iterations == kC8Iterations && secs < kC8MaxSeconds && monotone_bad == 0 &&
                  diversity_bad == 0 && temp_bad == 0 &&
                  result.best.score() == static_cast<double>(expected);
  std::ostringstream d;
  d << result.iterations << " iterations in " << fmt(secs) << " s, best=" << result.best.score()
    << " oracle=" << expected << ", accepted=" << accepted << ", violations: monotone=" << monotone_bad
    << " diversity=" << diversity_bad << " temperature=" << temp_bad;
  return ok ? pass(d.str()) : fail(d.str());
}

Outcome c9_replay() {
  testkit::TempDir dir;
  const auto sc = testkit::nop_scenario(kC9Iterations, 99);
  testkit::spit(dir / "seeds" / "s0.c", sc.seeds[0]);
  testkit::spit(dir / "seeds" / "s1.c", sc.seeds[1]);
  testkit::spit(dir / "goal.txt", "Maximise the number of nop instructions.\n");
  testkit::spit(dir / "fixture.json", sc.fixture.dump());
  json cfg{{"language", "c"},
           {"backend", {{"kind", "mock"}, {"fixture", "fixture.json"}}},
           {"adapter", testkit::fake_nop_adapter().to_json()},
           {"opt", {{"stop_max_snippets", kC9Iterations}, {"rng_seed", 5}, {"pool_capacity", 6}, {"n_examples", 2}}},
           {"paths", {{"seeds", "seeds"}, {"goal", "goal.txt"}}}};
  testkit::spit(dir / "config.json", cfg.dump(2));
  const auto config = (dir / "config.json").string();
  const auto a = testkit::run_cli({"optimize", "--config", config, "--log", (dir / "a.jsonl").string()});
  const auto b = testkit::run_cli({"optimize", "--config", config, "--log", (dir / "b.jsonl").string()});
  if (a.exit_code != 0 || b.exit_code != 0) return fail("optimize failed: " + a.err + b.err);
  const std::string log_a = testkit::slurp(dir / "a.jsonl");
  const bool identical = !log_a.empty() && log_a == testkit::slurp(dir / "b.jsonl");
  const auto replay = testkit::run_cli({"replay", (dir / "a.jsonl").string()});

  // Single-byte mutation inside a later record.
  std::string mutated = log_a;
  const auto pos = mutated.find("\"elapsed_ms\":", mutated.size() / 2);
  mutated[pos + 13] = mutated[pos + 13] == '7' ? '8' : '7';
  fs::copy_file(dir / "a.jsonl.config.json", dir / "m.jsonl.config.json");
  testkit::spit(dir / "m.jsonl", mutated);
  const auto mutated_replay = testkit::run_cli({"replay", (dir / "m.jsonl").string()});

  std::ostringstream d;
  d << "identical=" << (identical ? "yes" : "no") << " (" << log_a.size() << " bytes), replay exit "
    << replay.exit_code << ", mutated replay exit " << mutated_replay.exit_code;
  return identical && replay.exit_code == 0 && mutated_replay.exit_code == 3 ? pass(d.str()) : fail(d.str());
}

bool on_path(const std::string& tool) {
  try {
    run_process({tool, "--version"}, {});
    return true;
  } catch (const Error&) {
    return false;
  }
}

Outcome c10_simulator_smoke() {
  if (!on_path("verilator-cli")) return {Verdict::skip, "verilator-cli not on PATH"};
  const auto demo = testkit::source_dir() / "demo" / "verilator";
  const auto config = (demo / "config.json").string();
  const auto good = testkit::run_cli({"eval", (demo / "shift_reg.v").string(), "--config", config});
  const auto bad = testkit::run_cli({"eval", (demo / "shift_reg_broken.v").string(), "--config", config});
  if (good.exit_code != 0 || bad.exit_code != 0) return fail("eval failed: " + good.err + bad.err);
  const auto gj = json::parse(good.out), bj = json::parse(bad.out);
  fs::remove_all(gj.value("workdir", std::string()));
  fs::remove_all(bj.value("workdir", std::string()));
  const bool ok = gj["score"] == 1.0 && gj["status"] == "evaluated" && bj["score"] == 0.0 &&
                  bj["status"] == "compile_error";
  std::ostringstream d;
  d << "verilator: good -> " << gj["status"].get<std::string>() << " score=" << gj["score"].dump()
    << " (" << gj["pass_count"].dump() << "/" << gj["total_count"].dump() << "), broken -> "
    << bj["status"].get<std::string>() << " score=" << bj["score"].dump();
  return ok ? pass(d.str()) : fail(d.str());
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"C2", "levenshtein DP equals recursive oracle", c2_levenshtein_oracle},
      {"C3", "levenshtein metric properties", c3_metric_properties},
      {"C4", "zero-score rule", c4_zero_rule},
      {"C5", "pass-fraction parsing", c5_pass_fraction},
      {"C6", "tree search end-to-end", c6_tree_end_to_end},
      {"C7", "tree search budget and global best", c7_tree_properties},
      {"C8", "optimizer end-to-end", c8_optimizer_end_to_end},
      {"C9", "deterministic replay", c9_replay},
      {"C10", "simulator integration smoke", c10_simulator_smoke},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::pass ? "[PASS]" : o.verdict == Verdict::fail ? "[FAIL]" : "[SKIP]";
    failures += o.verdict == Verdict::fail;
    std::cout << tag << " " << c.id << " " << c.title << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
