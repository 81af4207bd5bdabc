#include "chiploop/cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "chiploop/error.hpp"
#include "chiploop/jsonl.hpp"
#include "chiploop/optimizer.hpp"
#include "chiploop/treesearch.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace chiploop::cli {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

class SigintScope {
 public:
  SigintScope() {
    struct sigaction sa {};
    sa.sa_handler = on_sigint;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGINT, &sa, &previous_);
  }
  ~SigintScope() { sigaction(SIGINT, &previous_, nullptr); }

 private:
  struct sigaction previous_ {};
};

void require_file(const std::optional<fs::path>& p, std::string_view what) {
  if (!p) throw Error(ErrorCode::config_error, std::string(what) + " path is not configured");
  if (!fs::exists(*p)) {
    throw Error(ErrorCode::config_error, std::string(what) + " not found: " + p->string());
  }
}

fs::path make_temp_dir(std::string_view prefix) {
  std::string tmpl = (fs::temp_directory_path() / (std::string(prefix) + "XXXXXX")).string();
  if (!::mkdtemp(tmpl.data())) throw Error(ErrorCode::io_error, "cannot create temp directory");
  return tmpl;
}

// Fresh work root, snapshot and call log shared by generate and optimize.
std::shared_ptr<JsonlWriter> prepare_run(const RunConfig& cfg, std::string_view command) {
  fs::remove_all(cfg.work_root());
  fs::create_directories(cfg.work_root());
  json snapshot;
  snapshot["command"] = command;
  snapshot["config"] = cfg.to_json();
  write_file(cfg.snapshot_path(), snapshot.dump(2) + "\n");
  return std::make_shared<JsonlWriter>(cfg.call_log_path());
}

std::vector<std::string> read_seeds(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::config_error, "seeds is not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::config_error, "no seed files in " + dir.string());
  std::vector<std::string> seeds;
  for (const auto& f : files) seeds.push_back(read_file(f));
  return seeds;
}

int run_optimize(const RunConfig& cfg, std::ostream& err, const std::atomic<bool>* stop_flag,
                 std::optional<std::size_t> stop_at_iteration) {
  std::optional<PoolOptimizer> optimizer;
  std::unique_ptr<Backend> backend;
  std::unique_ptr<Clock> clock;
  std::optional<ToolEvaluator> evaluator;
  try {
    require_file(cfg.paths.seeds, "seeds");
    require_file(cfg.paths.goal, "goal");
    if (cfg.adapter.testbench) require_file(cfg.adapter.testbench, "testbench");
    const auto seeds = read_seeds(*cfg.paths.seeds);
    const auto goal = read_file(*cfg.paths.goal);
    evaluator.emplace(cfg.adapter);
    backend = cfg.make_backend();
    clock = cfg.make_clock();
    backend->attach_call_log(prepare_run(cfg, "optimize"));
    JsonlWriter log(cfg.log_path);

    optimizer.emplace(*backend, *evaluator, cfg.opt, cfg.prompt_settings(cfg.opt_sampling),
                      cfg.extraction, cfg.language, cfg.work_root(), *clock);
    optimizer->set_log(&log);
    // Replays of interrupted runs raise a private flag at the recorded iteration.
    std::atomic<bool> replay_stop{stop_at_iteration && *stop_at_iteration <= 1};
    if (stop_at_iteration) {
      optimizer->set_stop_flag(&replay_stop);
      optimizer->set_observer([&](const ordered_json& rec, const PoolState&) {
        if (rec.value("type", "") == "iteration" &&
            rec.value("iter", std::size_t{0}) + 1 >= *stop_at_iteration) {
          replay_stop.store(true);
        }
      });
    } else {
      optimizer->set_stop_flag(stop_flag);
    }

    const auto result = optimizer->run(seeds, goal);
    write_file(cfg.output_path(), result.best.source);
    err << "optimize: stop_reason=" << to_string(result.stop_reason)
        << " iterations=" << result.iterations << " best=" << result.best.id
        << " score=" << format_score(result.best.score()) << "\n"
        << "best source: " << cfg.output_path().string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    if (optimizer && optimizer->state().best) {
      write_file(cfg.output_path(), optimizer->state().best->source);
      err << "best-so-far written to " << cfg.output_path().string() << "\n";
    }
    err << "optimize failed: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace

RunConfig load_config(const CommonOptions& opts) {
  RunConfig cfg = RunConfig::load(opts.config);
  if (opts.log) cfg.log_path = fs::absolute(*opts.log);
  if (opts.workers) {
    cfg.workers = *opts.workers;
    cfg.tree.workers = *opts.workers;
  }
  if (opts.seed) {
    cfg.opt.rng_seed = *opts.seed;
    const auto& s = cfg.tree.sampling;
    cfg.tree.sampling = SamplingParams(s.temperature(), s.max_tokens(), s.top_p(), *opts.seed);
  }
  return cfg;
}

int cmd_generate(const RunConfig& cfg, std::ostream& err) {
  try {
    require_file(cfg.paths.spec, "spec");
    require_file(cfg.paths.testbench, "testbench");
    ToolEvaluator evaluator(cfg.adapter);
    auto backend = cfg.make_backend();
    backend->attach_call_log(prepare_run(cfg, "generate"));

    TreeSearchConfig tree = cfg.tree;
    tree.workers = std::max(tree.workers, cfg.workers);
    TreeSearch search(*backend, evaluator, tree, cfg.prompt_settings(tree.sampling),
                      cfg.extraction, cfg.language, cfg.work_root());
    const SearchTrace trace = search.run(read_file(*cfg.paths.spec));

    JsonlWriter log(cfg.log_path);
    write_trace_jsonl(trace, log);
    const auto& best = trace.best();
    write_file(cfg.output_path(), best.source);
    err << "generate: stop_reason=" << to_string(trace.stop_reason) << " best=" << best.id
        << " score=" << format_score(best.score()) << " llm_calls=" << trace.llm_calls << "\n"
        << "best source: " << cfg.output_path().string() << "\n";
    return best.score() >= tree.target_pass ? kExitOk : kExitBelowTarget;
  } catch (const Error& e) {
    err << "generate failed: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_optimize(const RunConfig& cfg, std::ostream& err, const std::atomic<bool>* stop_flag) {
  return run_optimize(cfg, err, stop_flag, std::nullopt);
}

int cmd_eval(const fs::path& source, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::exists(source)) throw Error(ErrorCode::config_error, "source not found: " + source.string());
    if (cfg.adapter.testbench) require_file(cfg.adapter.testbench, "testbench");
    ToolEvaluator evaluator(cfg.adapter);
    CodeCandidate candidate;
    candidate.id = "eval";
    candidate.source = read_file(source);
    candidate.language = source.extension() == ".c" ? Language::c
                         : source.extension() == ".v" || source.extension() == ".sv"
                             ? Language::verilog
                             : cfg.language;
    const fs::path workdir = make_temp_dir("chiploop-eval-");
    const auto report = evaluator.evaluate(candidate, workdir);
    auto j = report.to_json();
    j["workdir"] = workdir.string();
    out << j.dump(2) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "eval failed: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_replay(const fs::path& log, std::ostream& err) {
  try {
    const fs::path snapshot_file = fs::path(log.string() + ".config.json");
    if (!fs::exists(log)) throw Error(ErrorCode::config_error, "log not found: " + log.string());
    if (!fs::exists(snapshot_file)) {
      throw Error(ErrorCode::config_error, "config snapshot not found: " + snapshot_file.string());
    }
    const json snapshot = json::parse(read_file(snapshot_file));
    const std::string command = snapshot.at("command").get<std::string>();
    RunConfig cfg = RunConfig::from_json(snapshot.at("config"), "/");
    if (cfg.backend.kind != "mock") {
      err << "replay refused: the recorded run used the " << cfg.backend.kind
          << " backend; replay is mock-only\n";
      return kExitError;
    }

    const auto original = read_lines(log);
    // A run interrupted by the user is replayed up to the same iteration.
    std::optional<std::size_t> stop_at;
    bool complete = false;
    if (!original.empty()) {
      try {
        const auto last = json::parse(original.back());
        const auto type = last.value("type", "");
        complete = type == "stop" || type == "summary";
        if (type == "stop" && last.value("stop_reason", "") == "user_stop") {
          stop_at = last.value("iterations", std::size_t{0});
        }
      } catch (const json::exception&) {
      }
    }

    const fs::path tmp = make_temp_dir("chiploop-replay-");
    cfg.log_path = tmp / "replay.jsonl";
    cfg.paths.output = tmp / "best.out";
    std::ostringstream quiet;
    int rc = kExitError;
    if (command == "generate") {
      rc = cmd_generate(cfg, quiet);
    } else if (command == "optimize") {
      rc = run_optimize(cfg, quiet, nullptr, stop_at);
    } else {
      throw Error(ErrorCode::config_error, "unknown command in snapshot: " + command);
    }
    if (!fs::exists(cfg.log_path)) {
      err << "replay run failed (exit " << rc << "): " << quiet.str();
      fs::remove_all(tmp);
      return kExitDivergence;
    }
    auto regenerated = read_lines(cfg.log_path);
    const bool byte_equal = read_file(log) == read_file(cfg.log_path);
    fs::remove_all(tmp);
    if (!complete && regenerated.size() > original.size()) regenerated.resize(original.size());
    if (byte_equal || (!complete && regenerated == original)) {
      err << "replay: " << original.size() << " records match\n";
      return kExitOk;
    }
    std::size_t i = 0;
    while (i < original.size() && i < regenerated.size() && original[i] == regenerated[i]) ++i;
    err << "replay diverged at record " << (i + 1) << "\n";
    err << "  original:    " << (i < original.size() ? original[i] : "<end of log>") << "\n";
    err << "  regenerated: " << (i < regenerated.size() ? regenerated[i] : "<end of log>") << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    err << "replay failed: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitError;
  } catch (const json::exception& e) {
    err << "replay failed: bad snapshot: " << e.what() << "\n";
    return kExitError;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LLM-driven hardware code generation loops"};
  app.require_subcommand(1);

  auto add_common = [](CLI::App* sub, CommonOptions& opts, bool config_required) {
    auto* c = sub->add_option("--config", opts.config, "Run configuration (JSON)");
    if (config_required) c->required();
    sub->add_option("--log", opts.log, "Run log path (overrides log_path)");
    sub->add_option("--workers", opts.workers, "Parallel evaluations")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opts.seed, "Random seed override");
  };

  CommonOptions gen_opts, opt_opts, eval_opts, replay_opts;
  auto* gen = app.add_subcommand("generate", "Tree-search design generation");
  add_common(gen, gen_opts, true);
  auto* opt = app.add_subcommand("optimize", "Candidate-pool optimization loop");
  add_common(opt, opt_opts, true);
  auto* ev = app.add_subcommand("eval", "Evaluate one source file and print the report");
  add_common(ev, eval_opts, true);
  fs::path eval_source;
  ev->add_option("SOURCE", eval_source, "Source file to evaluate")->required();
  auto* rp = app.add_subcommand("replay", "Re-run a mock-backed log and compare byte-for-byte");
  add_common(rp, replay_opts, false);
  fs::path replay_log;
  rp->add_option("LOGFILE", replay_log, "Log produced by generate or optimize")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    if (*gen) return cmd_generate(load_config(gen_opts), err);
    if (*opt) {
      const RunConfig cfg = load_config(opt_opts);
      g_interrupted.store(false);
      SigintScope scope;
      return cmd_optimize(cfg, err, &g_interrupted);
    }
    if (*ev) return cmd_eval(eval_source, load_config(eval_opts), out, err);
    if (*rp) return cmd_replay(replay_opts.log.value_or(replay_log), err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace chiploop::cli
