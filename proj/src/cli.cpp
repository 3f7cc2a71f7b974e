#include "routegame/cli.hpp"

#include <iomanip>

#include <CLI11.hpp>

#include "routegame/report.hpp"

namespace routegame {

namespace {

struct RunFlags {
  std::string config;
  std::optional<std::string> game;
  std::optional<std::string> repr;
  std::optional<std::string> agent;
  std::optional<std::size_t> trials;
  std::optional<int> rounds;
  std::optional<std::size_t> agents;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> replay_dir;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
};

ExperimentConfig build_config(const RunFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config);
  if (f.game) {
    try {
      cfg.trial.network = canonical_game(*f.game);
    } catch (const NetworkError& e) {
      throw ConfigError(std::string("--game: ") + e.what());
    }
    cfg.game = *f.game;
  }
  try {
    if (f.agent) cfg.trial.agent.kind = parse_agent_kind(*f.agent);
    if (f.repr) cfg.trial.representation = ReprAxes::parse(*f.repr);
    if (f.backend) cfg.backend.kind = parse_backend_kind(*f.backend);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (f.replay_dir) cfg.backend.replay_dir = *f.replay_dir;
  if (f.trials) cfg.trials = *f.trials;
  if (f.rounds) cfg.trial.rounds = *f.rounds;
  if (f.agents) cfg.trial.agents = *f.agents;
  if (f.seed) cfg.seed_base = *f.seed;
  if (f.out) cfg.output = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

int do_run(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  std::shared_ptr<Backend> backend;
  try {
    cfg = build_config(flags);
    if (cfg.trial.agent.kind == AgentKind::Llm) backend = make_backend(cfg);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ReplayMiss& e) {
    err << "replay miss: " << e.what() << "\n";
    return kExitReplayMiss;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const auto path = cfg.output / kRunLogFile;
  RunLogWriter writer(path, cfg, utc_timestamp());
  const auto results =
      run_experiment(cfg.trial, cfg.trials, cfg.seed_base,
                     default_policy_factory(backend), cfg.workers, writer.observer());

  std::size_t failed = 0;
  for (const auto& r : results) {
    if (r.ok) continue;
    ++failed;
    err << r.config.trial_id << " failed: " << r.error << "\n";
  }
  out << experiment_label(cfg.trial) << " on game " << cfg.trial.network.name() << ": "
      << results.size() - failed << "/" << results.size() << " trials ok, log "
      << path.string() << "\n";
  if (failed == results.size()) return kExitTrialFailed;
  try {
    const auto summary = summarize_results(results);
    out << std::fixed << std::setprecision(2);
    for (std::size_t j = 0; j < summary.route_names.size(); ++j)
      out << "  " << summary.route_names[j] << ": " << summary.route_means[j] << "\n";
  } catch (const std::exception&) {
  }
  return failed ? kExitTrialFailed : kExitOk;
}

int do_analyze(const std::vector<std::string>& inputs, const std::string& dir, bool svg,
               bool heatmap, std::ostream& out, std::ostream& err) {
  std::vector<RunLog> logs;
  try {
    for (const auto& in : inputs) {
      logs.push_back(read_runlog(in));
      if (logs.back().truncated)
        err << "warning: " << logs.back().path.string()
            << " ends in a partial line; it was skipped\n";
    }
    const auto files = write_report(dir, logs, {svg, heatmap});
    for (const auto& f : files) out << f.string() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int do_replay(const std::string& input, const std::optional<std::string>& trial_id,
              const std::string& transcripts, std::ostream& out, std::ostream& err) {
  RunLog log;
  try {
    log = read_runlog(input);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<const TrialResult*> targets;
  for (const auto& t : log.trials)
    if (!trial_id || t.config.trial_id == *trial_id) targets.push_back(&t);
  if (targets.empty()) {
    err << "error: no trial " << (trial_id ? "'" + *trial_id + "' " : std::string())
        << "in " << log.path.string() << "\n";
    return kExitUsage;
  }
  int code = kExitOk;
  for (const TrialResult* t : targets) {
    const ReplayOutcome r = replay_trial(log, *t, transcripts);
    if (r.match) {
      out << t->config.trial_id << ": match (" << t->history.size() << " rounds)\n";
      continue;
    }
    if (r.replay_miss) {
      err << t->config.trial_id << ": replay miss: " << r.message << "\n";
      code = std::max<int>(code, kExitReplayMiss);
      continue;
    }
    err << t->config.trial_id << ": divergence";
    if (r.round) err << " at round " << *r.round;
    if (r.agent) err << ", agent " << *r.agent;
    err << ": " << r.message << "\n";
    if (code != kExitReplayMiss) code = kExitDivergence;
  }
  return code;
}

void list_representations(std::ostream& out) {
  out << "code  style      reward  actions\n";
  for (const auto& axes : ReprAxes::all())
    out << std::left << std::setw(6) << axes.code() << std::setw(11)
        << to_string(axes.style) << std::setw(8) << to_string(axes.reward)
        << to_string(axes.action) << "\n";
}

}  // namespace

ReplayOutcome replay_trial(const RunLog& log, const TrialResult& recorded,
                           const std::filesystem::path& transcript_dir) {
  ReplayOutcome outcome;
  const TrialConfig& config = recorded.config;
  std::shared_ptr<Backend> backend;
  if (config.agent.kind == AgentKind::Llm) {
    const auto path = transcript_dir.empty()
                          ? transcript_path(log.path, config.trial_id)
                          : transcript_dir / (config.trial_id + ".jsonl");
    try {
      backend = std::make_shared<ReplayBackend>(Transcript::load_jsonl(path));
    } catch (const ReplayMiss& e) {
      outcome.match = false;
      outcome.replay_miss = true;
      outcome.message = e.what();
      return outcome;
    }
  }

  GameHistory replayed;
  TrialObserver observer;
  observer.on_round = [&](const TrialConfig&, const RoundRecord& r) { replayed.append(r); };
  std::string replay_error;
  std::optional<AgentIndex> fail_agent;
  std::optional<int> fail_round;
  try {
    run_trial(config, default_policy_factory(backend), observer);
  } catch (const PolicyFailure& e) {
    replay_error = e.what();
    fail_agent = e.agent();
    fail_round = e.round();
  } catch (const std::exception& e) {
    replay_error = e.what();
  }

  const auto& want = recorded.history.records();
  const auto& got = replayed.records();
  const std::size_t common = std::min(want.size(), got.size());
  for (std::size_t t = 0; t < common; ++t) {
    const auto& a = want[t].choices.choices;
    const auto& b = got[t].choices.choices;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
      if (i < a.size() && i < b.size() && a[i] == b[i]) continue;
      outcome.match = false;
      outcome.round = want[t].round;
      outcome.agent = i;
      outcome.message = "recorded route " +
                        (i < a.size() ? std::to_string(a[i]) : std::string("none")) +
                        ", replayed " +
                        (i < b.size() ? std::to_string(b[i]) : std::string("none"));
      return outcome;
    }
    if (!(want[t] == got[t])) {
      outcome.match = false;
      outcome.round = want[t].round;
      outcome.message = "same choices but different outcome record";
      return outcome;
    }
  }
  if (want.size() == got.size() && recorded.ok == replay_error.empty()) return outcome;

  outcome.match = false;
  outcome.round = static_cast<int>(common) + 1;
  if (!replay_error.empty()) {
    outcome.agent = fail_agent;
    if (fail_round) outcome.round = fail_round;
    outcome.message = "replay failed: " + replay_error;
  } else {
    outcome.message = "recorded trial " + (recorded.ok ? std::string("ended") : "failed: " + recorded.error) +
                      " after " + std::to_string(want.size()) + " rounds, replay ran " +
                      std::to_string(got.size());
  }
  return outcome;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Repeated routing games with learning and LLM agents", "routegame"};
  app.require_subcommand(1);

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Run an experiment and stream a RunLog");
  run->add_option("--config", flags.config, "TOML experiment config")->check(CLI::ExistingFile);
  run->add_option("--game", flags.game, "A or B");
  run->add_option("--repr", flags.repr, "state representation code, e.g. S-RO");
  run->add_option("--agent", flags.agent, "uniform, best_response, mwu, exp3 or llm");
  run->add_option("--trials", flags.trials, "number of trials");
  run->add_option("--rounds", flags.rounds, "rounds per trial");
  run->add_option("--agents", flags.agents, "agents per trial");
  run->add_option("--seed", flags.seed, "seed of trial 0; trial i uses seed + i");
  run->add_option("--backend", flags.backend, "live, replay or scripted");
  run->add_option("--replay-dir", flags.replay_dir, "transcripts for --backend replay");
  run->add_option("--out", flags.out, "output directory");
  run->add_option("--workers", flags.workers, "trials run in parallel");

  std::vector<std::string> inputs;
  std::string report_dir = "report";
  bool no_svg = false, heatmap = false;
  auto* analyze = app.add_subcommand("analyze", "Write CSV/JSON/SVG reports from RunLogs");
  analyze->add_option("runlogs", inputs, "RunLog files or run directories")->required();
  analyze->add_option("--out", report_dir, "report directory");
  analyze->add_flag("--no-svg", no_svg, "skip SVG charts");
  analyze->add_flag("--heatmap", heatmap, "also write deviation heatmaps");

  std::string replay_input;
  std::optional<std::string> replay_trial_id;
  std::string replay_transcripts;
  auto* replay = app.add_subcommand("replay", "Re-execute logged trials and compare decisions");
  replay->add_option("runlog", replay_input, "RunLog file or run directory")->required();
  replay->add_option("--trial", replay_trial_id, "trial id, e.g. trial-0 (default: all)");
  replay->add_option("--transcripts", replay_transcripts, "transcript directory override");

  auto* list = app.add_subcommand("list-representations", "Print the state representation codes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return do_run(flags, out, err);
    if (analyze->parsed()) return do_analyze(inputs, report_dir, !no_svg, heatmap, out, err);
    if (replay->parsed())
      return do_replay(replay_input, replay_trial_id, replay_transcripts, out, err);
    if (list->parsed()) {
      list_representations(out);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"routegame"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace routegame
