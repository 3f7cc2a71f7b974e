#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "routegame/runlog.hpp"

using namespace routegame;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("routegame_runlog_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ExperimentConfig experiment(AgentKind kind, const std::string& game, std::size_t trials) {
  ExperimentConfig c;
  c.game = game;
  c.trial.network = canonical_game(game);
  c.trial.agent.kind = kind;
  c.trial.rounds = 12;
  c.trials = trials;
  c.seed_base = 500;
  return c;
}

std::vector<TrialResult> run_logged(const ExperimentConfig& c, const fs::path& path,
                                    const PolicyFactory& f = default_policy_factory(),
                                    unsigned workers = 1) {
  RunLogWriter w(path, c, "2026-01-01T00:00:00Z");
  return run_experiment(c.trial, c.trials, c.seed_base, f, workers, w.observer());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("network and config json round-trip") {
  for (const auto& net : {game_a(), game_b()}) CHECK(network_from_json(network_to_json(net)) == net);
  auto c = experiment(AgentKind::Exp3, "B", 4);
  c.trial.agent.eta = 0.3;
  c.backend.kind = BackendKind::Live;
  c.backend.live.api_key_env = "SOME_KEY";
  c.trial.llm.model = "m";
  const auto j = config_to_json(c);
  CHECK(j["backend"]["api_key_env"] == "SOME_KEY");
  CHECK_FALSE(j.contains("output"));
  const auto back = config_from_json(j);
  CHECK(back.trial == c.trial);
  CHECK(back.trials == 4);
  CHECK(back.seed_base == 500);
  CHECK(back.game == "B");
  CHECK(back.backend.kind == BackendKind::Live);
}

TEST_CASE("secrets never reach the log") {
  const auto dir = fresh_dir("secret");
  setenv("ROUTEGAME_SECRET_TEST", "sk-very-secret", 1);
  auto c = experiment(AgentKind::Mwu, "A", 1);
  c.backend.kind = BackendKind::Live;
  c.backend.live.api_key_env = "ROUTEGAME_SECRET_TEST";
  { RunLogWriter w(dir / "runlog.jsonl", c, "t"); }
  CHECK(slurp(dir / "runlog.jsonl").find("sk-very-secret") == std::string::npos);
  unsetenv("ROUTEGAME_SECRET_TEST");
}

TEST_CASE("run log round-trips trial results exactly") {
  for (auto kind : {AgentKind::Mwu, AgentKind::Exp3}) {
    for (const std::string game : {"A", "B"}) {
      const auto dir = fresh_dir("roundtrip");
      const auto c = experiment(kind, game, 5);
      const auto results = run_logged(c, dir / kRunLogFile);
      const auto log = read_runlog(dir);
      CHECK(log.schema_version == kRunLogSchemaVersion);
      CHECK(log.started_at == "2026-01-01T00:00:00Z");
      CHECK_FALSE(log.truncated);
      REQUIRE(log.trials.size() == results.size());
      for (std::size_t i = 0; i < results.size(); ++i) CHECK(log.trials[i] == results[i]);
    }
  }
}

TEST_CASE("parallel trials interleave but read back in order") {
  const auto dir = fresh_dir("parallel");
  const auto c = experiment(AgentKind::Uniform, "A", 8);
  const auto results = run_logged(c, dir / kRunLogFile, default_policy_factory(), 4);
  const auto log = read_runlog(dir / kRunLogFile);
  REQUIRE(log.trials.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(log.trials[i] == results[i]);
}

TEST_CASE("llm transcripts are stored beside the log") {
  const auto dir = fresh_dir("llm");
  auto c = experiment(AgentKind::Llm, "A", 2);
  c.trial.agents = 4;
  c.trial.rounds = 2;
  c.backend.kind = BackendKind::Scripted;
  std::vector<std::string> replies(16, "{\"route\": \"O-R-D\"}");
  const auto results =
      run_logged(c, dir / kRunLogFile, default_policy_factory(std::make_shared<ScriptedBackend>(replies)));
  REQUIRE_MESSAGE(results[0].ok, results[0].error);
  CHECK(fs::exists(dir / kTranscriptDir / "trial-0.jsonl"));
  CHECK(fs::exists(dir / kTranscriptDir / "trial-1.jsonl"));
  const auto log = read_runlog(dir);
  CHECK(log.trials[1] == results[1]);
  CHECK(log.trials[1].transcript.size() == 8);
}

TEST_CASE("a cut-off final line is tolerated") {
  const auto dir = fresh_dir("truncated");
  const auto c = experiment(AgentKind::Mwu, "A", 2);
  run_logged(c, dir / kRunLogFile);
  std::string text = slurp(dir / kRunLogFile);
  text.resize(text.size() - 20);  // inside the final footer
  std::ofstream(dir / kRunLogFile, std::ios::binary) << text;
  const auto log = read_runlog(dir);
  CHECK(log.truncated);
  REQUIRE(log.trials.size() == 2);
  CHECK(log.trials[0].ok);
  CHECK_FALSE(log.trials[1].ok);
  CHECK(log.trials[1].error == "incomplete");
  CHECK(log.trials[1].history.size() == 12);
}

TEST_CASE("malformed logs are rejected") {
  const auto dir = fresh_dir("bad");
  const auto c = experiment(AgentKind::Mwu, "A", 1);
  run_logged(c, dir / kRunLogFile);
  const std::string text = slurp(dir / kRunLogFile);

  SUBCASE("schema mismatch") {
    std::string bumped = text;
    bumped.replace(bumped.find("\"schema_version\":1"), 18, "\"schema_version\":2");
    std::ofstream(dir / kRunLogFile, std::ios::binary) << bumped;
    CHECK_THROWS_AS(read_runlog(dir), SchemaMismatch);
  }
  SUBCASE("garbage in the middle") {
    std::string broken = text;
    broken.insert(broken.find('\n') + 1, "not json\n");
    std::ofstream(dir / kRunLogFile, std::ios::binary) << broken;
    CHECK_THROWS_WITH_AS(read_runlog(dir), doctest::Contains(":2: malformed"), RunLogError);
  }
  SUBCASE("missing header") {
    std::ofstream(dir / kRunLogFile, std::ios::binary) << text.substr(text.find('\n') + 1);
    CHECK_THROWS_AS(read_runlog(dir), RunLogError);
  }
  SUBCASE("empty and missing files") {
    std::ofstream(dir / kRunLogFile, std::ios::binary) << "";
    CHECK_THROWS_AS(read_runlog(dir), RunLogError);
    CHECK_THROWS_AS(read_runlog(dir / "nope.jsonl"), RunLogError);
  }
}

TEST_CASE("utc timestamp shape") {
  const auto t = utc_timestamp();
  CHECK(t.size() == 20);
  CHECK(t.back() == 'Z');
  CHECK(t[10] == 'T');
}
