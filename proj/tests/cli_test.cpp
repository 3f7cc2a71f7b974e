#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "routegame/cli.hpp"

using namespace routegame;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("routegame_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Drops the header's timestamp.
std::string without_header(const std::string& text) { return text.substr(text.find('\n') + 1); }

// A hand-built log where every trial repeats `counts` for `rounds` rounds.
void write_constant_log(const fs::path& path, const std::string& game, std::vector<Cost> counts,
                        std::size_t trials, int rounds) {
  ExperimentConfig c;
  c.game = game;
  c.trial.network = canonical_game(game);
  c.trial.agent.kind = AgentKind::BestResponse;
  c.trial.rounds = rounds;
  c.trials = trials;
  RunLogWriter w(path, c, "t");
  for (std::size_t i = 0; i < trials; ++i) {
    TrialResult r;
    r.config = c.trial;
    r.config.seed = i;
    r.config.trial_id = "trial-" + std::to_string(i);
    for (int t = 1; t <= rounds; ++t) {
      r.history.append(evaluate_round(c.trial.network, t, profile_from_counts(counts)));
      w.write_round(r.config, r.history.back());
    }
    r.switch_counts = switch_counts(r.history);
    w.write_trial_end(r);
  }
}

}  // namespace

TEST_CASE("run writes a deterministic log") {
  const auto d = fresh_dir("run");
  const auto a = cli({"run", "--agent", "mwu", "--game", "A", "--trials", "4", "--rounds", "10",
                      "--seed", "9", "--out", (d / "x").string()});
  REQUIRE(a.code == kExitOk);
  CHECK(a.out.find("O-L-D:") != std::string::npos);
  const auto b = cli({"run", "--agent", "mwu", "--game", "A", "--trials", "4", "--rounds", "10",
                      "--seed", "9", "--out", (d / "y").string()});
  REQUIRE(b.code == kExitOk);
  const auto x = slurp(d / "x" / kRunLogFile);
  CHECK(without_header(x) == without_header(slurp(d / "y" / kRunLogFile)));

  const auto lines = lines_of(x);
  CHECK(lines.size() == 1 + 4 * 10 + 4);
  int footers = 0;
  for (const auto& l : lines)
    if (nlohmann::json::parse(l)["type"] == "trial_end") ++footers;
  CHECK(footers == 4);
  CHECK(nlohmann::json::parse(lines[0])["schema_version"] == kRunLogSchemaVersion);

  // Parallel trials carry the same content.
  const auto p = cli({"run", "--agent", "mwu", "--game", "A", "--trials", "4", "--rounds", "10",
                      "--seed", "9", "--workers", "3", "--out", (d / "z").string()});
  REQUIRE(p.code == kExitOk);
  const auto lx = read_runlog(d / "x"), lz = read_runlog(d / "z");
  CHECK(lx.trials == lz.trials);
}

TEST_CASE("run with a config file and flag overrides") {
  const auto d = fresh_dir("config");
  std::ofstream(d / "c.toml") << "game = \"B\"\nagent = \"exp3\"\nrounds = 5\ntrials = 2\n";
  const auto r = cli({"run", "--config", (d / "c.toml").string(), "--rounds", "3", "--out",
                      (d / "o").string()});
  REQUIRE(r.code == kExitOk);
  const auto log = read_runlog(d / "o");
  CHECK(log.config.game == "B");
  CHECK(log.trials.size() == 2);
  CHECK(log.trials[0].history.size() == 3);
}

TEST_CASE("usage errors exit 2") {
  const auto d = fresh_dir("usage");
  std::ofstream(d / "bad.toml") << "rounds = \"many\"\n";
  auto r = cli({"run", "--config", (d / "bad.toml").string(), "--out", (d / "o").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("bad.toml:1:") != std::string::npos);
  CHECK(cli({"run", "--game", "Z", "--out", (d / "o").string()}).code == kExitUsage);
  CHECK(cli({"run", "--agent", "llm", "--out", (d / "o").string()}).code == kExitUsage);
  CHECK(cli({"run", "--bogus"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"analyze", (d / "missing").string()}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("list representations") {
  const auto r = cli({"list-representations"});
  CHECK(r.code == kExitOk);
  for (const auto& axes : ReprAxes::all()) CHECK(r.out.find(axes.code()) != std::string::npos);
  CHECK(lines_of(r.out).size() == 9);
}

TEST_CASE("analyze writes every artifact") {
  const auto d = fresh_dir("analyze");
  REQUIRE(cli({"run", "--agent", "exp3", "--game", "A", "--trials", "3", "--rounds", "8", "--out",
               (d / "a").string()}).code == kExitOk);
  REQUIRE(cli({"run", "--agent", "exp3", "--game", "B", "--trials", "3", "--rounds", "8", "--out",
               (d / "b").string()}).code == kExitOk);
  const auto r = cli({"analyze", (d / "a").string(), (d / "b" / kRunLogFile).string(), "--out",
                      (d / "report").string(), "--heatmap"});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"table1.csv", "trajectories.csv", "trajectories_by_trial.csv", "tau.csv",
                        "tau_summary.csv", "summary.json", "gameA_focal.svg", "gameB_focal.svg",
                        "gameB_deviation_heatmap.svg"})
    CHECK_MESSAGE(fs::exists(d / "report" / f), f);

  const auto table = lines_of(slurp(d / "report" / "table1.csv"));
  REQUIRE(table.size() == 2);
  CHECK(table[0].rfind("label,A:O-L-D,A:O-L-D se,A:O-L-D sd,A:O-R-D", 0) == 0);
  CHECK(table[0].find("B:O-L-R-D sd") != std::string::npos);
  CHECK(table[1].rfind("EXP3,", 0) == 0);

  const auto svg = slurp(d / "report" / "gameA_focal.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(d / "report" / "summary.json")).is_structured());

  CHECK(cli({"analyze", (d / "a").string(), "--out", (d / "plain").string(), "--no-svg"}).code ==
        kExitOk);
  CHECK_FALSE(fs::exists(d / "plain" / "gameA_focal.svg"));
}

TEST_CASE("analyze on a pure equilibrium") {
  const auto d = fresh_dir("equilibrium");
  write_constant_log(d / "eq" / kRunLogFile, "B", {0, 0, 18}, 2, 10);
  REQUIRE(cli({"analyze", (d / "eq").string(), "--out", (d / "r").string(), "--no-svg"}).code ==
          kExitOk);
  const auto table = lines_of(slurp(d / "r" / "table1.csv"));
  REQUIRE(table.size() == 2);
  CHECK(table[1] == "BEST_RESPONSE,0.00,0.00,0.00,0.00,0.00,0.00,18.00,0.00,0.00");
  const auto tau = lines_of(slurp(d / "r" / "tau.csv"));
  REQUIRE(tau.size() == 3);
  CHECK(tau[1] == "BEST_RESPONSE,B,trial-0,undefined");
  const auto summary = lines_of(slurp(d / "r" / "tau_summary.csv"));
  CHECK(summary[1] == "BEST_RESPONSE,B,2,0,2,");
}

TEST_CASE("replay of algorithmic trials") {
  const auto d = fresh_dir("replay");
  REQUIRE(cli({"run", "--agent", "exp3", "--game", "B", "--trials", "3", "--rounds", "6", "--out",
               (d / "r").string()}).code == kExitOk);
  auto r = cli({"replay", (d / "r").string()});
  CHECK(r.code == kExitOk);
  CHECK(lines_of(r.out).size() == 3);
  CHECK(cli({"replay", (d / "r").string(), "--trial", "trial-2"}).code == kExitOk);
  CHECK(cli({"replay", (d / "r").string(), "--trial", "trial-9"}).code == kExitUsage);

  // Tamper with one recorded choice.
  auto text = slurp(d / "r" / kRunLogFile);
  auto lines = lines_of(text);
  auto j = nlohmann::ordered_json::parse(lines[3]);
  REQUIRE(j["type"] == "round");
  const int agent = 5;
  const auto old = j["choices"][agent].get<int>();
  j["choices"][agent] = (old + 1) % 3;
  lines[3] = j.dump();
  std::ofstream out(d / "r" / kRunLogFile, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
  out.close();
  const auto log = read_runlog(d / "r");
  const auto& trial = log.trials[static_cast<std::size_t>(j["trial"].get<int>())];
  const auto outcome = replay_trial(log, trial);
  CHECK_FALSE(outcome.match);
  CHECK(outcome.round == j["round"].get<int>());
  CHECK(outcome.agent == AgentIndex(agent));
  CHECK(cli({"replay", (d / "r").string()}).code == kExitDivergence);
}

TEST_CASE("replay of llm trials from transcripts") {
  const auto d = fresh_dir("llm");
  std::ofstream(d / "c.toml") << R"(
agent = "llm"
representation = "S-RE"
agents = 4
rounds = 3
trials = 2
[backend]
kind = "scripted"
responses = [
  '{"route": "O-L-D"}', '{"route": "O-R-D"}', '{"route": "O-L-D"}', '{"route": "O-R-D"}',
  '{"route": "O-L-D"}', '{"route": "O-L-D"}', '{"route": "O-R-D"}', '{"route": "O-R-D"}',
  'I refuse', '{"route": "O-L-D"}', '{"route": "O-R-D"}', '{"route": "O-R-D"}', '{"route": "O-L-D"}',
  '{"route": "O-L-D"}', '{"route": "O-R-D"}', '{"route": "O-L-D"}', '{"route": "O-R-D"}',
  '{"route": "O-L-D"}', '{"route": "O-L-D"}', '{"route": "O-R-D"}', '{"route": "O-R-D"}',
  '{"route": "O-L-D"}', '{"route": "O-R-D"}', '{"route": "O-R-D"}', '{"route": "O-L-D"}'
]
)";
  REQUIRE(cli({"run", "--config", (d / "c.toml").string(), "--out", (d / "r").string()}).code ==
          kExitOk);
  const auto t0 = d / "r" / kTranscriptDir / "trial-0.jsonl";
  REQUIRE(fs::exists(t0));
  CHECK(cli({"replay", (d / "r").string()}).code == kExitOk);

  // The same log replayed through the replay backend reproduces it too.
  const auto again = cli({"run", "--config", (d / "c.toml").string(), "--backend", "replay",
                          "--replay-dir", (d / "r" / kTranscriptDir).string(), "--out",
                          (d / "again").string()});
  REQUIRE(again.code == kExitOk);
  CHECK(read_runlog(d / "again").trials[1].history == read_runlog(d / "r").trials[1].history);

  // Edit one stored answer: the replay diverges at that decision.
  auto text = slurp(t0);
  auto lines = lines_of(text);
  auto e = nlohmann::ordered_json::parse(lines[2]);
  const std::string before = e["response"];
  e["response"] = before.find("O-L-D") != std::string::npos ? "{\"route\": \"O-R-D\"}"
                                                            : "{\"route\": \"O-L-D\"}";
  lines[2] = e.dump();
  {
    std::ofstream out(t0, std::ios::binary);
    for (const auto& l : lines) out << l << '\n';
  }
  const auto div = cli({"replay", (d / "r").string(), "--trial", "trial-0"});
  CHECK(div.code == kExitDivergence);
  CHECK(div.err.find("agent " + std::to_string(e["agent"].get<int>())) != std::string::npos);

  fs::remove(t0);
  const auto miss = cli({"replay", (d / "r").string(), "--trial", "trial-0"});
  CHECK(miss.code == kExitReplayMiss);
  CHECK(cli({"replay", (d / "r").string(), "--trial", "trial-1"}).code == kExitOk);
  CHECK(cli({"run", "--config", (d / "c.toml").string(), "--backend", "replay", "--replay-dir",
             (d / "nowhere").string(), "--out", (d / "x").string()}).code == kExitReplayMiss);
}
