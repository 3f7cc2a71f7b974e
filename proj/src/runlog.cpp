#include "routegame/runlog.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>

namespace routegame {

using json = nlohmann::ordered_json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw RunLogError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw RunLogError(std::string("bad field '") + key + "': " + e.what());
  }
}

int trial_index(const TrialConfig& trial, std::uint64_t seed_base) {
  return static_cast<int>(trial.seed - seed_base);
}

}  // namespace

json network_to_json(const CongestionNetwork& network) {
  json edges = json::array();
  for (const auto& e : network.edges())
    edges.push_back({{"from", e.from}, {"to", e.to},
                     {"slope", e.cost.slope}, {"intercept", e.cost.intercept}});
  json routes = json::array();
  for (RouteIndex r = 0; r < network.route_count(); ++r)
    routes.push_back(network.route_nodes(r));
  return {{"name", network.name()},
          {"nodes", network.nodes()},
          {"edges", edges},
          {"routes", routes},
          {"endowment", network.endowment()},
          {"agents", network.default_agents()},
          {"origin", network.origin()},
          {"destination", network.destination()}};
}

CongestionNetwork network_from_json(const json& j) {
  std::vector<Edge> edges;
  for (const auto& e : field<json>(j, "edges"))
    edges.push_back({field<std::string>(e, "from"), field<std::string>(e, "to"),
                     {field<Cost>(e, "slope"), field<Cost>(e, "intercept")}});
  try {
    return CongestionNetwork(
        field<std::string>(j, "name"), field<std::vector<std::string>>(j, "nodes"),
        std::move(edges), field<std::vector<std::vector<std::string>>>(j, "routes"),
        field<Cost>(j, "endowment"), field<std::size_t>(j, "agents"),
        field<std::string>(j, "origin"), field<std::string>(j, "destination"));
  } catch (const NetworkError& e) {
    throw RunLogError(std::string("bad network: ") + e.what());
  }
}

json config_to_json(const ExperimentConfig& config) {
  const TrialConfig& t = config.trial;
  json backend = {{"kind", to_string(config.backend.kind)}};
  if (config.backend.kind != BackendKind::None) {
    backend["model"] = t.llm.model;
    backend["temperature"] = t.llm.temperature;
    backend["parse_attempts"] = t.llm.max_attempts;
  }
  if (config.backend.kind == BackendKind::Live) {
    backend["endpoint"] = config.backend.live.endpoint;
    backend["api_key_env"] = config.backend.live.api_key_env;
    backend["rate_limit"] = config.backend.live.rate_limit;
  }
  if (config.backend.kind == BackendKind::Replay)
    backend["replay_dir"] = config.backend.replay_dir.generic_string();
  return {{"game", config.game},
          {"network", network_to_json(t.network)},
          {"agent", to_string(t.agent.kind)},
          {"representation", t.representation.code()},
          {"eta", t.agent.eta},
          {"gamma", t.agent.gamma},
          {"agents", t.agents},
          {"rounds", t.rounds},
          {"trials", config.trials},
          {"seed_base", config.seed_base},
          {"backend", backend}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.game = field<std::string>(j, "game");
    c.trial.network = network_from_json(field<json>(j, "network"));
    c.trial.agent.kind = parse_agent_kind(field<std::string>(j, "agent"));
    c.trial.representation = ReprAxes::parse(field<std::string>(j, "representation"));
  } catch (const std::invalid_argument& e) {
    throw RunLogError(std::string("bad config: ") + e.what());
  }
  c.trial.agent.eta = field<double>(j, "eta");
  c.trial.agent.gamma = field<double>(j, "gamma");
  c.trial.agents = field<std::size_t>(j, "agents");
  c.trial.rounds = field<int>(j, "rounds");
  c.trials = field<std::size_t>(j, "trials");
  c.seed_base = field<std::uint64_t>(j, "seed_base");
  const json b = field<json>(j, "backend");
  try {
    c.backend.kind = parse_backend_kind(field<std::string>(b, "kind"));
  } catch (const std::invalid_argument& e) {
    throw RunLogError(e.what());
  }
  if (b.contains("model")) c.trial.llm.model = field<std::string>(b, "model");
  if (b.contains("temperature")) c.trial.llm.temperature = field<double>(b, "temperature");
  if (b.contains("parse_attempts")) c.trial.llm.max_attempts = field<int>(b, "parse_attempts");
  if (b.contains("endpoint")) c.backend.live.endpoint = field<std::string>(b, "endpoint");
  if (b.contains("api_key_env")) c.backend.live.api_key_env = field<std::string>(b, "api_key_env");
  if (b.contains("rate_limit")) c.backend.live.rate_limit = field<double>(b, "rate_limit");
  if (b.contains("replay_dir")) c.backend.replay_dir = field<std::string>(b, "replay_dir");
  return c;
}

json round_to_json(const TrialConfig& trial, std::uint64_t seed_base,
                   const RoundRecord& record) {
  return {{"type", "round"},
          {"trial", trial_index(trial, seed_base)},
          {"trial_id", trial.trial_id},
          {"seed", trial.seed},
          {"round", record.round},
          {"choices", record.choices.choices},
          {"distribution", record.distribution},
          {"payoffs", record.payoffs},
          {"regrets", record.regrets}};
}

RoundRecord round_from_json(const json& j) {
  RoundRecord r;
  r.round = field<int>(j, "round");
  r.choices.choices = field<std::vector<RouteIndex>>(j, "choices");
  r.distribution = field<std::vector<Cost>>(j, "distribution");
  r.payoffs = field<std::vector<Cost>>(j, "payoffs");
  r.regrets = field<std::vector<Cost>>(j, "regrets");
  return r;
}

std::filesystem::path transcript_path(const std::filesystem::path& runlog,
                                      const std::string& trial_id) {
  return runlog.parent_path() / kTranscriptDir / (trial_id + ".jsonl");
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path,
                           const ExperimentConfig& config, std::string started_at)
    : path_(path), seed_base_(config.seed_base) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_)
    throw RunLogError("cannot open " + path.string() + ": " + std::strerror(errno));
  json header = {{"type", "header"},
                 {"schema_version", kRunLogSchemaVersion},
                 {"started_at", std::move(started_at)},
                 {"config", config_to_json(config)}};
  write_line(header);
}

RunLogWriter::~RunLogWriter() {
  if (file_) std::fclose(file_);
}

void RunLogWriter::write_line(const json& j) {
  const std::string line = j.dump() + "\n";
  std::lock_guard<std::mutex> lock(mu_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fflush(file_) != 0)
    throw RunLogError("write failed: " + path_.string());
}

void RunLogWriter::write_round(const TrialConfig& trial, const RoundRecord& record) {
  write_line(round_to_json(trial, seed_base_, record));
}

void RunLogWriter::write_trial_end(const TrialResult& result) {
  if (!result.transcript.empty()) {
    const auto tp = transcript_path(path_, result.config.trial_id);
    std::filesystem::create_directories(tp.parent_path());
    Transcript(result.transcript).save_jsonl(tp);
  }
  write_line({{"type", "trial_end"},
              {"trial", trial_index(result.config, seed_base_)},
              {"trial_id", result.config.trial_id},
              {"seed", result.config.seed},
              {"status", result.ok ? "ok" : "failed"},
              {"error", result.error},
              {"rounds", result.history.size()},
              {"switch_counts", result.switch_counts}});
}

TrialObserver RunLogWriter::observer() {
  TrialObserver obs;
  obs.on_round = [this](const TrialConfig& t, const RoundRecord& r) { write_round(t, r); };
  obs.on_trial_end = [this](const TrialResult& r) { write_trial_end(r); };
  return obs;
}

std::filesystem::path resolve_runlog(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / kRunLogFile;
  return path;
}

RunLog read_runlog(const std::filesystem::path& input) {
  RunLog log;
  log.path = resolve_runlog(input);
  std::ifstream in(log.path, std::ios::binary);
  if (!in) throw RunLogError("cannot open run log " + log.path.string());

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  // A final line without its newline is a partial write.
  in.clear();
  in.seekg(0, std::ios::end);
  const auto size = static_cast<long long>(in.tellg());
  bool last_unterminated = false;
  if (size > 0) {
    in.seekg(size - 1);
    last_unterminated = in.get() != '\n';
  }
  if (lines.empty()) throw RunLogError(log.path.string() + ": empty run log");

  auto where = [&](std::size_t i) { return log.path.string() + ":" + std::to_string(i + 1); };

  struct Partial {
    int index = 0;
    TrialResult result;
    bool ended = false;
  };
  std::map<std::string, Partial> partial;
  bool have_header = false;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const bool last = i + 1 == lines.size();
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::parse_error&) {
      if (last && last_unterminated && have_header) {
        log.truncated = true;
        break;
      }
      throw RunLogError(where(i) + ": malformed line");
    }
    try {
      const auto type = field<std::string>(j, "type");
      if (!have_header) {
        if (type != "header") throw RunLogError("first line is not a header");
        log.schema_version = field<int>(j, "schema_version");
        if (log.schema_version != kRunLogSchemaVersion)
          throw SchemaMismatch(log.path.string() + ": schema version " +
                               std::to_string(log.schema_version) + ", expected " +
                               std::to_string(kRunLogSchemaVersion));
        log.started_at = field<std::string>(j, "started_at");
        log.config = config_from_json(field<json>(j, "config"));
        have_header = true;
        continue;
      }
      const auto id = field<std::string>(j, "trial_id");
      auto [it, fresh] = partial.try_emplace(id);
      Partial& p = it->second;
      if (fresh) {
        p.index = field<int>(j, "trial");
        p.result.config = log.config.trial;
        p.result.config.trial_id = id;
        p.result.config.seed = field<std::uint64_t>(j, "seed");
      }
      if (p.ended) throw RunLogError("line after the footer of " + id);
      if (type == "round") {
        p.result.history.append(round_from_json(j));
      } else if (type == "trial_end") {
        p.ended = true;
        p.result.ok = field<std::string>(j, "status") == "ok";
        p.result.error = field<std::string>(j, "error");
        p.result.switch_counts = field<std::vector<int>>(j, "switch_counts");
        if (field<std::size_t>(j, "rounds") != p.result.history.size())
          throw RunLogError("footer of " + id + " disagrees on the round count");
      } else {
        throw RunLogError("unknown line type '" + type + "'");
      }
    } catch (const SchemaMismatch&) {
      throw;
    } catch (const std::exception& e) {
      throw RunLogError(where(i) + ": " + e.what());
    }
  }
  if (!have_header) throw RunLogError(log.path.string() + ": no header line");

  std::vector<Partial*> order;
  for (auto& [id, p] : partial) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const Partial* a, const Partial* b) { return a->index < b->index; });
  for (Partial* p : order) {
    TrialResult& r = p->result;
    if (!p->ended) {
      r.ok = false;
      r.error = "incomplete";
      r.switch_counts = switch_counts(r.history);
    }
    if (has_focal_route(r.config.network))
      for (const auto& rec : r.history.records())
        r.focal_counts.push_back(focal_count(r.config.network, rec.distribution));
    const auto tp = transcript_path(log.path, r.config.trial_id);
    if (std::filesystem::exists(tp)) r.transcript = Transcript::load_jsonl(tp).entries();
    log.trials.push_back(std::move(r));
  }
  return log;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace routegame
