#include "routegame/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml++/toml.hpp>

namespace routegame {

namespace {

class Reader {
 public:
  Reader(const toml::table& table, std::string source, std::string prefix)
      : table_(table), source_(std::move(source)), prefix_(std::move(prefix)) {}

  [[noreturn]] void fail(std::string_view key, const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (const toml::node* node = table_.get(key)) {
      const auto& begin = node->source().begin;
      os << ":" << begin.line << ":" << begin.column;
    }
    os << ": field '" << prefix_ << key << "': " << message;
    throw ConfigError(os.str());
  }

  template <typename T>
  std::optional<T> get(std::string_view key, std::string_view type_name) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) return std::nullopt;
    auto v = node->value<T>();
    if (!v) fail(key, "expected " + std::string(type_name));
    return v;
  }

  std::optional<std::string> str(std::string_view key) { return get<std::string>(key, "a string"); }
  std::optional<double> num(std::string_view key) { return get<double>(key, "a number"); }
  std::optional<std::int64_t> integer(std::string_view key) {
    return get<std::int64_t>(key, "an integer");
  }
  std::optional<std::int64_t> non_negative(std::string_view key) {
    auto v = integer(key);
    if (v && *v < 0) fail(key, "must be >= 0");
    return v;
  }

  const toml::array* array(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) return nullptr;
    if (!node->is_array()) fail(key, "expected an array");
    return node->as_array();
  }

  const toml::table* table(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) return nullptr;
    if (!node->is_table()) fail(key, "expected a table");
    return node->as_table();
  }

  void reject_unknown() const {
    for (const auto& [key, node] : table_)
      if (!seen_.contains(std::string(key.str())))
        const_cast<Reader*>(this)->fail(key.str(), "unknown setting");
  }

  const std::string& source() const { return source_; }

 private:
  const toml::table& table_;
  std::string source_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::vector<std::string> string_list(Reader& r, std::string_view key,
                                     const toml::array& arr) {
  std::vector<std::string> out;
  for (const auto& item : arr) {
    auto s = item.value<std::string>();
    if (!s) r.fail(key, "expected an array of strings");
    out.push_back(*s);
  }
  return out;
}

CongestionNetwork parse_network(const toml::table& table, const std::string& source) {
  Reader r(table, source, "network.");
  const std::string name = r.str("name").value_or("inline");
  const auto* nodes_arr = r.array("nodes");
  if (!nodes_arr) r.fail("nodes", "required");
  auto nodes = string_list(r, "nodes", *nodes_arr);
  const Cost endowment = r.non_negative("endowment").value_or(400);
  const auto default_agents = static_cast<std::size_t>(r.non_negative("agents").value_or(18));
  const std::string origin = r.str("origin").value_or("O");
  const std::string destination = r.str("destination").value_or("D");

  std::vector<Edge> edges;
  const auto* edges_arr = r.array("edges");
  if (!edges_arr) r.fail("edges", "required");
  for (std::size_t i = 0; i < edges_arr->size(); ++i) {
    const auto* t = (*edges_arr)[i].as_table();
    if (!t) r.fail("edges", "entry " + std::to_string(i) + " is not a table");
    Reader er(*t, source, "network.edges[" + std::to_string(i) + "].");
    Edge e;
    auto from = er.str("from");
    auto to = er.str("to");
    if (!from) er.fail("from", "required");
    if (!to) er.fail("to", "required");
    e.from = *from;
    e.to = *to;
    e.cost.slope = er.non_negative("slope").value_or(0);
    e.cost.intercept = er.non_negative("intercept").value_or(0);
    er.reject_unknown();
    edges.push_back(std::move(e));
  }

  std::vector<std::vector<std::string>> routes;
  const auto* routes_arr = r.array("routes");
  if (!routes_arr) r.fail("routes", "required");
  for (const auto& item : *routes_arr) {
    const auto* path = item.as_array();
    if (!path) r.fail("routes", "each route is an array of node ids");
    routes.push_back(string_list(r, "routes", *path));
  }
  r.reject_unknown();
  try {
    return CongestionNetwork(name, std::move(nodes), std::move(edges), routes,
                             endowment, default_agents, origin, destination);
  } catch (const NetworkError& e) {
    throw ConfigError(source + ": [network]: " + e.what());
  }
}

BackendConfig parse_backend(const toml::table& table, const std::string& source) {
  Reader r(table, source, "backend.");
  BackendConfig b;
  if (auto kind = r.str("kind")) {
    try {
      b.kind = parse_backend_kind(*kind);
    } catch (const std::invalid_argument& e) {
      r.fail("kind", e.what());
    }
  }
  if (auto v = r.str("endpoint")) b.live.endpoint = *v;
  if (auto v = r.str("api_key_env")) b.live.api_key_env = *v;
  if (auto v = r.num("rate_limit")) {
    if (*v < 0) r.fail("rate_limit", "must be >= 0");
    b.live.rate_limit = *v;
  }
  if (auto v = r.integer("max_attempts")) {
    if (*v < 1) r.fail("max_attempts", "must be >= 1");
    b.live.retry.max_attempts = static_cast<int>(*v);
  }
  if (auto v = r.integer("initial_backoff_ms")) {
    if (*v < 0) r.fail("initial_backoff_ms", "must be >= 0");
    b.live.retry.initial_backoff = std::chrono::milliseconds(*v);
  }
  if (auto v = r.integer("timeout_s")) {
    if (*v < 1) r.fail("timeout_s", "must be >= 1");
    b.live.timeout = std::chrono::seconds(*v);
  }
  if (auto v = r.str("replay_dir")) b.replay_dir = *v;
  if (const auto* arr = r.array("responses")) b.responses = string_list(r, "responses", *arr);
  // Read by parse_config into LlmSettings.
  r.str("model");
  r.num("temperature");
  r.integer("parse_attempts");
  r.reject_unknown();
  return b;
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::None: return "none";
    case BackendKind::Live: return "live";
    case BackendKind::Replay: return "replay";
    case BackendKind::Scripted: return "scripted";
  }
  return "none";
}

BackendKind parse_backend_kind(std::string_view name) {
  for (auto k : {BackendKind::None, BackendKind::Live, BackendKind::Replay,
                 BackendKind::Scripted})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown backend '" + std::string(name) +
                              "' (expected live, replay or scripted)");
}

void ExperimentConfig::validate() const {
  try {
    trial.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (trial.agent.kind == AgentKind::Llm && backend.kind == BackendKind::None)
    throw ConfigError("agent = \"llm\" needs a [backend] section or --backend");
  if (backend.kind == BackendKind::Replay && backend.replay_dir.empty())
    throw ConfigError("replay backend needs backend.replay_dir");
}

ExperimentConfig parse_config(std::string_view text, std::string_view source_name) {
  const std::string source(source_name);
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ":" << e.source().begin.column
       << ": " << e.description();
    throw ConfigError(os.str());
  }

  Reader r(root, source, "");
  ExperimentConfig cfg;
  cfg.game = r.str("game").value_or("A");
  const toml::table* network = r.table("network");
  if (cfg.game == "inline") {
    if (!network) r.fail("game", "\"inline\" needs a [network] table");
    cfg.trial.network = parse_network(*network, source);
  } else {
    if (network) r.fail("network", "only allowed with game = \"inline\"");
    try {
      cfg.trial.network = canonical_game(cfg.game);
    } catch (const NetworkError& e) {
      r.fail("game", e.what());
    }
  }
  cfg.trial.agents = cfg.trial.network.default_agents();

  if (auto v = r.str("agent")) {
    try {
      cfg.trial.agent.kind = parse_agent_kind(*v);
    } catch (const std::invalid_argument& e) {
      r.fail("agent", e.what());
    }
  }
  if (auto v = r.str("representation")) {
    try {
      cfg.trial.representation = ReprAxes::parse(*v);
    } catch (const ReprError& e) {
      r.fail("representation", e.what());
    }
  }
  if (auto v = r.num("eta")) {
    if (!(*v > 0)) r.fail("eta", "must be > 0");
    cfg.trial.agent.eta = *v;
  }
  if (auto v = r.num("gamma")) {
    if (!(*v >= 0 && *v <= 1)) r.fail("gamma", "must lie in [0, 1]");
    cfg.trial.agent.gamma = *v;
  }
  if (auto v = r.non_negative("agents")) cfg.trial.agents = static_cast<std::size_t>(*v);
  if (auto v = r.non_negative("rounds")) cfg.trial.rounds = static_cast<int>(*v);
  if (auto v = r.non_negative("trials")) cfg.trials = static_cast<std::size_t>(*v);
  if (auto v = r.non_negative("seed")) cfg.seed_base = static_cast<std::uint64_t>(*v);
  if (auto v = r.str("output")) cfg.output = *v;
  if (auto v = r.non_negative("workers")) cfg.workers = static_cast<unsigned>(*v);

  if (const toml::table* backend = r.table("backend")) {
    cfg.backend = parse_backend(*backend, source);
    Reader br(*backend, source, "backend.");
    if (auto v = br.str("model")) cfg.trial.llm.model = *v;
    if (auto v = br.num("temperature")) {
      if (*v < 0) br.fail("temperature", "must be >= 0");
      cfg.trial.llm.temperature = *v;
    }
    if (auto v = br.integer("parse_attempts")) {
      if (*v < 1) br.fail("parse_attempts", "must be >= 1");
      cfg.trial.llm.max_attempts = static_cast<int>(*v);
    }
  }
  r.reject_unknown();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::shared_ptr<Backend> make_backend(const ExperimentConfig& config) {
  switch (config.backend.kind) {
    case BackendKind::None:
      return nullptr;
    case BackendKind::Live:
      if (!config.backend.live.api_key_env.empty() &&
          !std::getenv(config.backend.live.api_key_env.c_str()))
        throw ConfigError("live backend: environment variable " +
                          config.backend.live.api_key_env + " is not set");
      return std::make_shared<LiveBackend>(config.backend.live);
    case BackendKind::Replay:
      return std::make_shared<ReplayBackend>(
          ReplayBackend::from_directory(config.backend.replay_dir));
    case BackendKind::Scripted:
      return std::make_shared<ScriptedBackend>(config.backend.responses);
  }
  return nullptr;
}

}  // namespace routegame
