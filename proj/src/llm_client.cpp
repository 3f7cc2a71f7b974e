#include "routegame/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace routegame {

using nlohmann::json;

namespace {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::Agent: return "assistant";
    case Role::Environment: break;
  }
  return "user";
}

json entry_to_json(const TranscriptEntry& e) {
  json messages = json::array();
  for (const auto& m : e.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  json j = {{"trial", e.key.trial},       {"agent", e.key.agent},
            {"round", e.key.round},       {"attempt", e.key.attempt},
            {"messages", messages},       {"response", e.response},
            {"error", e.error},           {"rejected", e.rejected},
            {"latency_ms", e.latency_ms}};
  j["prompt_tokens"] = e.prompt_tokens ? json(*e.prompt_tokens) : json(nullptr);
  j["completion_tokens"] =
      e.completion_tokens ? json(*e.completion_tokens) : json(nullptr);
  return j;
}

TranscriptEntry entry_from_json(const json& j) {
  TranscriptEntry e;
  e.key.trial = j.at("trial").get<std::string>();
  e.key.agent = j.at("agent").get<AgentIndex>();
  e.key.round = j.at("round").get<int>();
  e.key.attempt = j.at("attempt").get<int>();
  for (const auto& m : j.at("messages"))
    e.messages.push_back({m.at("role").get<std::string>(),
                          m.at("content").get<std::string>()});
  e.response = j.at("response").get<std::string>();
  e.error = j.value("error", "");
  e.rejected = j.value("rejected", "");
  e.latency_ms = j.value("latency_ms", 0.0);
  if (j.contains("prompt_tokens") && !j["prompt_tokens"].is_null())
    e.prompt_tokens = j["prompt_tokens"].get<long>();
  if (j.contains("completion_tokens") && !j["completion_tokens"].is_null())
    e.completion_tokens = j["completion_tokens"].get<long>();
  return e;
}

// End (one past the closing brace) of the balanced object starting at
// text[start] == '{', or npos.
std::size_t object_end(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

}  // namespace

std::vector<ChatMessage> to_messages(std::span<const ChatTurn> turns) {
  std::vector<ChatMessage> out;
  out.reserve(turns.size());
  for (const auto& t : turns)
    out.push_back({std::string(role_name(t.role)), t.content});
  return out;
}

void CompletionRequest::validate() const {
  if (messages.empty() || messages.front().role != "system")
    throw std::invalid_argument("completion request must start with a system message");
  if (!(temperature >= 0.0))
    throw std::invalid_argument("temperature must be >= 0");
}

// Transcript

Transcript& Transcript::operator=(const Transcript& other) {
  if (this != &other) {
    auto copy = other.entries();
    std::lock_guard lock(mu_);
    entries_ = std::move(copy);
  }
  return *this;
}

void Transcript::append(TranscriptEntry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void Transcript::save_jsonl(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write transcript " + path.string());
  for (const auto& e : entries()) out << entry_to_json(e).dump() << '\n';
}

Transcript Transcript::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReplayMiss("transcript not found: " + path.string());
  std::vector<TranscriptEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) break;  // truncated tail
    entries.push_back(entry_from_json(j));
  }
  return Transcript(std::move(entries));
}

// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : queue_(responses.begin(), responses.end()) {}

void ScriptedBackend::push(std::string response) {
  std::lock_guard lock(mu_);
  queue_.push_back(std::move(response));
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request,
                                             const CompletionKey&) {
  request.validate();
  std::lock_guard lock(mu_);
  if (queue_.empty()) throw ScriptExhausted("scripted backend has no responses left");
  CompletionResponse r{queue_.front(), 0.0, std::nullopt, std::nullopt};
  queue_.pop_front();
  return r;
}

// ReplayBackend

ReplayBackend::ReplayBackend(const Transcript& transcript) { add(transcript); }

void ReplayBackend::add(const Transcript& transcript) {
  for (auto& e : transcript.entries())
    if (e.error.empty()) entries_[e.key] = e;
}

ReplayBackend ReplayBackend::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ReplayMiss("transcript directory not found: " + dir.string());
  ReplayBackend backend{Transcript{}};
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(dir))
    if (f.path().extension() == ".jsonl") files.push_back(f.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) backend.add(Transcript::load_jsonl(f));
  return backend;
}

CompletionResponse ReplayBackend::complete(const CompletionRequest&,
                                           const CompletionKey& key) {
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw ReplayMiss("no recorded completion for trial '" + key.trial +
                     "', agent " + std::to_string(key.agent) + ", round " +
                     std::to_string(key.round) + ", attempt " +
                     std::to_string(key.attempt));
  const auto& e = it->second;
  return {e.response, e.latency_ms, e.prompt_tokens, e.completion_tokens};
}

// Clock and rate limiting

Clock::time_point SystemClock::now() { return std::chrono::steady_clock::now(); }

void SystemClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

RateLimiter::RateLimiter(double per_second, std::shared_ptr<Clock> clock)
    : limit_(per_second > 0.0 ? static_cast<std::size_t>(std::max(1.0, std::floor(per_second)))
                              : 0),
      clock_(std::move(clock)) {}

Clock::time_point RateLimiter::acquire() {
  std::unique_lock lock(mu_);
  auto now = clock_->now();
  if (limit_ == 0) return now;
  while (recent_.size() >= limit_) {
    const auto free_at = recent_.front() + std::chrono::seconds(1);
    if (now >= free_at) {
      recent_.pop_front();
      continue;
    }
    // Holding the lock serializes waiters in arrival order.
    clock_->sleep_until(free_at);
    now = clock_->now();
  }
  recent_.push_back(now);
  return now;
}

std::chrono::milliseconds RetryPolicy::backoff_before(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count()) *
              std::pow(multiplier, std::max(0, attempt - 2));
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

// LiveBackend

LiveBackend::Endpoint LiveBackend::split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

LiveBackend::LiveBackend(LiveConfig config, std::shared_ptr<Clock> clock)
    : config_(std::move(config)),
      endpoint_(split_url(config_.endpoint)),
      clock_(std::move(clock)),
      limiter_(config_.rate_limit, clock_) {
  if (config_.retry.max_attempts < 1)
    throw std::invalid_argument("retry budget must allow at least one attempt");
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (endpoint_.scheme_host_port.starts_with("https://"))
    throw std::invalid_argument("this build has no TLS support; cannot reach " +
                                config_.endpoint);
#endif
}

std::size_t LiveBackend::dispatches() const {
  std::lock_guard lock(mu_);
  return dispatches_;
}

CompletionResponse LiveBackend::complete(const CompletionRequest& request,
                                         const CompletionKey&) {
  request.validate();
  json messages = json::array();
  for (const auto& m : request.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  const std::string body = json{{"model", request.model},
                                {"temperature", request.temperature},
                                {"messages", messages}}
                               .dump();

  httplib::Client client(endpoint_.scheme_host_port);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    limiter_.acquire();
    {
      std::lock_guard lock(mu_);
      ++dispatches_;
    }
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();

    std::chrono::milliseconds retry_after{0};
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      json j = json::parse(res->body, nullptr, false);
      if (j.is_discarded())
        throw TransportError("completion response is not JSON");
      try {
        CompletionResponse out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        out.latency_ms = latency;
        if (j.contains("usage")) {
          const auto& u = j["usage"];
          if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<long>();
          if (u.contains("completion_tokens"))
            out.completion_tokens = u["completion_tokens"].get<long>();
        }
        return out;
      } catch (const json::exception& e) {
        throw TransportError(std::string("malformed completion response: ") + e.what());
      }
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      if (res->has_header("Retry-After")) {
        const long secs = std::strtol(res->get_header_value("Retry-After").c_str(), nullptr, 10);
        if (secs > 0) retry_after = std::chrono::seconds(secs);
      }
    } else {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
    }

    if (attempt < config_.retry.max_attempts)
      clock_->sleep_for(std::max(config_.retry.backoff_before(attempt + 1), retry_after));
  }
  throw TransportError("completion failed after " +
                       std::to_string(config_.retry.max_attempts) +
                       " attempts: " + last_error);
}

// parse_route

std::string parse_route(std::string_view text,
                        std::span<const std::string> valid_routes) {
  if (valid_routes.empty()) throw std::invalid_argument("no valid routes given");
  std::optional<std::string> found;
  std::size_t found_at = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    const std::size_t end = object_end(text, i);
    if (end == std::string_view::npos) continue;
    json j = json::parse(text.substr(i, end - i), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    auto it = j.find("route");
    if (it == j.end() || !it->is_string()) continue;
    if (!found || i >= found_at) {
      found = it->get<std::string>();
      found_at = i;
    }
  }
  if (!found)
    throw RouteParseError(RouteParseError::Kind::Format,
                          "no JSON object with a string \"route\" field found");
  if (std::find(valid_routes.begin(), valid_routes.end(), *found) == valid_routes.end())
    throw RouteParseError(RouteParseError::Kind::InvalidRoute,
                          "route '" + *found + "' is not one of the available routes");
  return *found;
}

}  // namespace routegame
