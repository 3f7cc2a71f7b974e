#pragma once

// Chat-completion backends (live HTTP, transcript replay, scripted queue),
// the transcript store, and the route-answer parser.

#include <chrono>
#include <compare>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "routegame/network.hpp"
#include "routegame/repr.hpp"

namespace routegame {

inline constexpr std::string_view kDefaultModel = "gpt-4o-2024-08-06";

class LlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
// Attempts exhausted or a non-retryable HTTP/transport failure.
class TransportError : public LlmError {
 public:
  using LlmError::LlmError;
};
class ReplayMiss : public LlmError {
 public:
  using LlmError::LlmError;
};
class ScriptExhausted : public LlmError {
 public:
  using LlmError::LlmError;
};

class RouteParseError : public LlmError {
 public:
  enum class Kind { Format, InvalidRoute };
  RouteParseError(Kind kind, const std::string& what)
      : LlmError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

// Environment turns become "user", agent turns "assistant".
std::vector<ChatMessage> to_messages(std::span<const ChatTurn> turns);

struct CompletionRequest {
  std::string model{kDefaultModel};
  double temperature = 1.0;
  std::vector<ChatMessage> messages;

  // Throws std::invalid_argument unless messages start with a system message
  // and temperature >= 0.
  void validate() const;
};

// Identifies one completion within an experiment.
struct CompletionKey {
  std::string trial;
  AgentIndex agent = 0;
  int round = 0;
  int attempt = 1;
  auto operator<=>(const CompletionKey&) const = default;
};

struct CompletionResponse {
  std::string text;
  double latency_ms = 0.0;
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
};

struct TranscriptEntry {
  CompletionKey key;
  std::vector<ChatMessage> messages;
  std::string response;
  std::string error;     // transport failure; no response was received
  std::string rejected;  // why a received response was not accepted
  double latency_ms = 0.0;
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
  bool operator==(const TranscriptEntry&) const = default;
};

// Append-only, internally synchronized.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::vector<TranscriptEntry> entries)
      : entries_(std::move(entries)) {}
  Transcript(const Transcript& other) : entries_(other.entries()) {}
  Transcript& operator=(const Transcript& other);

  void append(TranscriptEntry entry);
  std::vector<TranscriptEntry> entries() const;
  std::size_t size() const;

  // One JSON object per line.
  void save_jsonl(const std::filesystem::path& path) const;
  static Transcript load_jsonl(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request,
                                      const CompletionKey& key) = 0;
};

// Pops queued responses in order; ScriptExhausted once empty.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<std::string> responses);
  void push(std::string response);
  std::size_t remaining() const;
  CompletionResponse complete(const CompletionRequest& request,
                              const CompletionKey& key) override;

 private:
  mutable std::mutex mu_;
  std::deque<std::string> queue_;
};

// Serves successful transcript entries by (trial, agent, round, attempt).
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const Transcript& transcript);
  void add(const Transcript& transcript);
  // Loads every *.jsonl transcript in a directory.
  static ReplayBackend from_directory(const std::filesystem::path& dir);
  CompletionResponse complete(const CompletionRequest& request,
                              const CompletionKey& key) override;

 private:
  std::map<CompletionKey, TranscriptEntry> entries_;
};

// Time source for rate limiting and backoff; replaceable in tests.
class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point t) = 0;
  void sleep_for(std::chrono::nanoseconds d) { sleep_until(now() + d); }
};

class SystemClock : public Clock {
 public:
  time_point now() override;
  void sleep_until(time_point t) override;
};

// At most `per_second` dispatches in any half-open one-second window; callers
// block in acquire() until a slot frees up. A rate <= 0 disables limiting.
class RateLimiter {
 public:
  RateLimiter(double per_second, std::shared_ptr<Clock> clock);
  // Returns the dispatch time granted to the caller.
  Clock::time_point acquire();

 private:
  std::mutex mu_;
  std::size_t limit_;
  std::shared_ptr<Clock> clock_;
  std::deque<Clock::time_point> recent_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};

  std::chrono::milliseconds backoff_before(int attempt) const;  // attempt >= 2
};

struct LiveConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  double rate_limit = 0.0;  // requests per second, 0 = unlimited
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
};

// POSTs {model, temperature, messages} and reads choices[0].message.content.
// HTTP 429, 5xx and connection failures are retried with exponential backoff
// (Retry-After honored when larger); other statuses fail immediately.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveConfig config,
                       std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());
  CompletionResponse complete(const CompletionRequest& request,
                              const CompletionKey& key) override;
  // Number of HTTP requests actually sent.
  std::size_t dispatches() const;

 private:
  struct Endpoint {
    std::string scheme_host_port;
    std::string path;
  };
  static Endpoint split_url(const std::string& url);

  LiveConfig config_;
  Endpoint endpoint_;
  std::string api_key_;
  std::shared_ptr<Clock> clock_;
  RateLimiter limiter_;
  mutable std::mutex mu_;
  std::size_t dispatches_ = 0;
};

// Finds the last well-formed JSON object in `text` that has a string field
// "route" (prose and ``` fences around it are fine) and returns its value.
// Throws RouteParseError: Format when no such object exists, InvalidRoute
// when the value is not exactly one of `valid_routes`.
std::string parse_route(std::string_view text,
                        std::span<const std::string> valid_routes);

}  // namespace routegame
