#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "routegame/llm_client.hpp"

using namespace routegame;
namespace fs = std::filesystem;

namespace {

class FakeClock : public Clock {
 public:
  time_point now() override {
    std::lock_guard lock(mu_);
    return t_;
  }
  void sleep_until(time_point t) override {
    std::lock_guard lock(mu_);
    if (t > t_) {
      slept_.push_back(t - t_);
      t_ = t;
    }
  }
  void advance(std::chrono::nanoseconds d) {
    std::lock_guard lock(mu_);
    t_ += d;
  }
  std::vector<std::chrono::nanoseconds> slept() {
    std::lock_guard lock(mu_);
    return slept_;
  }

 private:
  std::mutex mu_;
  time_point t_{};
  std::vector<std::chrono::nanoseconds> slept_;
};

CompletionRequest sample_request() {
  return {"test-model", 1.0, {{"system", "rules"}, {"user", "pick"}}};
}

const std::vector<std::string> kRoutesA{"O-L-D", "O-R-D"};
const std::vector<std::string> kRoutesB{"O-L-D", "O-R-D", "O-L-R-D"};

// Answers POST /v1/chat/completions from a list of (status, body) replies.
class StubServer {
 public:
  explicit StubServer(std::vector<std::pair<int, std::string>> replies,
                      std::string retry_after = "")
      : replies_(std::move(replies)), retry_after_(std::move(retry_after)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      const std::size_t i = hits_++;
      {
        std::lock_guard lock(mu_);
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
      }
      const auto& [status, body] = replies_[std::min(i, replies_.size() - 1)];
      res.status = status;
      if (status == 429 && !retry_after_.empty()) res.set_header("Retry-After", retry_after_);
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  std::size_t hits() const { return hits_; }
  std::vector<std::string> bodies() {
    std::lock_guard lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::vector<std::pair<int, std::string>> replies_;
  std::string retry_after_;
  std::atomic<std::size_t> hits_{0};
  std::mutex mu_;
  std::vector<std::string> bodies_, auth_;
  int port_ = 0;
  std::thread thread_;
};

std::string ok_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                        {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}}
      .dump();
}

LiveConfig stub_config(const std::string& url) {
  LiveConfig c;
  c.endpoint = url;
  c.api_key_env = "ROUTEGAME_TEST_KEY";
  c.timeout = std::chrono::seconds(5);
  return c;
}

}  // namespace

TEST_CASE("scripted backend pops in order") {
  ScriptedBackend b({"x"});
  CHECK(b.complete(sample_request(), {}).text == "x");
  CHECK_THROWS_AS(b.complete(sample_request(), {}), ScriptExhausted);
  b.push("y");
  CHECK(b.remaining() == 1);
  CHECK(b.complete(sample_request(), {}).text == "y");
}

TEST_CASE("request validation and role mapping") {
  CompletionRequest r = sample_request();
  CHECK_NOTHROW(r.validate());
  r.temperature = -0.1;
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  r = sample_request();
  r.messages.erase(r.messages.begin());
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  const std::vector<ChatTurn> turns{{Role::System, "s"}, {Role::Environment, "e"}, {Role::Agent, "a"}};
  const auto m = to_messages(turns);
  CHECK(m[0].role == "system");
  CHECK(m[1].role == "user");
  CHECK(m[2].role == "assistant");
}

TEST_CASE("route parsing corpus") {
  CHECK(parse_route(R"({"route": "O-R-D"})", kRoutesA) == "O-R-D");
  CHECK(parse_route("Let me think step by step.\nO-L-D costs more.\n```json\n{\"route\": \"O-L-R-D\"}\n```\n",
                    kRoutesB) == "O-L-R-D");
  // The last object wins.
  CHECK(parse_route(R"(Earlier I said {"route": "O-L-D"} but final: {"route": "O-R-D"})", kRoutesA) ==
        "O-R-D");
  // Braces inside strings do not confuse the scanner.
  CHECK(parse_route(R"({"note": "a } b {", "route": "O-L-D"})", kRoutesA) == "O-L-D");
  // Nested objects; objects without a string route are skipped.
  CHECK(parse_route(R"({"answer": {"route": "O-R-D"}} {"route": 3})", kRoutesA) == "O-R-D");
  CHECK(parse_route("{\"route\": \"O-L-D\", \"reason\": \"cheaper\"}\nThat's my pick.", kRoutesA) ==
        "O-L-D");

  auto kind_of = [](const std::string& text, const std::vector<std::string>& routes) {
    try {
      parse_route(text, routes);
    } catch (const RouteParseError& e) {
      return e.kind();
    }
    FAIL("no error");
    return RouteParseError::Kind::Format;
  };
  CHECK(kind_of(R"({"route": "O-X-D"})", kRoutesA) == RouteParseError::Kind::InvalidRoute);
  CHECK(kind_of(R"({"route": "o-l-d"})", kRoutesA) == RouteParseError::Kind::InvalidRoute);
  CHECK(kind_of(R"({"route": "O-L-R-D"})", kRoutesA) == RouteParseError::Kind::InvalidRoute);
  CHECK(kind_of("I pick O-L-D", kRoutesA) == RouteParseError::Kind::Format);
  CHECK(kind_of(R"({"route": "O-L-D")", kRoutesA) == RouteParseError::Kind::Format);
  CHECK(kind_of(R"({'route': 'O-L-D'})", kRoutesA) == RouteParseError::Kind::Format);
  CHECK(kind_of("", kRoutesA) == RouteParseError::Kind::Format);
}

TEST_CASE("transcript files round-trip and tolerate a cut-off tail") {
  const fs::path dir = fs::temp_directory_path() / "routegame_transcript_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Transcript t;
  t.append({{"trial-0", 3, 1, 1}, {{"system", "s"}, {"user", "u"}}, "{\"route\": \"O-L-D\"}", "", "",
            12.5, 10, 4});
  t.append({{"trial-0", 3, 2, 1}, {{"system", "s"}}, "garbage", "", "no JSON object", 1.0, {}, {}});
  t.append({{"trial-0", 3, 2, 2}, {{"system", "s"}}, "", "HTTP 500", "", 0.0, {}, {}});
  t.save_jsonl(dir / "a.jsonl");
  const auto back = Transcript::load_jsonl(dir / "a.jsonl").entries();
  CHECK(back == t.entries());

  {
    std::ofstream out(dir / "a.jsonl", std::ios::app);
    out << "{\"key\": {\"trial\": \"tr";
  }
  CHECK(Transcript::load_jsonl(dir / "a.jsonl").size() == 3);
  CHECK_THROWS_AS(Transcript::load_jsonl(dir / "missing.jsonl"), ReplayMiss);
  fs::remove_all(dir);
}

TEST_CASE("replay backend serves recorded responses by key") {
  Transcript t;
  t.append({{"trial-0", 1, 1, 1}, {}, "first", "", "", 0.0, {}, {}});
  t.append({{"trial-0", 1, 2, 1}, {}, "", "HTTP 500", "", 0.0, {}, {}});
  ReplayBackend b(t);
  CHECK(b.complete(sample_request(), {"trial-0", 1, 1, 1}).text == "first");
  CHECK(b.complete(sample_request(), {"trial-0", 1, 1, 1}).text == "first");
  CHECK_THROWS_AS(b.complete(sample_request(), {"trial-0", 1, 2, 1}), ReplayMiss);
  CHECK_THROWS_AS(b.complete(sample_request(), {"trial-1", 1, 1, 1}), ReplayMiss);
  CHECK_THROWS_AS(ReplayBackend::from_directory("/nonexistent/routegame"), ReplayMiss);
}

TEST_CASE("retry backoff schedule") {
  RetryPolicy p;
  CHECK(p.backoff_before(2) == std::chrono::milliseconds(500));
  CHECK(p.backoff_before(3) == std::chrono::milliseconds(1000));
  CHECK(p.backoff_before(4) == std::chrono::milliseconds(2000));
  p.max_backoff = std::chrono::milliseconds(1500);
  CHECK(p.backoff_before(4) == std::chrono::milliseconds(1500));
}

TEST_CASE("rate limiter never exceeds r dispatches in a one-second window") {
  auto clock = std::make_shared<FakeClock>();
  RateLimiter limiter(5.0, clock);
  std::vector<Clock::time_point> grants;
  for (int i = 0; i < 60; ++i) {
    grants.push_back(limiter.acquire());
    clock->advance(std::chrono::milliseconds(i % 7 == 0 ? 90 : 10));
  }
  for (std::size_t i = 0; i < grants.size(); ++i) {
    std::size_t in_window = 0;
    for (std::size_t j = i; j < grants.size(); ++j)
      if (grants[j] - grants[i] < std::chrono::seconds(1)) ++in_window;
    REQUIRE(in_window <= 5);
  }

  // Unlimited never waits.
  auto c2 = std::make_shared<FakeClock>();
  RateLimiter open(0.0, c2);
  for (int i = 0; i < 100; ++i) open.acquire();
  CHECK(c2->slept().empty());
}

TEST_CASE("rate limiter under concurrent callers") {
  auto clock = std::make_shared<FakeClock>();
  RateLimiter limiter(3.0, clock);
  std::mutex mu;
  std::vector<Clock::time_point> grants;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 10; ++i) {
        const auto g = limiter.acquire();
        std::lock_guard lock(mu);
        grants.push_back(g);
      }
    });
  for (auto& th : threads) th.join();
  std::sort(grants.begin(), grants.end());
  for (std::size_t i = 0; i + 3 < grants.size(); ++i)
    REQUIRE(grants[i + 3] - grants[i] >= std::chrono::seconds(1));
}

TEST_CASE("live backend retries 429 twice then succeeds") {
  StubServer server({{429, "{}"}, {429, "{}"}, {200, ok_body("{\"route\": \"O-L-D\"}")}});
  setenv("ROUTEGAME_TEST_KEY", "sk-test", 1);
  auto clock = std::make_shared<FakeClock>();
  LiveBackend backend(stub_config(server.url()), clock);
  const auto res = backend.complete(sample_request(), {"trial-0", 0, 1, 1});
  CHECK(res.text == "{\"route\": \"O-L-D\"}");
  CHECK(res.prompt_tokens == 12);
  CHECK(res.completion_tokens == 3);
  CHECK(server.hits() == 3);
  CHECK(backend.dispatches() == 3);
  const auto slept = clock->slept();
  REQUIRE(slept.size() == 2);
  CHECK(slept[0] == std::chrono::milliseconds(500));
  CHECK(slept[1] == std::chrono::milliseconds(1000));

  const auto body = nlohmann::json::parse(server.bodies().front());
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == 1.0);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(server.auth().front() == "Bearer sk-test");
  unsetenv("ROUTEGAME_TEST_KEY");
}

TEST_CASE("live backend honors Retry-After") {
  StubServer server({{429, "{}"}, {200, ok_body("ok")}}, "3");
  auto clock = std::make_shared<FakeClock>();
  LiveBackend backend(stub_config(server.url()), clock);
  CHECK(backend.complete(sample_request(), {}).text == "ok");
  REQUIRE(clock->slept().size() == 1);
  CHECK(clock->slept()[0] == std::chrono::seconds(3));
}

TEST_CASE("live backend failures") {
  SUBCASE("client errors are not retried") {
    StubServer server({{400, "{\"error\": \"bad\"}"}});
    LiveBackend backend(stub_config(server.url()), std::make_shared<FakeClock>());
    CHECK_THROWS_AS(backend.complete(sample_request(), {}), TransportError);
    CHECK(server.hits() == 1);
  }
  SUBCASE("server errors exhaust the budget") {
    StubServer server({{503, "{}"}});
    auto cfg = stub_config(server.url());
    cfg.retry.max_attempts = 4;
    LiveBackend backend(cfg, std::make_shared<FakeClock>());
    CHECK_THROWS_AS(backend.complete(sample_request(), {}), TransportError);
    CHECK(server.hits() == 4);
  }
  SUBCASE("malformed success body") {
    StubServer server({{200, "{\"choices\": []}"}});
    LiveBackend backend(stub_config(server.url()), std::make_shared<FakeClock>());
    CHECK_THROWS_AS(backend.complete(sample_request(), {}), TransportError);
  }
  SUBCASE("connection refused") {
    auto cfg = stub_config("http://127.0.0.1:1/v1/chat/completions");
    cfg.retry.max_attempts = 2;
    LiveBackend backend(cfg, std::make_shared<FakeClock>());
    CHECK_THROWS_AS(backend.complete(sample_request(), {}), TransportError);
    CHECK(backend.dispatches() == 2);
  }
}

TEST_CASE("live backend respects the rate limit across calls") {
  StubServer server({{200, ok_body("ok")}});
  auto clock = std::make_shared<FakeClock>();
  auto cfg = stub_config(server.url());
  cfg.rate_limit = 2.0;
  LiveBackend backend(cfg, clock);
  for (int i = 0; i < 5; ++i) backend.complete(sample_request(), {});
  CHECK(server.hits() == 5);
  // Five dispatches at two per second need at least two full seconds.
  CHECK(clock->now() - Clock::time_point{} >= std::chrono::seconds(2));
}
