#include "routegame/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <future>
#include <mutex>
#include <numeric>
#include <thread>

namespace routegame {

namespace {

struct Outcome {
  TrialResult result;
  std::exception_ptr error;
};

std::string describe(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

Outcome execute(const TrialConfig& config, const PolicyFactory& factory,
                const TrialObserver& observer, const RoundOptions& options) {
  Outcome out;
  out.result.config = config;
  auto transcript = std::make_shared<Transcript>();
  try {
    config.validate();
    PolicyList policies = factory(config, transcript);
    if (policies.size() != config.agents)
      throw std::invalid_argument("policy factory built " +
                                  std::to_string(policies.size()) +
                                  " policies for " +
                                  std::to_string(config.agents) + " agents");
    auto rngs = agent_streams(config.seed, config.agents);
    for (int t = 1; t <= config.rounds; ++t) {
      RoundRecord record =
          run_round(config.network, policies, rngs, out.result.history, options);
      if (observer.on_round) observer.on_round(config, record);
      out.result.history.append(std::move(record));
    }
  } catch (...) {
    out.error = std::current_exception();
    out.result.ok = false;
    out.result.error = describe(out.error);
  }
  out.result.switch_counts = switch_counts(out.result.history);
  if (has_focal_route(config.network))
    for (const auto& r : out.result.history.records())
      out.result.focal_counts.push_back(focal_count(config.network, r.distribution));
  out.result.transcript = transcript->entries();
  return out;
}

}  // namespace

void TrialConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (agents < 2) throw std::invalid_argument("need at least 2 agents");
}

PolicyFactory default_policy_factory(std::shared_ptr<Backend> backend) {
  return [backend](const TrialConfig& config,
                   std::shared_ptr<Transcript> transcript) {
    PolicyList policies;
    const std::size_t k = config.network.route_count();
    for (AgentIndex i = 0; i < config.agents; ++i) {
      switch (config.agent.kind) {
        case AgentKind::Uniform:
          policies.push_back(std::make_unique<UniformRandomPolicy>());
          break;
        case AgentKind::BestResponse:
          policies.push_back(std::make_unique<BestResponsePolicy>());
          break;
        case AgentKind::Mwu:
          policies.push_back(std::make_unique<MwuPolicy>(k, config.agent.eta));
          break;
        case AgentKind::Exp3:
          policies.push_back(
              std::make_unique<Exp3Policy>(k, config.agent.eta, config.agent.gamma));
          break;
        case AgentKind::Llm:
          if (!backend)
            throw std::invalid_argument("LLM agents need a completion backend");
          policies.push_back(std::make_unique<LlmPolicy>(
              backend, transcript, config.representation, config.llm,
              config.trial_id, config.agents, config.rounds));
          break;
      }
    }
    return policies;
  };
}

std::vector<Rng> agent_streams(std::uint64_t seed, std::size_t agents) {
  std::vector<Rng> out;
  out.reserve(agents);
  for (std::size_t i = 0; i < agents; ++i) out.emplace_back(substream_seed(seed, i));
  return out;
}

RoundRecord run_round(const CongestionNetwork& network,
                      std::span<const std::unique_ptr<Policy>> policies,
                      std::span<Rng> rngs, const GameHistory& history,
                      const RoundOptions& options) {
  const std::size_t n = policies.size();
  if (rngs.size() != n)
    throw std::invalid_argument("need one random stream per policy");
  const int round = static_cast<int>(history.size()) + 1;

  std::vector<AgentIndex> order = options.poll_order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), AgentIndex{0});
  }
  if (order.size() != n)
    throw std::invalid_argument("poll order must list every agent once");

  std::vector<RouteIndex> choices(n, 0);
  auto decide = [&](AgentIndex a) {
    try {
      const RouteIndex r =
          policies[a]->decide(DecisionContext{a, round, network, history, rngs[a]});
      if (r >= network.route_count())
        throw InvalidProfile("policy returned route index " + std::to_string(r));
      choices[a] = r;
    } catch (const PolicyFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw PolicyFailure(a, round, e.what(), std::current_exception());
    }
  };

  if (options.decision_workers <= 1) {
    for (AgentIndex a : order) decide(a);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    const unsigned width = std::min<unsigned>(options.decision_workers,
                                              static_cast<unsigned>(n));
    for (unsigned w = 0; w < width; ++w)
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < n; i = next++) decide(order[i]);
      }));
    // Barrier: every decision commits before evaluation.
    std::exception_ptr first;
    for (auto& f : workers) {
      try {
        f.get();
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
  }

  RoundRecord record = evaluate_round(network, round, ActionProfile{std::move(choices)});
  for (AgentIndex a = 0; a < n; ++a) policies[a]->observe(network, record, a);
  return record;
}

TrialResult run_trial(const TrialConfig& config, const PolicyFactory& factory,
                      const TrialObserver& observer, const RoundOptions& options) {
  Outcome out = execute(config, factory, observer, options);
  if (out.error) std::rethrow_exception(out.error);
  if (observer.on_trial_end) observer.on_trial_end(out.result);
  return std::move(out.result);
}

std::vector<TrialResult> run_experiment(const TrialConfig& config_template,
                                        std::size_t trials,
                                        std::uint64_t seed_base,
                                        const PolicyFactory& factory,
                                        unsigned workers,
                                        const TrialObserver& observer) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<TrialResult> results(trials);

  auto run_one = [&](std::size_t i) {
    TrialConfig config = config_template;
    config.seed = seed_base + i;
    config.trial_id = "trial-" + std::to_string(i);
    Outcome out = execute(config, factory, observer, {});
    if (observer.on_trial_end) observer.on_trial_end(out.result);
    results[i] = std::move(out.result);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < trials; ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto width = std::min<std::size_t>(workers, trials);
  for (std::size_t w = 0; w < width; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < trials; i = next++) run_one(i);
    });
  for (auto& t : pool) t.join();
  return results;
}

std::string experiment_label(const TrialConfig& config) {
  if (config.agent.kind == AgentKind::Llm) return config.representation.code();
  std::string label(to_string(config.agent.kind));
  for (char& c : label) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return label;
}

ExperimentSummary summarize_results(std::span<const TrialResult> results) {
  std::vector<TrialData> data;
  std::string label;
  for (const auto& r : results) {
    if (!r.ok) continue;
    if (label.empty()) label = experiment_label(r.config);
    data.push_back({&r.config.network, &r.history});
  }
  if (data.empty()) throw MetricError("no successful trials to summarize");
  return summarize_experiment(label, data);
}

}  // namespace routegame
