#pragma once

// Repeated-game orchestration: rounds, trials and multi-trial experiments.

#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "routegame/agents.hpp"
#include "routegame/history.hpp"
#include "routegame/llm_client.hpp"
#include "routegame/metrics.hpp"
#include "routegame/network.hpp"
#include "routegame/repr.hpp"
#include "routegame/rng.hpp"

namespace routegame {

// A policy threw while deciding; carries who and when.
class PolicyFailure : public std::runtime_error {
 public:
  PolicyFailure(AgentIndex agent, int round, const std::string& what,
                std::exception_ptr cause = nullptr)
      : std::runtime_error("round " + std::to_string(round) + ", agent " +
                           std::to_string(agent) + ": " + what),
        agent_(agent),
        round_(round),
        cause_(std::move(cause)) {}
  AgentIndex agent() const { return agent_; }
  int round() const { return round_; }
  // The exception the policy threw.
  const std::exception_ptr& cause() const { return cause_; }

 private:
  AgentIndex agent_;
  int round_;
  std::exception_ptr cause_;
};

struct TrialConfig {
  CongestionNetwork network = game_a();
  std::size_t agents = 18;
  int rounds = 40;
  ReprAxes representation;  // LLM agents only
  AgentSpec agent;
  LlmSettings llm;
  std::uint64_t seed = 0;
  std::string trial_id = "trial-0";

  // Throws std::invalid_argument unless rounds >= 1 and agents >= 2.
  void validate() const;
  bool operator==(const TrialConfig&) const = default;
};

struct TrialResult {
  TrialConfig config;
  GameHistory history;
  std::vector<int> switch_counts;   // per agent
  std::vector<Cost> focal_counts;   // per round; empty without a focal route
  std::vector<TranscriptEntry> transcript;  // LLM trials
  bool ok = true;
  std::string error;
  bool operator==(const TrialResult&) const = default;
};

using PolicyList = std::vector<std::unique_ptr<Policy>>;

// Builds the policies for one trial. `transcript` collects LLM exchanges.
using PolicyFactory = std::function<PolicyList(
    const TrialConfig& config, std::shared_ptr<Transcript> transcript)>;

// Standard factory: algorithmic kinds need nothing else; AgentKind::Llm
// requires `backend`.
PolicyFactory default_policy_factory(std::shared_ptr<Backend> backend = nullptr);

// Per-agent generators seeded with substream_seed(seed, agent).
std::vector<Rng> agent_streams(std::uint64_t seed, std::size_t agents);

struct RoundOptions {
  // Order in which agents are asked; empty means 0..n-1.
  std::vector<AgentIndex> poll_order;
  // >1 evaluates decisions on that many threads.
  unsigned decision_workers = 1;
};

// Collects every agent's decision from `history` alone, then evaluates the
// round on a reset network and delivers the record to every policy's
// observe(). Throws PolicyFailure if a policy throws.
RoundRecord run_round(const CongestionNetwork& network,
                      std::span<const std::unique_ptr<Policy>> policies,
                      std::span<Rng> rngs, const GameHistory& history,
                      const RoundOptions& options = {});

struct TrialObserver {
  std::function<void(const TrialConfig&, const RoundRecord&)> on_round;
  std::function<void(const TrialResult&)> on_trial_end;
};

// Plays config.rounds rounds. Round errors propagate as PolicyFailure.
TrialResult run_trial(const TrialConfig& config, const PolicyFactory& factory,
                      const TrialObserver& observer = {},
                      const RoundOptions& options = {});

// Trial i runs with seed seed_base + i and id "trial-<i>". A trial that
// throws is returned with ok = false and the message in `error`. Results are
// in trial order regardless of `workers`.
std::vector<TrialResult> run_experiment(const TrialConfig& config_template,
                                        std::size_t trials,
                                        std::uint64_t seed_base,
                                        const PolicyFactory& factory,
                                        unsigned workers = 1,
                                        const TrialObserver& observer = {});

// Summary label: the representation code for LLM agents, else the upper-case
// agent kind ("MWU", "EXP3", ...).
std::string experiment_label(const TrialConfig& config);

// Summarizes the successful trials.
ExperimentSummary summarize_results(std::span<const TrialResult> results);

}  // namespace routegame
