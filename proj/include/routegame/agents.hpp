#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "routegame/history.hpp"
#include "routegame/llm_client.hpp"
#include "routegame/network.hpp"
#include "routegame/repr.hpp"
#include "routegame/rng.hpp"

namespace routegame {

// What an agent may look at when choosing a route for `round`.
struct DecisionContext {
  AgentIndex agent;
  int round;  // 1-based; history holds round - 1 records
  const CongestionNetwork& network;
  const GameHistory& history;
  Rng& rng;  // the agent's own substream
};

// Decision policy of one agent. decide() reads only the context; observe()
// runs after every agent has committed and the round has been evaluated.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual RouteIndex decide(const DecisionContext& ctx) = 0;
  virtual void observe(const CongestionNetwork& /*network*/,
                       const RoundRecord& /*record*/, AgentIndex /*agent*/) {}
  virtual std::string_view kind() const = 0;
};

enum class AgentKind { Uniform, BestResponse, Mwu, Exp3, Llm };

std::string_view to_string(AgentKind kind);
// "uniform", "best_response", "mwu", "exp3", "llm"
AgentKind parse_agent_kind(std::string_view name);

struct AgentSpec {
  AgentKind kind = AgentKind::Mwu;
  double eta = 0.75;    // learning rate (MWU, EXP3)
  double gamma = 0.75;  // exploration rate (EXP3)
  bool operator==(const AgentSpec&) const = default;
};

struct LlmSettings {
  std::string model{kDefaultModel};
  double temperature = 1.0;
  int max_attempts = 3;  // per decision, including re-prompts
  bool operator==(const LlmSettings&) const = default;
};

// Exponential weights shared by MWU and EXP3.
struct WeightState {
  std::vector<double> weights;
  double learning_rate = 0.75;
  double exploration_rate = 0.0;  // EXP3 only

  std::size_t k() const { return weights.size(); }
};

WeightState initial_weights(std::size_t k, double learning_rate,
                            double exploration_rate = 0.0);

// w_i / sum w
std::vector<double> mwu_probabilities(const WeightState& state);
// w_i <- w_i * exp(-eta * loss_i) for every route, then rescaled so the
// largest weight is 1. Losses must lie in [0, 1].
WeightState mwu_update(WeightState state, std::span<const double> losses);

// (1 - gamma) * w_i / sum w + gamma / k
std::vector<double> exp3_probabilities(const WeightState& state);
// Importance-weighted estimate loss / prob_played applied to the played
// route only, then rescaled so the largest weight is 1.
WeightState exp3_update(WeightState state, RouteIndex played, double loss,
                        double prob_played);

// 1 - payoff / endowment; payoff must lie in [0, endowment].
double loss_from_payoff(Cost payoff, Cost endowment);

// Myopic best response to the agent's view of `last`: keeps its previous
// route when that is among the best, otherwise the lowest-index best route.
RouteIndex best_response(const CongestionNetwork& network,
                         const RoundRecord& last, AgentIndex agent);

class UniformRandomPolicy : public Policy {
 public:
  RouteIndex decide(const DecisionContext& ctx) override;
  std::string_view kind() const override { return "uniform"; }
};

// Uniform in round 1, best response to the previous round afterwards.
class BestResponsePolicy : public Policy {
 public:
  RouteIndex decide(const DecisionContext& ctx) override;
  std::string_view kind() const override { return "best_response"; }
};

// Full feedback: the loss of every route is taken from its counterfactual
// payoff with the other agents' choices held fixed.
class MwuPolicy : public Policy {
 public:
  MwuPolicy(std::size_t routes, double eta);
  RouteIndex decide(const DecisionContext& ctx) override;
  void observe(const CongestionNetwork& network, const RoundRecord& record,
               AgentIndex agent) override;
  std::string_view kind() const override { return "mwu"; }
  const WeightState& state() const { return state_; }

 private:
  WeightState state_;
};

// Bandit feedback: only the realized payoff of the played route is used.
class Exp3Policy : public Policy {
 public:
  Exp3Policy(std::size_t routes, double eta, double gamma);
  RouteIndex decide(const DecisionContext& ctx) override;
  void observe(const CongestionNetwork& network, const RoundRecord& record,
               AgentIndex agent) override;
  std::string_view kind() const override { return "exp3"; }
  const WeightState& state() const { return state_; }

 private:
  WeightState state_;
  double last_prob_ = 0.0;
};

class LlmDecisionError : public LlmError {
 public:
  using LlmError::LlmError;
};

// Renders the agent's context, sends one completion request per attempt and
// parses the route. Malformed or invalid answers are re-prompted with a
// format reminder up to settings.max_attempts times in total. Every attempt,
// failed or not, is appended to the transcript.
class LlmPolicy : public Policy {
 public:
  LlmPolicy(std::shared_ptr<Backend> backend,
            std::shared_ptr<Transcript> transcript, ReprAxes axes,
            LlmSettings settings, std::string trial_id, std::size_t agents,
            int rounds);
  RouteIndex decide(const DecisionContext& ctx) override;
  std::string_view kind() const override { return "llm"; }
  // Accepted raw reply for each completed round.
  const std::vector<std::string>& completions() const { return completions_; }

 private:
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<Transcript> transcript_;
  ReprAxes axes_;
  LlmSettings settings_;
  std::string trial_id_;
  std::size_t agents_;
  int rounds_;
  std::vector<std::string> completions_;
};

std::string format_reminder(const CongestionNetwork& network,
                            const std::string& problem);

}  // namespace routegame
