#include "routegame/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace routegame {

namespace {

// Keeps a long losing streak from underflowing a weight to zero.
constexpr double kWeightFloor = 1e-300;

void rescale_to_max_one(std::vector<double>& w) {
  const double top = *std::max_element(w.begin(), w.end());
  for (double& x : w) x = std::max(x / top, kWeightFloor);
}

void check_loss(double loss) {
  if (!(loss >= 0.0 && loss <= 1.0))
    throw std::invalid_argument("loss " + std::to_string(loss) +
                                " outside [0, 1]");
}

std::vector<double> normalized(const std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> p(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = w[i] / total;
  return p;
}

}  // namespace

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Uniform: return "uniform";
    case AgentKind::BestResponse: return "best_response";
    case AgentKind::Mwu: return "mwu";
    case AgentKind::Exp3: return "exp3";
    case AgentKind::Llm: return "llm";
  }
  return "unknown";
}

AgentKind parse_agent_kind(std::string_view name) {
  for (auto kind : {AgentKind::Uniform, AgentKind::BestResponse, AgentKind::Mwu,
                    AgentKind::Exp3, AgentKind::Llm})
    if (to_string(kind) == name) return kind;
  throw std::invalid_argument(
      "unknown agent kind '" + std::string(name) +
      "' (expected uniform, best_response, mwu, exp3 or llm)");
}

WeightState initial_weights(std::size_t k, double learning_rate,
                            double exploration_rate) {
  if (k == 0) throw std::invalid_argument("need at least one route");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("learning rate must be > 0");
  if (!(exploration_rate >= 0.0 && exploration_rate <= 1.0))
    throw std::invalid_argument("exploration rate must lie in [0, 1]");
  return WeightState{std::vector<double>(k, 1.0), learning_rate,
                     exploration_rate};
}

std::vector<double> mwu_probabilities(const WeightState& state) {
  return normalized(state.weights);
}

WeightState mwu_update(WeightState state, std::span<const double> losses) {
  if (losses.size() != state.k())
    throw std::invalid_argument("expected one loss per route");
  for (double l : losses) check_loss(l);
  for (std::size_t i = 0; i < state.k(); ++i)
    state.weights[i] *= std::exp(-state.learning_rate * losses[i]);
  rescale_to_max_one(state.weights);
  return state;
}

std::vector<double> exp3_probabilities(const WeightState& state) {
  auto p = normalized(state.weights);
  const double gamma = state.exploration_rate;
  const double floor = gamma / static_cast<double>(state.k());
  for (double& x : p) x = (1.0 - gamma) * x + floor;
  return p;
}

WeightState exp3_update(WeightState state, RouteIndex played, double loss,
                        double prob_played) {
  if (played >= state.k()) throw std::invalid_argument("played route out of range");
  if (!(prob_played > 0.0))
    throw std::invalid_argument("probability of the played route must be > 0");
  check_loss(loss);
  state.weights[played] *= std::exp(-state.learning_rate * loss / prob_played);
  rescale_to_max_one(state.weights);
  return state;
}

double loss_from_payoff(Cost payoff, Cost endowment) {
  if (endowment <= 0) throw std::invalid_argument("endowment must be positive");
  if (payoff < 0 || payoff > endowment)
    throw std::invalid_argument("payoff " + std::to_string(payoff) +
                                " outside [0, " + std::to_string(endowment) + "]");
  return 1.0 - static_cast<double>(payoff) / static_cast<double>(endowment);
}

RouteIndex best_response(const CongestionNetwork& network,
                         const RoundRecord& last, AgentIndex agent) {
  const RouteIndex current = last.choices.choices.at(agent);
  const auto cf =
      counterfactual_payoffs_from_counts(network, last.distribution, current);
  const Cost best = *std::max_element(cf.begin(), cf.end());
  if (cf[current] == best) return current;
  return static_cast<RouteIndex>(
      std::find(cf.begin(), cf.end(), best) - cf.begin());
}

RouteIndex UniformRandomPolicy::decide(const DecisionContext& ctx) {
  return uniform_index(ctx.network.route_count(), ctx.rng);
}

RouteIndex BestResponsePolicy::decide(const DecisionContext& ctx) {
  if (ctx.history.empty())
    return uniform_index(ctx.network.route_count(), ctx.rng);
  return best_response(ctx.network, ctx.history.back(), ctx.agent);
}

MwuPolicy::MwuPolicy(std::size_t routes, double eta)
    : state_(initial_weights(routes, eta)) {}

RouteIndex MwuPolicy::decide(const DecisionContext& ctx) {
  const auto p = mwu_probabilities(state_);
  return sample_index(p, ctx.rng);
}

void MwuPolicy::observe(const CongestionNetwork& network,
                        const RoundRecord& record, AgentIndex agent) {
  const auto cf = counterfactual_payoffs_from_counts(
      network, record.distribution, record.choices.choices.at(agent));
  std::vector<double> losses;
  losses.reserve(cf.size());
  for (Cost payoff : cf) losses.push_back(loss_from_payoff(payoff, network.endowment()));
  state_ = mwu_update(std::move(state_), losses);
}

Exp3Policy::Exp3Policy(std::size_t routes, double eta, double gamma)
    : state_(initial_weights(routes, eta, gamma)) {}

RouteIndex Exp3Policy::decide(const DecisionContext& ctx) {
  const auto p = exp3_probabilities(state_);
  const RouteIndex choice = sample_index(p, ctx.rng);
  last_prob_ = p[choice];
  return choice;
}

void Exp3Policy::observe(const CongestionNetwork& network,
                         const RoundRecord& record, AgentIndex agent) {
  const RouteIndex played = record.choices.choices.at(agent);
  const double loss = loss_from_payoff(record.payoffs.at(agent), network.endowment());
  state_ = exp3_update(std::move(state_), played, loss, last_prob_);
}

std::string format_reminder(const CongestionNetwork& network,
                            const std::string& problem) {
  std::string routes;
  for (const auto& name : network.route_names()) {
    if (!routes.empty()) routes += ", ";
    routes += name;
  }
  return "Your previous answer could not be used (" + problem +
         "). Reply with a JSON object of the form {\"route\": \"<route>\"} "
         "where <route> is exactly one of: " + routes + ".";
}

LlmPolicy::LlmPolicy(std::shared_ptr<Backend> backend,
                     std::shared_ptr<Transcript> transcript, ReprAxes axes,
                     LlmSettings settings, std::string trial_id,
                     std::size_t agents, int rounds)
    : backend_(std::move(backend)),
      transcript_(std::move(transcript)),
      axes_(axes),
      settings_(std::move(settings)),
      trial_id_(std::move(trial_id)),
      agents_(agents),
      rounds_(rounds) {
  if (!backend_) throw std::invalid_argument("LLM policy needs a backend");
  if (!transcript_) transcript_ = std::make_shared<Transcript>();
  if (settings_.max_attempts < 1)
    throw std::invalid_argument("LLM policy needs at least one attempt");
}

RouteIndex LlmPolicy::decide(const DecisionContext& ctx) {
  const auto turns = render_context(ctx.history, ctx.agent, axes_, ctx.network,
                                    completions_, agents_, rounds_);
  auto messages = to_messages(turns);
  const auto valid = ctx.network.route_names();
  std::string last_problem;

  for (int attempt = 1; attempt <= settings_.max_attempts; ++attempt) {
    const CompletionKey key{trial_id_, ctx.agent, ctx.round, attempt};
    CompletionRequest request{settings_.model, settings_.temperature, messages};
    TranscriptEntry entry{key, messages, {}, {}, {}, 0.0, {}, {}};

    CompletionResponse response;
    try {
      response = backend_->complete(request, key);
    } catch (const std::exception& e) {
      entry.error = e.what();
      transcript_->append(std::move(entry));
      throw;
    }
    entry.response = response.text;
    entry.latency_ms = response.latency_ms;
    entry.prompt_tokens = response.prompt_tokens;
    entry.completion_tokens = response.completion_tokens;

    try {
      const std::string route = parse_route(response.text, valid);
      transcript_->append(std::move(entry));
      completions_.push_back(response.text);
      return *ctx.network.find_route(route);
    } catch (const RouteParseError& e) {
      last_problem = e.what();
      entry.rejected = last_problem;
      transcript_->append(std::move(entry));
      messages.push_back({"assistant", response.text});
      messages.push_back({"user", format_reminder(ctx.network, last_problem)});
    }
  }
  throw LlmDecisionError("agent " + std::to_string(ctx.agent) + " gave no usable route in " +
                         std::to_string(settings_.max_attempts) +
                         " attempts: " + last_problem);
}

}  // namespace routegame
