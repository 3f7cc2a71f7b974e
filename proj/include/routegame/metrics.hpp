#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "routegame/history.hpp"
#include "routegame/network.hpp"

namespace routegame {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Agents on the focal route: the less-congested of O-L-D / O-R-D in game A,
// the bridge O-L-R-D in game B. `distribution` is in catalog order.
Cost focal_count(const CongestionNetwork& network,
                 std::span<const Cost> distribution);
bool has_focal_route(const CongestionNetwork& network);

// Per agent, the number of rounds t >= 2 whose route differs from round t-1.
std::vector<int> switch_counts(const GameHistory& history);

// L1 distance of the route counts from the pure equilibrium: (n/2, n/2) for
// game A, (0, 0, n) for game B. n is the sum of the distribution.
Cost deviation_score(const CongestionNetwork& network,
                     std::span<const Cost> distribution);

// Kendall tau-b; nullopt when either series is constant.
std::optional<double> kendall_tau(std::span<const double> xs,
                                  std::span<const double> ys);

double mean(std::span<const double> values);
// Sample (n-1) standard deviation; 0 for fewer than two values.
double sample_sd(std::span<const double> values);
// sample_sd / sqrt(n); NaN for fewer than two values.
double standard_error(std::span<const double> values);

// One metric over a set of trials.
struct MetricSeries {
  std::string name;
  std::vector<std::vector<double>> per_round;  // [trial][round]
  std::vector<double> per_trial;               // aggregate of each trial
  double mean = 0.0;                           // across trials
  double se = 0.0;                             // across trials

  // Mean and standard error over trials at each round.
  std::vector<double> round_means() const;
  std::vector<double> round_ses() const;
};

// Builds a series whose per-trial aggregate is the mean over rounds.
MetricSeries make_series(std::string name,
                         std::vector<std::vector<double>> per_round);

struct DeviationSeries {
  std::vector<Cost> scores;  // per round
  std::optional<double> tau;
  bool scaled_targets = false;  // n != 18
};

DeviationSeries deviation_series(const CongestionNetwork& network,
                                 const GameHistory& history);

struct ExperimentSummary {
  std::string label;
  std::string game;
  std::vector<std::string> route_names;
  std::size_t trials = 0;
  std::size_t rounds = 0;
  std::size_t agents = 0;

  // Route counts averaged over rounds then trials. Two spreads are reported:
  // route_se is the standard error of the per-trial means across trials,
  // route_sd the sample SD of all round x trial counts pooled.
  std::vector<double> route_means;
  std::vector<double> route_se;
  std::vector<double> route_sd;

  MetricSeries focal;
  MetricSeries payoff;
  MetricSeries regret;
  MetricSeries switches;  // per-trial aggregate = mean switch count per agent

  std::vector<DeviationSeries> deviation;  // per trial
  std::optional<double> mean_tau;          // over trials with a defined tau
  std::size_t tau_undefined = 0;
};

struct TrialData {
  const CongestionNetwork* network;
  const GameHistory* history;
};

// Throws MetricError on an empty set or when trials disagree on network,
// agent count or round count.
ExperimentSummary summarize_experiment(std::string label,
                                       std::span<const TrialData> trials);

}  // namespace routegame
