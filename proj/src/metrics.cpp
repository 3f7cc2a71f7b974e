#include "routegame/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace routegame {

namespace {

enum class Family { TwoRoute, Bridge };

std::optional<Family> family_of(const CongestionNetwork& network) {
  if (network.find_route("O-L-R-D")) return Family::Bridge;
  if (network.route_count() == 2 && network.find_route("O-L-D") &&
      network.find_route("O-R-D"))
    return Family::TwoRoute;
  return std::nullopt;
}

Family require_family(const CongestionNetwork& network) {
  auto f = family_of(network);
  if (!f)
    throw MetricError("no focal route or equilibrium defined for network '" +
                      network.name() + "'");
  return *f;
}

void check_distribution(const CongestionNetwork& network,
                        std::span<const Cost> distribution) {
  if (distribution.size() != network.route_count())
    throw MetricError("distribution has " + std::to_string(distribution.size()) +
                      " entries, network '" + network.name() + "' has " +
                      std::to_string(network.route_count()) + " routes");
}

// Pairs tied in a sorted sequence, sum of t(t-1)/2 over runs.
template <typename Eq>
long long tied_pairs(std::size_t n, Eq equal) {
  long long total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      total += static_cast<long long>(run) * static_cast<long long>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Sorts v ascending and returns the number of inversions removed.
long long merge_count(std::vector<double>& v, std::vector<double>& buf,
                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

bool has_focal_route(const CongestionNetwork& network) {
  return family_of(network).has_value();
}

Cost focal_count(const CongestionNetwork& network,
                 std::span<const Cost> distribution) {
  check_distribution(network, distribution);
  if (require_family(network) == Family::Bridge)
    return distribution[*network.find_route("O-L-R-D")];
  return std::min(distribution[*network.find_route("O-L-D")],
                  distribution[*network.find_route("O-R-D")]);
}

std::vector<int> switch_counts(const GameHistory& history) {
  if (history.empty()) return {};
  const std::size_t n = history[0].agents();
  std::vector<int> counts(n, 0);
  for (std::size_t t = 1; t < history.size(); ++t)
    for (std::size_t i = 0; i < n; ++i)
      if (history[t].choices.choices[i] != history[t - 1].choices.choices[i])
        ++counts[i];
  return counts;
}

Cost deviation_score(const CongestionNetwork& network,
                     std::span<const Cost> distribution) {
  check_distribution(network, distribution);
  const Cost n = std::accumulate(distribution.begin(), distribution.end(), Cost{0});
  if (require_family(network) == Family::Bridge) {
    Cost d = 0;
    for (RouteIndex r = 0; r < distribution.size(); ++r)
      d += network.routes()[r].name == "O-L-R-D" ? std::abs(distribution[r] - n)
                                                 : distribution[r];
    return d;
  }
  if (n % 2 != 0)
    throw MetricError("two-route equilibrium split needs an even agent count");
  return std::abs(distribution[0] - n / 2) + std::abs(distribution[1] - n / 2);
}

std::optional<double> kendall_tau(std::span<const double> xs,
                                  std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw MetricError("kendall_tau: series lengths differ (" +
                      std::to_string(xs.size()) + " vs " +
                      std::to_string(ys.size()) + ")");
  const std::size_t n = xs.size();
  if (n < 2) throw MetricError("kendall_tau needs at least two points");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] != xs[b] ? xs[a] < xs[b] : ys[a] < ys[b];
  });

  const long long pairs = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  const long long x_ties =
      tied_pairs(n, [&](std::size_t a, std::size_t b) { return xs[idx[a]] == xs[idx[b]]; });
  const long long joint_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return xs[idx[a]] == xs[idx[b]] && ys[idx[a]] == ys[idx[b]];
  });

  std::vector<double> y_sorted(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) y_sorted[i] = ys[idx[i]];
  const long long swaps = merge_count(y_sorted, buf, 0, n);
  const long long y_ties =
      tied_pairs(n, [&](std::size_t a, std::size_t b) { return y_sorted[a] == y_sorted[b]; });

  const long long x_pairs = pairs - x_ties;
  const long long y_pairs = pairs - y_ties;
  if (x_pairs == 0 || y_pairs == 0) return std::nullopt;
  // concordant - discordant
  const long long s = pairs - x_ties - y_ties + joint_ties - 2 * swaps;
  return static_cast<double>(s) /
         std::sqrt(static_cast<double>(x_pairs) * static_cast<double>(y_pairs));
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double standard_error(std::span<const double> values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
}

std::vector<double> MetricSeries::round_means() const {
  std::vector<double> out;
  if (per_round.empty()) return out;
  for (std::size_t t = 0; t < per_round.front().size(); ++t) {
    std::vector<double> col;
    for (const auto& trial : per_round) col.push_back(trial[t]);
    out.push_back(routegame::mean(col));
  }
  return out;
}

std::vector<double> MetricSeries::round_ses() const {
  std::vector<double> out;
  if (per_round.empty()) return out;
  for (std::size_t t = 0; t < per_round.front().size(); ++t) {
    std::vector<double> col;
    for (const auto& trial : per_round) col.push_back(trial[t]);
    out.push_back(standard_error(col));
  }
  return out;
}

MetricSeries make_series(std::string name,
                         std::vector<std::vector<double>> per_round) {
  MetricSeries s;
  s.name = std::move(name);
  s.per_round = std::move(per_round);
  for (const auto& trial : s.per_round) s.per_trial.push_back(mean(trial));
  s.mean = mean(s.per_trial);
  s.se = standard_error(s.per_trial);
  return s;
}

DeviationSeries deviation_series(const CongestionNetwork& network,
                                 const GameHistory& history) {
  DeviationSeries out;
  std::vector<double> rounds, scores;
  for (const auto& record : history.records()) {
    out.scores.push_back(deviation_score(network, record.distribution));
    rounds.push_back(record.round);
    scores.push_back(static_cast<double>(out.scores.back()));
  }
  if (!history.empty()) out.scaled_targets = history[0].agents() != 18;
  if (rounds.size() >= 2) out.tau = kendall_tau(rounds, scores);
  return out;
}

ExperimentSummary summarize_experiment(std::string label,
                                       std::span<const TrialData> trials) {
  if (trials.empty())
    throw MetricError("cannot summarize '" + label + "': no successful trials");
  const CongestionNetwork& network = *trials.front().network;
  const std::size_t rounds = trials.front().history->size();
  if (rounds == 0) throw MetricError("trial with an empty history");
  const std::size_t agents = (*trials.front().history)[0].agents();
  for (const auto& t : trials) {
    if (!(*t.network == network))
      throw MetricError("trials in '" + label + "' use different networks");
    if (t.history->size() != rounds || (*t.history)[0].agents() != agents)
      throw MetricError("trials in '" + label +
                        "' differ in round or agent count");
  }

  ExperimentSummary s;
  s.label = std::move(label);
  s.game = network.name();
  s.route_names = network.route_names();
  s.trials = trials.size();
  s.rounds = rounds;
  s.agents = agents;

  const std::size_t k = network.route_count();
  std::vector<std::vector<double>> trial_route_means(k);
  std::vector<std::vector<double>> pooled(k);
  std::vector<std::vector<double>> focal, payoff, regret, switches;
  const bool focal_defined = has_focal_route(network);

  for (const auto& t : trials) {
    const GameHistory& h = *t.history;
    std::vector<double> f, p, r, sw;
    std::vector<double> route_sum(k, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const RoundRecord& rec = h[i];
      for (std::size_t j = 0; j < k; ++j) {
        route_sum[j] += static_cast<double>(rec.distribution[j]);
        pooled[j].push_back(static_cast<double>(rec.distribution[j]));
      }
      if (focal_defined)
        f.push_back(static_cast<double>(focal_count(network, rec.distribution)));
      std::vector<double> pay(rec.payoffs.begin(), rec.payoffs.end());
      std::vector<double> reg(rec.regrets.begin(), rec.regrets.end());
      p.push_back(mean(pay));
      r.push_back(mean(reg));
      double switched = 0.0;
      if (i > 0)
        for (std::size_t a = 0; a < agents; ++a)
          switched += rec.choices.choices[a] != h[i - 1].choices.choices[a];
      sw.push_back(switched / static_cast<double>(agents));
    }
    for (std::size_t j = 0; j < k; ++j)
      trial_route_means[j].push_back(route_sum[j] / static_cast<double>(h.size()));
    if (focal_defined) focal.push_back(std::move(f));
    payoff.push_back(std::move(p));
    regret.push_back(std::move(r));
    switches.push_back(std::move(sw));
    if (focal_defined) s.deviation.push_back(deviation_series(network, h));
  }

  for (std::size_t j = 0; j < k; ++j) {
    s.route_means.push_back(mean(trial_route_means[j]));
    s.route_se.push_back(standard_error(trial_route_means[j]));
    s.route_sd.push_back(sample_sd(pooled[j]));
  }
  s.focal = make_series("focal", std::move(focal));
  s.payoff = make_series("payoff", std::move(payoff));
  s.regret = make_series("regret", std::move(regret));

  // Per-round switch fractions sum to each trial's mean switch count.
  s.switches = make_series("switches", std::move(switches));
  for (auto& v : s.switches.per_trial) v *= static_cast<double>(rounds);
  s.switches.mean = mean(s.switches.per_trial);
  s.switches.se = standard_error(s.switches.per_trial);

  std::vector<double> taus;
  for (const auto& d : s.deviation) {
    if (d.tau) taus.push_back(*d.tau);
    else ++s.tau_undefined;
  }
  if (!taus.empty()) s.mean_tau = mean(taus);
  return s;
}

}  // namespace routegame
