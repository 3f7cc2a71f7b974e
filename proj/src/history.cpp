#include "routegame/history.hpp"

#include <stdexcept>

namespace routegame {

std::map<std::string, Cost> RoundRecord::distribution_by_name(
    const CongestionNetwork& network) const {
  std::map<std::string, Cost> out;
  for (RouteIndex r = 0; r < distribution.size(); ++r)
    out[network.routes().at(r).name] = distribution[r];
  return out;
}

RoundRecord evaluate_round(const CongestionNetwork& network, int round,
                           ActionProfile choices) {
  RoundRecord record;
  record.round = round;
  record.distribution = route_counts(network, choices);
  record.payoffs = payoffs(network, choices);
  record.regrets = regrets(network, choices);
  record.choices = std::move(choices);
  return record;
}

GameHistory::GameHistory(std::vector<RoundRecord> records) {
  for (auto& r : records) append(std::move(r));
}

void GameHistory::append(RoundRecord record) {
  const int expected = static_cast<int>(records_.size()) + 1;
  if (record.round != expected)
    throw std::invalid_argument("round " + std::to_string(record.round) +
                                " appended where round " +
                                std::to_string(expected) + " was expected");
  records_.push_back(std::move(record));
}

}  // namespace routegame
