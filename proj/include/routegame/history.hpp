#pragma once

#include <map>
#include <string>
#include <vector>

#include "routegame/network.hpp"

namespace routegame {

// Everything the environment stores about one round.
struct RoundRecord {
  int round = 0;  // 1-based
  ActionProfile choices;
  std::vector<Cost> distribution;  // agents per route, route-catalog order
  std::vector<Cost> payoffs;       // per agent
  std::vector<Cost> regrets;       // per agent

  std::size_t agents() const { return choices.size(); }
  std::map<std::string, Cost> distribution_by_name(
      const CongestionNetwork& network) const;
  bool operator==(const RoundRecord&) const = default;
};

// Evaluates a joint choice on a freshly reset network.
RoundRecord evaluate_round(const CongestionNetwork& network, int round,
                           ActionProfile choices);

class GameHistory {
 public:
  GameHistory() = default;
  explicit GameHistory(std::vector<RoundRecord> records);

  // Throws std::invalid_argument unless record.round == size() + 1.
  void append(RoundRecord record);

  const std::vector<RoundRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const RoundRecord& operator[](std::size_t i) const { return records_[i]; }
  const RoundRecord& back() const { return records_.back(); }

  bool operator==(const GameHistory&) const = default;

 private:
  std::vector<RoundRecord> records_;
};

}  // namespace routegame
