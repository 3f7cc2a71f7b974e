#pragma once

// Natural-language state representations of a game history.
//
// A representation is a point on three axes: whose actions are shown
// (own only / everyone's route counts), what reward is shown (payoff /
// regret) and how the history is packaged (full chat transcript / one
// cumulative summary). Codes are written style-reward-action, e.g. "S-RO".

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "routegame/history.hpp"
#include "routegame/network.hpp"

namespace routegame {

enum class ActionInfo { OwnOnly, Everyone };
enum class RewardInfo { Payoff, Regret };
enum class PromptStyle { FullChat, Summary };

class ReprError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ReprAxes {
  ActionInfo action = ActionInfo::OwnOnly;
  RewardInfo reward = RewardInfo::Regret;
  PromptStyle style = PromptStyle::Summary;

  // {F|S}-{P|R}{E|O}
  std::string code() const;
  static ReprAxes parse(std::string_view code);
  // All eight representations in table order: F-PE F-PO F-RE F-RO S-PE ...
  static std::array<ReprAxes, 8> all();

  bool operator==(const ReprAxes&) const = default;
};

std::string_view to_string(ActionInfo a);
std::string_view to_string(RewardInfo r);
std::string_view to_string(PromptStyle s);

enum class Role { System, Environment, Agent };

struct ChatTurn {
  Role role = Role::Environment;
  std::string content;
  bool operator==(const ChatTurn&) const = default;
};

// Game instructions for the canonical networks, including the JSON output
// schema block. `agents` and `rounds` fill in the participant and round
// counts. Throws ReprError for a network outside the canonical family.
std::string render_system_prompt(const CongestionNetwork& network,
                                 std::size_t agents = 18, int rounds = 40);

// Python-dict style, descending count; ties put the agent's own route first,
// then catalog order. E.g. {'O-R-D': 13, 'O-L-D': 5}
std::string render_distribution(const CongestionNetwork& network,
                                 const RoundRecord& record, AgentIndex agent);

// One round of feedback for one agent:
//   Your Choice: <route>
//   Route Choice Distribution: {...}      (Everyone only)
//   Your Payoff: <v> | Your Regret: <v>
// Lines are separated by a blank line.
std::string render_round_block(const CongestionNetwork& network,
                               const RoundRecord& record, AgentIndex agent,
                               const ReprAxes& axes);

// "You are agent <id>.\n\nSummary of previous rounds:\n\nRound 1:\n\n<block>..."
std::string render_summary(const CongestionNetwork& network,
                           const GameHistory& history, AgentIndex agent,
                           const ReprAxes& axes);

std::string render_decision_request(const CongestionNetwork& network);

// The message list for the agent's next decision.
//
// Summary:  [system, environment(summary + request)]
// FullChat: [system, agent(c_1), environment(round 1), ..., agent(c_t),
//            environment(round t + request)]
// With an empty history both are [system, environment(request)].
// `completions` holds the agent's stored raw replies, one per past round;
// FullChat throws ReprError when fewer than history.size() are given.
std::vector<ChatTurn> render_context(const GameHistory& history,
                                     AgentIndex agent, const ReprAxes& axes,
                                     const CongestionNetwork& network,
                                     std::span<const std::string> completions,
                                     std::size_t agents = 18, int rounds = 40);

}  // namespace routegame
