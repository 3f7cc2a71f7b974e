#include "routegame/repr.hpp"

#include <algorithm>
#include <numeric>

namespace routegame {

namespace {

constexpr std::string_view kOutputInstructions =
    "The output should be formatted as a JSON instance that conforms to the "
    "JSON schema below.\n\n"
    "As an example, for the schema {\"properties\": {\"foo\": {\"title\": "
    "\"Foo\", \"description\": \"a list of strings\", \"type\": \"array\", "
    "\"items\": {\"type\": \"string\"}}}, \"required\": [\"foo\"]}\n"
    "the object {\"foo\": [\"bar\", \"baz\"]} is a well-formatted instance of "
    "the schema. The object {\"properties\": {\"foo\": [\"bar\", \"baz\"]}} is "
    "not well-formatted.\n\n"
    "Here is the output schema:\n\n"
    "```\n"
    "{\"properties\": {\"route\": {\"title\": \"Route\", \"description\": "
    "\"choice of route\", \"type\": \"string\"}}, \"required\": [\"route\"]}\n"
    "```";

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string segment_line(const Edge& e) {
  std::string fn;
  if (e.cost.slope != 0) fn = std::to_string(e.cost.slope) + " * X";
  if (e.cost.intercept != 0 || e.cost.slope == 0) {
    if (!fn.empty()) fn += " + ";
    fn += std::to_string(e.cost.intercept);
  }
  return "Segment " + e.label() + ", cost function: " + fn;
}

bool same_layout(const CongestionNetwork& a, const CongestionNetwork& b) {
  return a.nodes() == b.nodes() && a.edges() == b.edges() &&
         a.routes() == b.routes();
}

}  // namespace

std::string ReprAxes::code() const {
  std::string out;
  out += style == PromptStyle::FullChat ? 'F' : 'S';
  out += '-';
  out += reward == RewardInfo::Payoff ? 'P' : 'R';
  out += action == ActionInfo::Everyone ? 'E' : 'O';
  return out;
}

ReprAxes ReprAxes::parse(std::string_view code) {
  if (code.size() != 4 || code[1] != '-')
    throw ReprError("malformed representation code '" + std::string(code) +
                    "' (expected e.g. S-RO)");
  ReprAxes axes;
  switch (code[0]) {
    case 'F': axes.style = PromptStyle::FullChat; break;
    case 'S': axes.style = PromptStyle::Summary; break;
    default: throw ReprError("unknown prompting style in '" + std::string(code) + "'");
  }
  switch (code[2]) {
    case 'P': axes.reward = RewardInfo::Payoff; break;
    case 'R': axes.reward = RewardInfo::Regret; break;
    default: throw ReprError("unknown reward info in '" + std::string(code) + "'");
  }
  switch (code[3]) {
    case 'E': axes.action = ActionInfo::Everyone; break;
    case 'O': axes.action = ActionInfo::OwnOnly; break;
    default: throw ReprError("unknown action info in '" + std::string(code) + "'");
  }
  return axes;
}

std::array<ReprAxes, 8> ReprAxes::all() {
  std::array<ReprAxes, 8> out;
  std::size_t i = 0;
  for (auto style : {PromptStyle::FullChat, PromptStyle::Summary})
    for (auto reward : {RewardInfo::Payoff, RewardInfo::Regret})
      for (auto action : {ActionInfo::Everyone, ActionInfo::OwnOnly})
        out[i++] = ReprAxes{action, reward, style};
  return out;
}

std::string_view to_string(ActionInfo a) {
  return a == ActionInfo::Everyone ? "everyone" : "own-only";
}
std::string_view to_string(RewardInfo r) {
  return r == RewardInfo::Payoff ? "payoff" : "regret";
}
std::string_view to_string(PromptStyle s) {
  return s == PromptStyle::FullChat ? "full-chat" : "summary";
}

std::string render_system_prompt(const CongestionNetwork& network,
                                 std::size_t agents, int rounds) {
  const bool is_a = same_layout(network, game_a());
  const bool is_b = same_layout(network, game_b());
  if (!is_a && !is_b)
    throw ReprError("no instruction template for network '" + network.name() +
                    "'; only the canonical two- and three-route networks are "
                    "supported");
  if (agents < 4)
    throw ReprError("instruction template needs at least 4 participants");

  const std::string n = std::to_string(agents);
  const std::string t = std::to_string(rounds);
  const std::string k = std::to_string(network.route_count());

  std::vector<std::string> routes_quoted;
  for (const auto& name : network.route_names())
    routes_quoted.push_back("'" + name + "'");

  std::vector<std::string> segments;
  for (const Edge& e : network.edges()) segments.push_back(segment_line(e));

  std::vector<std::string> paras;
  paras.push_back(
      "You will be participating in an experiment on route selection in "
      "traffic networks.\n"
      "During this experiment you'll be asked to make many decisions about "
      "route selection in a traffic network game.\n"
      "Your payoff will depend on the decisions you make as well as the "
      "decisions made by the other participants. There are " + n +
      " participants in this experiment, including yourself, who will be "
      "asked to serve as drivers and choose a route to travel in a traffic "
      "network game that is described below.\n"
      "You will play the game for " + t + " identical rounds.");
  paras.push_back("Consider the very simple traffic network described below.");
  paras.push_back("Nodes:");
  paras.push_back(join(network.nodes(), " "));
  paras.push_back("Segments and associated costs:");
  paras.insert(paras.end(), segments.begin(), segments.end());
  paras.push_back(
      "Each driver is required to choose one of " + k +
      " routes to travel from the starting point, denoted by O, to the final "
      "destination, denoted by D. There are " + k +
      " alternative routes and they are denoted by [" +
      join(routes_quoted, ", ") + "].");
  paras.push_back(
      "Travel is always costly in terms of the time needed to complete a "
      "segment of the road, tolls, fuel etc. The travel costs are written "
      "near each segment of the route you choose. For example, if you choose "
      "route O-L-D, you will be charged a total cost of 10X + 210 where X "
      "indicates the number of participants who choose segment O-L to travel "
      "from O to L plus a fixed cost of 210 for traveling on segment L-D.");
  paras.push_back(
      "Similarly, if you choose route O-R-D, you will be charged a total "
      "travel cost of 210 + 10Y, where Y indicates the number of participants "
      "who choose the segment R-D to drive from O to D.\n"
      "Please note that the cost charged for segments O-L and R-D depends on "
      "the number of drivers choosing them.");
  paras.push_back(
      "In contrast, the cost charged for traveling on segments L-D and O-R is "
      "fixed at 210 and does not depend on the number of drivers choosing "
      "them.");
  if (is_b)
    paras.push_back(
        "Finally, if you choose route O-L-R-D, you will be charged a total "
        "travel cost of 10X + 0 + 10Y, where X indicates the number of "
        "participants who choose segment O-L and Y indicates the number of "
        "participants who choose segment R-D.\n"
        "The cost charged for traveling on segment L-R is fixed at 0 and does "
        "not depend on the number of drivers choosing it.");
  paras.push_back(
      "All the drivers make their route choices independently of one another "
      "and leave point O at the same time.");
  paras.push_back("Example.");

  std::string examples =
      "If you happen to be the only driver who chooses route O-L-D, and all "
      "other " + std::to_string(agents - 1) +
      " drivers choose route O-R-D, then your travel cost from point O to "
      "point D is equal to (10 x 1) + 210 = 220.\n"
      "If, on another round, you and 2 more drivers choose route O-R-D and " +
      std::to_string(agents - 3) +
      " other drivers choose route O-L-D, then your travel cost for that "
      "round will be 210 + (10 x 3) = 240.";
  if (is_b) {
    const std::size_t left = (agents - 4) / 2;
    const std::size_t right = agents - 4 - left;
    const auto ol = static_cast<Cost>(left + 4);
    const auto rd = static_cast<Cost>(right + 4);
    examples += "\nIf, on a third round, you and 3 more drivers choose route "
                "O-L-R-D, " + std::to_string(left) +
                " other drivers choose route O-L-D and " +
                std::to_string(right) +
                " other drivers choose route O-R-D, then your travel cost for "
                "that round will be (10 x " + std::to_string(ol) +
                ") + 0 + (10 x " + std::to_string(rd) + ") = " +
                std::to_string(10 * ol + 10 * rd) + ".";
  }
  paras.push_back(examples);
  paras.push_back(
      "At the beginning of each round, you will receive an endowment of " +
      std::to_string(network.endowment()) + " points.\n"
      "Your payoff for each round will be determined by subtracting your "
      "travel cost from your endowment.\n"
      "Your goal is to maximize your payoff (likewise minimize your cost).\n"
      "At the end of each round, you will be informed of the number of "
      "drivers who chose each route and your payoff for that round.\n"
      "All " + t + " rounds have exactly the same structure.");
  paras.emplace_back(kOutputInstructions);
  return join(paras, "\n\n");
}

std::string render_distribution(const CongestionNetwork& network,
                                 const RoundRecord& record, AgentIndex agent) {
  const RouteIndex own = record.choices.choices.at(agent);
  std::vector<RouteIndex> order(record.distribution.size());
  std::iota(order.begin(), order.end(), RouteIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](RouteIndex a, RouteIndex b) {
    if (record.distribution[a] != record.distribution[b])
      return record.distribution[a] > record.distribution[b];
    return a == own && b != own;
  });
  std::string out = "{";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) out += ", ";
    out += "'" + network.routes()[order[i]].name +
           "': " + std::to_string(record.distribution[order[i]]);
  }
  return out + "}";
}

std::string render_round_block(const CongestionNetwork& network,
                               const RoundRecord& record, AgentIndex agent,
                               const ReprAxes& axes) {
  const RouteIndex own = record.choices.choices.at(agent);
  std::string out = "Your Choice: " + network.routes().at(own).name;
  if (axes.action == ActionInfo::Everyone)
    out += "\n\nRoute Choice Distribution: " +
           render_distribution(network, record, agent);
  if (axes.reward == RewardInfo::Payoff)
    out += "\n\nYour Payoff: " + std::to_string(record.payoffs.at(agent));
  else
    out += "\n\nYour Regret: " + std::to_string(record.regrets.at(agent));
  return out;
}

std::string render_summary(const CongestionNetwork& network,
                           const GameHistory& history, AgentIndex agent,
                           const ReprAxes& axes) {
  std::string out = "You are agent " + std::to_string(agent) +
                    ".\n\nSummary of previous rounds:";
  for (const auto& record : history.records())
    out += "\n\nRound " + std::to_string(record.round) + ":\n\n" +
           render_round_block(network, record, agent, axes);
  return out;
}

std::string render_decision_request(const CongestionNetwork& network) {
  return "The available routes are: " + join(network.route_names(), ", ") +
         "\n\nChoose exactly one of these routes for the next round. Think "
         "step-by-step about which route gives you the highest payoff, then "
         "give your final answer as a JSON instance that conforms to the "
         "output schema above.";
}

std::vector<ChatTurn> render_context(const GameHistory& history,
                                     AgentIndex agent, const ReprAxes& axes,
                                     const CongestionNetwork& network,
                                     std::span<const std::string> completions,
                                     std::size_t agents, int rounds) {
  std::vector<ChatTurn> turns;
  turns.push_back({Role::System, render_system_prompt(network, agents, rounds)});
  const std::string request = render_decision_request(network);

  if (history.empty()) {
    turns.push_back({Role::Environment, request});
    return turns;
  }

  if (axes.style == PromptStyle::Summary) {
    turns.push_back({Role::Environment,
                     render_summary(network, history, agent, axes) + "\n\n" +
                         request});
    return turns;
  }

  if (completions.size() < history.size())
    throw ReprError("full-chat context for agent " + std::to_string(agent) +
                    " needs " + std::to_string(history.size()) +
                    " stored completions, have " +
                    std::to_string(completions.size()));
  for (std::size_t i = 0; i < history.size(); ++i) {
    turns.push_back({Role::Agent, completions[i]});
    std::string env = "You are agent " + std::to_string(agent) +
                      ".\n\nSummary of previous round:\n\n" +
                      render_round_block(network, history[i], agent, axes);
    if (i + 1 == history.size()) env += "\n\n" + request;
    turns.push_back({Role::Environment, std::move(env)});
  }
  return turns;
}

}  // namespace routegame
