#pragma once

// Congestion networks with affine edge costs, and the payoff/regret algebra
// of one simultaneous round played on them.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace routegame {

// Costs, payoffs and regrets are exact integers for every network whose edge
// coefficients are integers.
using Cost = std::int64_t;
using RouteIndex = std::size_t;
using AgentIndex = std::size_t;

class NetworkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidProfile : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cost of traversing an edge carrying `load` agents: slope * load + intercept.
struct EdgeCost {
  Cost slope = 0;
  Cost intercept = 0;

  Cost at(Cost load) const { return slope * load + intercept; }
  bool operator==(const EdgeCost&) const = default;
};

struct Edge {
  std::string from;
  std::string to;
  EdgeCost cost;

  std::string label() const { return from + "-" + to; }
  bool operator==(const Edge&) const = default;
};

struct Route {
  std::string name;                // hyphen-joined node sequence, e.g. "O-L-D"
  std::vector<std::size_t> edges;  // indices into CongestionNetwork::edges()
  bool operator==(const Route&) const = default;
};

// Joint route choice of all agents in one round: choices[i] is agent i's route.
struct ActionProfile {
  std::vector<RouteIndex> choices;

  std::size_t size() const { return choices.size(); }
  bool operator==(const ActionProfile&) const = default;
};

class CongestionNetwork {
 public:
  // Routes are given as node sequences from `origin` to `destination`; every
  // consecutive pair must be an existing directed edge.
  CongestionNetwork(std::string name, std::vector<std::string> nodes,
                    std::vector<Edge> edges,
                    const std::vector<std::vector<std::string>>& route_paths,
                    Cost endowment, std::size_t default_agents,
                    std::string origin = "O", std::string destination = "D");

  const std::string& name() const { return name_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Route>& routes() const { return routes_; }
  const std::string& origin() const { return origin_; }
  const std::string& destination() const { return destination_; }
  Cost endowment() const { return endowment_; }
  std::size_t default_agents() const { return default_agents_; }
  std::size_t route_count() const { return routes_.size(); }

  std::vector<std::string> route_names() const;
  std::optional<RouteIndex> find_route(std::string_view name) const;
  std::optional<std::size_t> find_edge(std::string_view from,
                                       std::string_view to) const;
  // Node sequence of a route, e.g. {"O", "L", "D"}.
  std::vector<std::string> route_nodes(RouteIndex route) const;

  bool operator==(const CongestionNetwork&) const = default;

 private:
  std::string name_;
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::vector<Route> routes_;
  std::string origin_;
  std::string destination_;
  Cost endowment_ = 0;
  std::size_t default_agents_ = 0;
};

// The two-route network: O-L (10x), O-R (210), L-D (210), R-D (10x).
CongestionNetwork game_a();
// game_a() plus the zero-cost bridge L-R and route O-L-R-D.
CongestionNetwork game_b();
// "A" or "B"; anything else throws NetworkError.
CongestionNetwork canonical_game(std::string_view id);

// Throws InvalidProfile if any choice indexes a missing route.
void validate_profile(const CongestionNetwork& network,
                      const ActionProfile& profile);

// Number of agents on each route, in route-catalog order.
std::vector<Cost> route_counts(const CongestionNetwork& network,
                               const ActionProfile& profile);

// Per-edge loads indexed like network.edges().
std::vector<Cost> edge_loads(const CongestionNetwork& network,
                             const ActionProfile& profile);
std::vector<Cost> edge_loads_from_counts(const CongestionNetwork& network,
                                         std::span<const Cost> counts);

Cost route_cost(const CongestionNetwork& network, RouteIndex route,
                std::span<const Cost> loads);

std::vector<Cost> payoffs(const CongestionNetwork& network,
                          const ActionProfile& profile);

// Payoff the agent would get on each route if it alone deviated there, with
// everyone else's choice held fixed. Entry at the agent's own route equals
// its realized payoff.
std::vector<Cost> counterfactual_payoffs(const CongestionNetwork& network,
                                         const ActionProfile& profile,
                                         AgentIndex agent);
// Same, from route counts (which include the agent on `own_route`).
std::vector<Cost> counterfactual_payoffs_from_counts(
    const CongestionNetwork& network, std::span<const Cost> counts,
    RouteIndex own_route);

Cost regret(const CongestionNetwork& network, const ActionProfile& profile,
            AgentIndex agent);
// Regret of every agent; agents sharing a route share a value.
std::vector<Cost> regrets(const CongestionNetwork& network,
                          const ActionProfile& profile);

// Builds a profile where the first counts[0] agents take route 0, the next
// counts[1] route 1, and so on.
ActionProfile profile_from_counts(std::span<const Cost> counts);

}  // namespace routegame
