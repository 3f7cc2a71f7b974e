#include "routegame/network.hpp"

#include <algorithm>
#include <set>

namespace routegame {

namespace {

std::string join_nodes(const std::vector<std::string>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) out += '-';
    out += nodes[i];
  }
  return out;
}

}  // namespace

CongestionNetwork::CongestionNetwork(
    std::string name, std::vector<std::string> nodes, std::vector<Edge> edges,
    const std::vector<std::vector<std::string>>& route_paths, Cost endowment,
    std::size_t default_agents, std::string origin, std::string destination)
    : name_(std::move(name)),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      origin_(std::move(origin)),
      destination_(std::move(destination)),
      endowment_(endowment),
      default_agents_(default_agents) {
  const std::set<std::string> node_set(nodes_.begin(), nodes_.end());
  if (node_set.size() != nodes_.size())
    throw NetworkError("network '" + name_ + "': duplicate node id");
  if (!node_set.contains(origin_) || !node_set.contains(destination_))
    throw NetworkError("network '" + name_ + "': origin/destination not a node");
  if (endowment_ < 0)
    throw NetworkError("network '" + name_ + "': negative endowment");

  std::set<std::pair<std::string, std::string>> seen;
  for (const Edge& e : edges_) {
    if (!node_set.contains(e.from) || !node_set.contains(e.to))
      throw NetworkError("edge " + e.label() + " references an unknown node");
    if (e.cost.slope < 0 || e.cost.intercept < 0)
      throw NetworkError("edge " + e.label() + " has a negative coefficient");
    if (!seen.emplace(e.from, e.to).second)
      throw NetworkError("duplicate edge " + e.label());
  }

  if (route_paths.empty())
    throw NetworkError("network '" + name_ + "' has no routes");
  std::set<std::string> names;
  for (const auto& path : route_paths) {
    if (path.size() < 2 || path.front() != origin_ ||
        path.back() != destination_)
      throw NetworkError("route " + join_nodes(path) + " does not run " +
                         origin_ + " to " + destination_);
    Route route{join_nodes(path), {}};
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      auto edge = find_edge(path[i], path[i + 1]);
      if (!edge)
        throw NetworkError("route " + route.name + " uses missing edge " +
                           path[i] + "-" + path[i + 1]);
      route.edges.push_back(*edge);
    }
    if (!names.insert(route.name).second)
      throw NetworkError("duplicate route " + route.name);
    routes_.push_back(std::move(route));
  }
}

std::vector<std::string> CongestionNetwork::route_names() const {
  std::vector<std::string> out;
  out.reserve(routes_.size());
  for (const auto& r : routes_) out.push_back(r.name);
  return out;
}

std::optional<RouteIndex> CongestionNetwork::find_route(
    std::string_view name) const {
  for (RouteIndex i = 0; i < routes_.size(); ++i)
    if (routes_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> CongestionNetwork::find_edge(
    std::string_view from, std::string_view to) const {
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (edges_[i].from == from && edges_[i].to == to) return i;
  return std::nullopt;
}

std::vector<std::string> CongestionNetwork::route_nodes(
    RouteIndex route) const {
  const Route& r = routes_.at(route);
  std::vector<std::string> out{edges_[r.edges.front()].from};
  for (std::size_t e : r.edges) out.push_back(edges_[e].to);
  return out;
}

CongestionNetwork game_a() {
  return CongestionNetwork("A", {"O", "L", "R", "D"},
                           {{"O", "L", {10, 0}},
                            {"O", "R", {0, 210}},
                            {"L", "D", {0, 210}},
                            {"R", "D", {10, 0}}},
                           {{"O", "L", "D"}, {"O", "R", "D"}}, 400, 18);
}

CongestionNetwork game_b() {
  return CongestionNetwork("B", {"O", "L", "R", "D"},
                           {{"O", "L", {10, 0}},
                            {"O", "R", {0, 210}},
                            {"L", "D", {0, 210}},
                            {"R", "D", {10, 0}},
                            {"L", "R", {0, 0}}},
                           {{"O", "L", "D"}, {"O", "R", "D"}, {"O", "L", "R", "D"}},
                           400, 18);
}

CongestionNetwork canonical_game(std::string_view id) {
  if (id == "A") return game_a();
  if (id == "B") return game_b();
  throw NetworkError("unknown canonical game '" + std::string(id) + "'");
}

void validate_profile(const CongestionNetwork& network,
                      const ActionProfile& profile) {
  for (std::size_t i = 0; i < profile.size(); ++i)
    if (profile.choices[i] >= network.route_count())
      throw InvalidProfile("agent " + std::to_string(i) + " chose route index " +
                           std::to_string(profile.choices[i]) + " but network " +
                           network.name() + " has " +
                           std::to_string(network.route_count()) + " routes");
}

std::vector<Cost> route_counts(const CongestionNetwork& network,
                               const ActionProfile& profile) {
  validate_profile(network, profile);
  std::vector<Cost> counts(network.route_count(), 0);
  for (RouteIndex r : profile.choices) ++counts[r];
  return counts;
}

std::vector<Cost> edge_loads_from_counts(const CongestionNetwork& network,
                                         std::span<const Cost> counts) {
  if (counts.size() != network.route_count())
    throw InvalidProfile("route count vector has wrong length");
  std::vector<Cost> loads(network.edges().size(), 0);
  for (RouteIndex r = 0; r < counts.size(); ++r)
    for (std::size_t e : network.routes()[r].edges) loads[e] += counts[r];
  return loads;
}

std::vector<Cost> edge_loads(const CongestionNetwork& network,
                             const ActionProfile& profile) {
  const auto counts = route_counts(network, profile);
  return edge_loads_from_counts(network, counts);
}

Cost route_cost(const CongestionNetwork& network, RouteIndex route,
                std::span<const Cost> loads) {
  if (route >= network.route_count())
    throw InvalidProfile("route index " + std::to_string(route) +
                         " out of range");
  Cost total = 0;
  for (std::size_t e : network.routes()[route].edges)
    total += network.edges()[e].cost.at(loads[e]);
  return total;
}

std::vector<Cost> payoffs(const CongestionNetwork& network,
                          const ActionProfile& profile) {
  const auto loads = edge_loads(network, profile);
  std::vector<Cost> by_route(network.route_count());
  for (RouteIndex r = 0; r < by_route.size(); ++r)
    by_route[r] = network.endowment() - route_cost(network, r, loads);
  std::vector<Cost> out;
  out.reserve(profile.size());
  for (RouteIndex r : profile.choices) out.push_back(by_route[r]);
  return out;
}

std::vector<Cost> counterfactual_payoffs_from_counts(
    const CongestionNetwork& network, std::span<const Cost> counts,
    RouteIndex own_route) {
  if (own_route >= counts.size() || counts[own_route] < 1)
    throw InvalidProfile("agent is not counted on its own route");
  std::vector<Cost> moved(counts.begin(), counts.end());
  std::vector<Cost> out(network.route_count());
  for (RouteIndex r = 0; r < out.size(); ++r) {
    --moved[own_route];
    ++moved[r];
    const auto loads = edge_loads_from_counts(network, moved);
    out[r] = network.endowment() - route_cost(network, r, loads);
    --moved[r];
    ++moved[own_route];
  }
  return out;
}

std::vector<Cost> counterfactual_payoffs(const CongestionNetwork& network,
                                         const ActionProfile& profile,
                                         AgentIndex agent) {
  if (agent >= profile.size())
    throw InvalidProfile("agent index " + std::to_string(agent) +
                         " out of range");
  const auto counts = route_counts(network, profile);
  return counterfactual_payoffs_from_counts(network, counts,
                                            profile.choices[agent]);
}

Cost regret(const CongestionNetwork& network, const ActionProfile& profile,
            AgentIndex agent) {
  const auto cf = counterfactual_payoffs(network, profile, agent);
  return *std::max_element(cf.begin(), cf.end()) - cf[profile.choices[agent]];
}

std::vector<Cost> regrets(const CongestionNetwork& network,
                          const ActionProfile& profile) {
  const auto counts = route_counts(network, profile);
  std::vector<std::optional<Cost>> by_route(network.route_count());
  std::vector<Cost> out;
  out.reserve(profile.size());
  for (RouteIndex own : profile.choices) {
    if (!by_route[own]) {
      const auto cf = counterfactual_payoffs_from_counts(network, counts, own);
      by_route[own] = *std::max_element(cf.begin(), cf.end()) - cf[own];
    }
    out.push_back(*by_route[own]);
  }
  return out;
}

ActionProfile profile_from_counts(std::span<const Cost> counts) {
  ActionProfile profile;
  for (RouteIndex r = 0; r < counts.size(); ++r) {
    if (counts[r] < 0) throw InvalidProfile("negative route count");
    profile.choices.insert(profile.choices.end(),
                           static_cast<std::size_t>(counts[r]), r);
  }
  return profile;
}

}  // namespace routegame
