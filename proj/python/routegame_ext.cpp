#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "routegame/cli.hpp"
#include "routegame/config.hpp"
#include "routegame/engine.hpp"
#include "routegame/metrics.hpp"
#include "routegame/report.hpp"
#include "routegame/repr.hpp"
#include "routegame/runlog.hpp"

namespace py = pybind11;
using namespace routegame;

namespace {

ActionProfile to_profile(std::vector<RouteIndex> choices) { return ActionProfile{std::move(choices)}; }

py::dict summary_dict(const ExperimentSummary& s) {
  py::dict d;
  d["label"] = s.label;
  d["game"] = s.game;
  d["route_names"] = s.route_names;
  d["trials"] = s.trials;
  d["rounds"] = s.rounds;
  d["agents"] = s.agents;
  d["route_means"] = s.route_means;
  d["route_se"] = s.route_se;
  d["route_sd"] = s.route_sd;
  d["focal_mean"] = s.focal.mean;
  d["payoff_mean"] = s.payoff.mean;
  d["regret_mean"] = s.regret.mean;
  d["switches_mean"] = s.switches.mean;
  d["mean_tau"] = s.mean_tau;
  d["tau_undefined"] = s.tau_undefined;
  return d;
}

GameHistory history_from(const CongestionNetwork& net,
                         const std::vector<std::vector<RouteIndex>>& rounds) {
  GameHistory h;
  int t = 1;
  for (const auto& c : rounds) h.append(evaluate_round(net, t++, to_profile(c)));
  return h;
}

}  // namespace

PYBIND11_MODULE(_routegame, m) {
  m.doc() = "Repeated routing games with learning and LLM agents";

  py::register_exception<NetworkError>(m, "NetworkError", PyExc_ValueError);
  py::register_exception<InvalidProfile>(m, "InvalidProfile", PyExc_ValueError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);
  py::register_exception<ReprError>(m, "ReprError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RunLogError>(m, "RunLogError", PyExc_RuntimeError);
  py::register_exception<RouteParseError>(m, "RouteParseError", PyExc_ValueError);

  py::class_<EdgeCost>(m, "EdgeCost")
      .def_readonly("slope", &EdgeCost::slope)
      .def_readonly("intercept", &EdgeCost::intercept)
      .def("at", &EdgeCost::at);
  py::class_<Edge>(m, "Edge")
      .def_readonly("from_node", &Edge::from)
      .def_readonly("to_node", &Edge::to)
      .def_readonly("cost", &Edge::cost)
      .def_property_readonly("label", &Edge::label);

  py::class_<CongestionNetwork>(m, "CongestionNetwork")
      .def_property_readonly("name", &CongestionNetwork::name)
      .def_property_readonly("nodes", &CongestionNetwork::nodes)
      .def_property_readonly("edges", &CongestionNetwork::edges)
      .def_property_readonly("endowment", &CongestionNetwork::endowment)
      .def_property_readonly("default_agents", &CongestionNetwork::default_agents)
      .def_property_readonly("route_names", &CongestionNetwork::route_names)
      .def("find_route", &CongestionNetwork::find_route)
      .def("route_nodes", &CongestionNetwork::route_nodes)
      .def("__repr__", [](const CongestionNetwork& n) {
        return "<CongestionNetwork " + n.name() + " with " + std::to_string(n.route_count()) +
               " routes>";
      });

  m.def("game_a", &game_a);
  m.def("game_b", &game_b);
  m.def("canonical_game", [](const std::string& id) { return canonical_game(id); });

  m.def("route_counts", [](const CongestionNetwork& n, std::vector<RouteIndex> c) {
    return route_counts(n, to_profile(std::move(c)));
  });
  m.def("payoffs", [](const CongestionNetwork& n, std::vector<RouteIndex> c) {
    return payoffs(n, to_profile(std::move(c)));
  });
  m.def("regrets", [](const CongestionNetwork& n, std::vector<RouteIndex> c) {
    return regrets(n, to_profile(std::move(c)));
  });
  m.def("counterfactual_payoffs",
        [](const CongestionNetwork& n, std::vector<RouteIndex> c, AgentIndex agent) {
          return counterfactual_payoffs(n, to_profile(std::move(c)), agent);
        });
  m.def("profile_from_counts",
        [](std::vector<Cost> counts) { return profile_from_counts(counts).choices; });

  m.def("kendall_tau", [](std::vector<double> x, std::vector<double> y) {
    return kendall_tau(x, y);
  });
  m.def("deviation_score", [](const CongestionNetwork& n, std::vector<Cost> d) {
    return deviation_score(n, d);
  });

  m.def("representations", [] {
    std::vector<std::string> out;
    for (const auto& a : ReprAxes::all()) out.push_back(a.code());
    return out;
  });
  m.def("render_system_prompt", &render_system_prompt, py::arg("network"),
        py::arg("agents") = 18, py::arg("rounds") = 40);
  m.def(
      "render_summary",
      [](const CongestionNetwork& n, const std::vector<std::vector<RouteIndex>>& rounds,
         AgentIndex agent, const std::string& code) {
        return render_summary(n, history_from(n, rounds), agent, ReprAxes::parse(code));
      },
      py::arg("network"), py::arg("rounds"), py::arg("agent"), py::arg("representation"));
  m.def("parse_route", [](const std::string& text, std::vector<std::string> routes) {
    return parse_route(text, routes);
  });

  m.def(
      "run_experiment",
      [](const std::string& game, const std::string& agent, std::size_t trials, int rounds,
         std::uint64_t seed, double eta, double gamma, unsigned workers) {
        TrialConfig t;
        t.network = canonical_game(game);
        t.agent = {parse_agent_kind(agent), eta, gamma};
        t.rounds = rounds;
        std::vector<TrialResult> results;
        {
          py::gil_scoped_release release;
          results = run_experiment(t, trials, seed, default_policy_factory(), workers);
        }
        return summary_dict(summarize_results(results));
      },
      py::arg("game") = "A", py::arg("agent") = "mwu", py::arg("trials") = 1,
      py::arg("rounds") = 40, py::arg("seed") = 0, py::arg("eta") = 0.75,
      py::arg("gamma") = 0.75, py::arg("workers") = 1);

  m.def(
      "read_runlog_summary",
      [](const std::filesystem::path& path) {
        const RunLog log = read_runlog(path);
        py::dict d;
        d["schema_version"] = log.schema_version;
        d["trials"] = log.trials.size();
        d["truncated"] = log.truncated;
        d["summary"] = summary_dict(summarize_results(log.trials));
        return d;
      },
      py::arg("path"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli_main(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));

  m.attr("RUNLOG_SCHEMA_VERSION") = kRunLogSchemaVersion;
}
