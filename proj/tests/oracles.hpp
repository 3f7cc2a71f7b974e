#pragma once

// Reference implementations used as test oracles. They share no code with
// the library beyond the network's public accessors.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "routegame/network.hpp"

namespace oracle {

using routegame::AgentIndex;
using routegame::CongestionNetwork;
using routegame::Cost;

// Cost paid by every agent, recomputed edge by edge from node sequences.
inline std::vector<Cost> agent_costs(const CongestionNetwork& net,
                                     const std::vector<std::size_t>& choices) {
  std::vector<Cost> load(net.edges().size(), 0);
  auto edge_of = [&](const std::string& a, const std::string& b) {
    for (std::size_t e = 0; e < net.edges().size(); ++e)
      if (net.edges()[e].from == a && net.edges()[e].to == b) return e;
    throw std::logic_error("no edge " + a + "-" + b);
  };
  for (std::size_t c : choices) {
    const auto nodes = net.route_nodes(c);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) ++load[edge_of(nodes[i], nodes[i + 1])];
  }
  std::vector<Cost> out;
  for (std::size_t c : choices) {
    const auto nodes = net.route_nodes(c);
    Cost total = 0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const auto& e = net.edges()[edge_of(nodes[i], nodes[i + 1])];
      total += e.cost.slope * load[edge_of(nodes[i], nodes[i + 1])] + e.cost.intercept;
    }
    out.push_back(total);
  }
  return out;
}

// Tries every route for `agent` with the rest fixed.
inline Cost brute_regret(const CongestionNetwork& net, std::vector<std::size_t> choices,
                         AgentIndex agent) {
  const Cost realized = net.endowment() - agent_costs(net, choices)[agent];
  Cost best = realized;
  for (std::size_t r = 0; r < net.route_count(); ++r) {
    choices[agent] = r;
    best = std::max(best, net.endowment() - agent_costs(net, choices)[agent]);
  }
  return best - realized;
}

// Tau-b by enumerating all pairs.
inline std::optional<double> kendall_pairs(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  const std::size_t n = x.size();
  long long conc = 0, disc = 0, tx = 0, ty = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ++pairs;
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ++tx;
      if (dy == 0) ++ty;
      if (dx == 0 || dy == 0) continue;
      ((dx > 0) == (dy > 0) ? conc : disc)++;
    }
  if (tx == pairs || ty == pairs) return std::nullopt;
  return double(conc - disc) /
         std::sqrt(double(pairs - tx) * double(pairs - ty));
}

// Turns a LaTeX-typeset prompt box into plain prompt text:
// indentation and trailing blanks are dropped, \{ \} become braces,
// \medskip/\smallskip/\bigskip and empty lines separate paragraphs
// (joined by a blank line), and lines inside a paragraph keep their
// single newline.
inline std::string normalize_typeset(const std::string& raw) {
  std::istringstream in(raw);
  std::vector<std::vector<std::string>> paragraphs(1);
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t");
    const auto e = line.find_last_not_of(" \t\r");
    line = b == std::string::npos ? "" : line.substr(b, e - b + 1);
    if (line == "\\medskip" || line == "\\smallskip" || line == "\\bigskip" ||
        line == "\\footnotesize" || line.empty()) {
      if (!paragraphs.back().empty()) paragraphs.emplace_back();
      continue;
    }
    std::string clean;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\\' && i + 1 < line.size() && (line[i + 1] == '{' || line[i + 1] == '}'))
        continue;
      clean += line[i];
    }
    paragraphs.back().push_back(clean);
  }
  if (paragraphs.back().empty()) paragraphs.pop_back();
  std::string out;
  for (const auto& p : paragraphs) {
    if (!out.empty()) out += "\n\n";
    for (std::size_t i = 0; i < p.size(); ++i) out += (i ? "\n" : "") + p[i];
  }
  return out;
}

// Reference prompt boxes, LaTeX source as typeset.
inline const char* kTypesetSpe = R"(
            You are agent 0.

            \medskip

Summary of previous rounds:

\bigskip

  Round 1:

 Your Choice: O-R-D

    Route Choice Distribution: \{'O-R-D': 13, 'O-L-D': 5\}

    Your Payoff: 60

\bigskip

  Round 2:

    Your Choice: O-L-D

    Route Choice Distribution: \{'O-L-D': 17, 'O-R-D': 1\}

    Your Payoff: 20

\bigskip

  Round 3:

    Your Choice: O-R-D

    Route Choice Distribution: \{'O-R-D': 14, 'O-L-D': 4\}

    Your Payoff: 50
)";

inline const char* kTypesetSre = R"(
You are agent 0.

\medskip

Summary of previous rounds:

\bigskip

  Round 1:

    Your Choice: O-R-D

    Route Choice Distribution: \{'O-R-D': 11, 'O-L-D': 7\}

    Your Regret: 30

\bigskip

  Round 2:

    Your Choice: O-L-D

    Route Choice Distribution: \{'O-L-D': 17, 'O-R-D': 1\}

    Your Regret: 150

\bigskip

  Round 3:

    Your Choice: O-R-D

    Route Choice Distribution: \{'O-R-D': 16, 'O-L-D': 2\}

    Your Regret: 130
)";

inline const char* kTypesetSpo = R"(
You are agent 0.

\medskip

Summary of previous rounds:

\bigskip

  Round 1:

    Your Choice: O-R-D

    Your Payoff: 30

\bigskip

  Round 2:

    Your Choice: O-L-D

    Your Payoff: 20

\bigskip

  Round 3:

    Your Choice: O-L-D

    Your Payoff: 180
)";

inline const char* kTypesetSro = R"(
            You are agent 0.

            \medskip

            Summary of previous rounds:

            \bigskip

              Round 1:

                Your Choice: O-R-D

                Your Regret: 70

            \bigskip

              Round 2:

                Your Choice: O-L-D

                Your Regret: 150

            \bigskip

              Round 3:

                Your Choice: O-R-D

                Your Regret: 150
)";

inline const char* kTypesetSystemA = R"(
\footnotesize
You will be participating in an experiment on route selection in traffic networks.
During this experiment you'll be asked to make many decisions about route selection in a traffic network game.
Your payoff will depend on the decisions you make as well as the decisions made by the other participants. There are 18 participants in this experiment, including yourself, who will be asked to serve as drivers and choose a route to travel in a traffic network game that is described below.
You will play the game for 40 identical rounds.

Consider the very simple traffic network described below.

\medskip

Nodes:

O L R D

\medskip

Segments and associated costs:

Segment O-L, cost function: 10 * X

Segment O-R, cost function: 210

Segment L-D, cost function: 210

Segment R-D, cost function: 10 * X

\medskip

Each driver is required to choose one of 2 routes to travel from the starting point, denoted by O, to the final destination, denoted by D. There are 2 alternative routes and they are denoted by ['O-L-D', 'O-R-D'].

Travel is always costly in terms of the time needed to complete a segment of the road, tolls, fuel etc. The travel costs are written near each segment of the route you choose. For example, if you choose route O-L-D, you will be charged a total cost of 10X + 210 where X indicates the number of participants who choose segment O-L to travel from O to L plus a fixed cost of 210 for traveling on segment L-D.

Similarly, if you choose route O-R-D, you will be charged a total travel cost of 210 + 10Y, where Y indicates the number of participants who choose the segment R-D to drive from O to D.
Please note that the cost charged for segments O-L and R-D depends on the number of drivers choosing them.

In contrast, the cost charged for traveling on segments L-D and O-R is fixed at 210 and does not depend on the number of drivers choosing them.

All the drivers make their route choices independently of one another and leave point O at the same time.

\medskip

Example.

\smallskip

If you happen to be the only driver who chooses route O-L-D, and all other 17 drivers choose route O-R-D, then your travel cost from point O to point D is equal to (10 x 1) + 210 = 220.
If, on another round, you and 2 more drivers choose route O-R-D and 15 other drivers choose route O-L-D, then your travel cost for that round will be 210 + (10 x 3) = 240.

\medskip

At the beginning of each round, you will receive an endowment of 400 points.
Your payoff for each round will be determined by subtracting your travel cost from your endowment.
Your goal is to maximize your payoff (likewise minimize your cost).
At the end of each round, you will be informed of the number of drivers who chose each route and your payoff for that round.
All 40 rounds have exactly the same structure.

\medskip

The output should be formatted as a JSON instance that conforms to the JSON schema below.


\medskip

As an example, for the schema \{"properties": \{"foo": \{"title": "Foo", "description": "a list of strings", "type": "array", "items": \{"type": "string"\}\}\}, "required": ["foo"]\}
the object \{"foo": ["bar", "baz"]\} is a well-formatted instance of the schema. The object \{"properties": \{"foo": ["bar", "baz"]\}\} is not well-formatted.

\medskip

Here is the output schema:

\medskip

```
\{"properties": \{"route": \{"title": "Route", "description": "choice of route", "type": "string"\}\}, "required": ["route"]\}
```
)";

}  // namespace oracle
