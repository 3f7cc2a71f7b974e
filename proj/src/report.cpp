#include "routegame/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace routegame {

using json = nlohmann::ordered_json;

namespace {

std::string num(double v, int precision = 4) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Metrics with a per-round trajectory, in output order.
std::vector<const MetricSeries*> metric_list(const ExperimentSummary& s) {
  std::vector<const MetricSeries*> out;
  if (!s.focal.per_round.empty()) out.push_back(&s.focal);
  out.push_back(&s.payoff);
  out.push_back(&s.regret);
  out.push_back(&s.switches);
  return out;
}

// Deviation scores as a series so they ride along with the four metrics.
MetricSeries deviation_metric(const ExperimentSummary& s) {
  std::vector<std::vector<double>> rows;
  for (const auto& d : s.deviation)
    rows.emplace_back(d.scores.begin(), d.scores.end());
  return make_series("deviation", std::move(rows));
}

struct Column {
  std::string game;
  std::string route;
};

std::vector<Column> table_columns(std::span<const ExperimentGroup> groups) {
  std::vector<std::string> games;
  std::map<std::string, std::vector<std::string>> routes;
  for (const auto& g : groups) {
    if (!routes.contains(g.game)) games.push_back(g.game);
    auto& names = routes[g.game];
    for (const auto& r : g.summary.route_names)
      if (std::find(names.begin(), names.end(), r) == names.end()) names.push_back(r);
  }
  std::stable_sort(games.begin(), games.end());
  std::vector<Column> cols;
  for (const auto& game : games)
    for (const auto& r : routes[game]) cols.push_back({game, r});
  return cols;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

void save(const std::filesystem::path& path, const std::string& text,
          std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  written.push_back(path);
}

template <typename Fn>
std::string render(Fn fn, std::span<const ExperimentGroup> groups) {
  std::ostringstream os;
  fn(os, groups);
  return os.str();
}

}  // namespace

std::vector<ExperimentGroup> group_runlogs(std::span<const RunLog> logs) {
  std::vector<ExperimentGroup> groups;
  for (const auto& log : logs) {
    const std::string label = experiment_label(log.config.trial);
    const std::string game = log.config.trial.network.name();
    auto it = std::find_if(groups.begin(), groups.end(), [&](const ExperimentGroup& g) {
      return g.label == label && g.game == game;
    });
    if (it == groups.end()) {
      groups.push_back({label, game, {}, 0, {}});
      it = groups.end() - 1;
    }
    for (const auto& t : log.trials) {
      if (t.ok)
        it->trials.push_back(&t);
      else
        ++it->failed;
    }
  }
  std::vector<ExperimentGroup> out;
  for (auto& g : groups) {
    if (g.trials.empty()) continue;
    std::vector<TrialData> data;
    for (const TrialResult* t : g.trials) data.push_back({&t->config.network, &t->history});
    g.summary = summarize_experiment(g.label, data);
    out.push_back(std::move(g));
  }
  if (out.empty()) throw MetricError("no successful trials to analyze");
  return out;
}

void write_table1_csv(std::ostream& out, std::span<const ExperimentGroup> groups) {
  const auto cols = table_columns(groups);
  out << "label";
  for (const auto& c : cols) {
    const std::string base = c.game + ":" + c.route;
    out << ',' << csv_field(base) << ',' << csv_field(base + " se") << ','
        << csv_field(base + " sd");
  }
  out << '\n';

  std::vector<std::string> labels;
  for (const auto& g : groups)
    if (std::find(labels.begin(), labels.end(), g.label) == labels.end())
      labels.push_back(g.label);
  for (const auto& label : labels) {
    out << csv_field(label);
    for (const auto& c : cols) {
      const ExperimentGroup* hit = nullptr;
      for (const auto& g : groups)
        if (g.label == label && g.game == c.game) hit = &g;
      std::size_t j = 0;
      if (hit) {
        const auto& names = hit->summary.route_names;
        j = static_cast<std::size_t>(std::find(names.begin(), names.end(), c.route) -
                                     names.begin());
      }
      if (!hit || j == hit->summary.route_names.size()) {
        out << ",,,";
        continue;
      }
      out << ',' << num(hit->summary.route_means[j], 2) << ','
          << num(hit->summary.route_se[j], 2) << ',' << num(hit->summary.route_sd[j], 2);
    }
    out << '\n';
  }
}

void write_trajectories_csv(std::ostream& out, std::span<const ExperimentGroup> groups) {
  out << "label,game,round,metric,mean,se\n";
  for (const auto& g : groups) {
    auto metrics = metric_list(g.summary);
    const MetricSeries dev = deviation_metric(g.summary);
    if (!dev.per_round.empty()) metrics.push_back(&dev);
    for (const MetricSeries* m : metrics) {
      const auto means = m->round_means();
      const auto ses = m->round_ses();
      for (std::size_t t = 0; t < means.size(); ++t)
        out << csv_field(g.label) << ',' << csv_field(g.game) << ',' << t + 1 << ','
            << m->name << ',' << num(means[t], 6) << ',' << num(ses[t], 6) << '\n';
    }
  }
}

void write_trajectories_by_trial_csv(std::ostream& out,
                                     std::span<const ExperimentGroup> groups) {
  out << "representation,game,trial,round,metric,value\n";
  for (const auto& g : groups) {
    auto metrics = metric_list(g.summary);
    const MetricSeries dev = deviation_metric(g.summary);
    if (!dev.per_round.empty()) metrics.push_back(&dev);
    for (const MetricSeries* m : metrics)
      for (std::size_t i = 0; i < m->per_round.size(); ++i)
        for (std::size_t t = 0; t < m->per_round[i].size(); ++t)
          out << csv_field(g.label) << ',' << csv_field(g.game) << ','
              << csv_field(g.trials[i]->config.trial_id) << ',' << t + 1 << ','
              << m->name << ',' << num(m->per_round[i][t], 6) << '\n';
  }
}

void write_tau_csv(std::ostream& out, std::span<const ExperimentGroup> groups) {
  out << "label,game,trial,tau\n";
  for (const auto& g : groups)
    for (std::size_t i = 0; i < g.summary.deviation.size(); ++i) {
      const auto& tau = g.summary.deviation[i].tau;
      out << csv_field(g.label) << ',' << csv_field(g.game) << ','
          << csv_field(g.trials[i]->config.trial_id) << ','
          << (tau ? num(*tau, 6) : std::string("undefined")) << '\n';
    }
}

void write_tau_summary_csv(std::ostream& out, std::span<const ExperimentGroup> groups) {
  out << "label,game,trials,defined,undefined,mean_tau\n";
  for (const auto& g : groups) {
    const auto& s = g.summary;
    if (s.deviation.empty()) continue;
    out << csv_field(g.label) << ',' << csv_field(g.game) << ',' << s.deviation.size()
        << ',' << s.deviation.size() - s.tau_undefined << ',' << s.tau_undefined << ','
        << (s.mean_tau ? num(*s.mean_tau, 6) : std::string()) << '\n';
  }
}

json summary_json(std::span<const ExperimentGroup> groups) {
  json out = json::array();
  for (const auto& g : groups) {
    const auto& s = g.summary;
    json metrics = json::object();
    for (const MetricSeries* m : metric_list(s))
      metrics[m->name] = {{"mean", m->mean}, {"se", m->se}};
    json routes = json::array();
    for (std::size_t j = 0; j < s.route_names.size(); ++j)
      routes.push_back({{"route", s.route_names[j]},
                        {"mean", s.route_means[j]},
                        {"se", s.route_se[j]},
                        {"sd", s.route_sd[j]}});
    json tau = nullptr;
    if (!s.deviation.empty())
      tau = {{"mean", s.mean_tau ? json(*s.mean_tau) : json(nullptr)},
             {"defined", s.deviation.size() - s.tau_undefined},
             {"undefined", s.tau_undefined},
             {"scaled_targets", s.deviation.front().scaled_targets}};
    out.push_back({{"label", g.label},
                   {"game", g.game},
                   {"trials", s.trials},
                   {"failed_trials", g.failed},
                   {"rounds", s.rounds},
                   {"agents", s.agents},
                   {"routes", routes},
                   {"metrics", metrics},
                   {"tau", tau}});
  }
  return {{"schema_version", kRunLogSchemaVersion}, {"experiments", out}};
}

std::string line_chart_svg(const std::string& title, const std::string& y_label,
                           const std::vector<LineSeries>& series) {
  const double W = 720, H = 420, left = 64, right = 160, top = 40, bottom = 48;
  const double pw = W - left - right, ph = H - top - bottom;

  std::size_t n = 1;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    n = std::max(n, s.ys.size());
    for (std::size_t i = 0; i < s.ys.size(); ++i) {
      const double e = i < s.errs.size() && !std::isnan(s.errs[i]) ? s.errs[i] : 0.0;
      lo = std::min(lo, s.ys[i] - e);
      hi = std::max(hi, s.ys[i] + e);
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  lo = std::min(lo, 0.0);
  if (hi - lo < 1e-9) hi = lo + 1;

  auto x = [&](double i) { return left + (n > 1 ? i / double(n - 1) : 0.5) * pw; };
  auto y = [&](double v) { return top + ph - (v - lo) / (hi - lo) * ph; };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << xml_escape(title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\""
     << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    os << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << y(v)
       << "\" y2=\"" << y(v) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << y(v) + 4
       << "\" text-anchor=\"end\">" << num(v, 1) << "</text>\n";
  }
  const std::size_t step = std::max<std::size_t>(1, n / 8);
  for (std::size_t i = 0; i < n; i += step)
    os << "<text x=\"" << x(double(i)) << "\" y=\"" << top + ph + 16
       << "\" text-anchor=\"middle\">" << i + 1 << "</text>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\">round</text>\n";
  os << "<text transform=\"translate(16," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    if (ser.errs.size() == ser.ys.size() && !ser.ys.empty()) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < ser.ys.size(); ++i) {
        const double e = std::isnan(ser.errs[i]) ? 0.0 : ser.errs[i];
        os << x(double(i)) << ',' << y(ser.ys[i] + e) << ' ';
      }
      for (std::size_t i = ser.ys.size(); i-- > 0;) {
        const double e = std::isnan(ser.errs[i]) ? 0.0 : ser.errs[i];
        os << x(double(i)) << ',' << y(ser.ys[i] - e) << ' ';
      }
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < ser.ys.size(); ++i)
      os << x(double(i)) << ',' << y(ser.ys[i]) << ' ';
    os << "\"/>\n";
    const double ly = top + 14 + 18.0 * double(s);
    os << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\""
       << ly - 4 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << xml_escape(ser.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap_svg(const std::string& title, const std::vector<std::string>& rows,
                        const std::vector<std::vector<double>>& values) {
  std::size_t cols = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : values) {
    cols = std::max(cols, r.size());
    for (double v : r)
      if (!std::isnan(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-9) hi = lo + 1;
  const double cell = 14, left = 90, top = 40;
  const double W = left + cell * double(std::max<std::size_t>(cols, 1)) + 80;
  const double H = top + cell * double(rows.size()) + 40;

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";
  for (std::size_t r = 0; r < values.size(); ++r) {
    const double yy = top + cell * double(r);
    os << "<text x=\"" << left - 6 << "\" y=\"" << yy + cell - 3
       << "\" text-anchor=\"end\">" << xml_escape(r < rows.size() ? rows[r] : "")
       << "</text>\n";
    for (std::size_t c = 0; c < values[r].size(); ++c) {
      const double v = values[r][c];
      const double f = std::isnan(v) ? 0.0 : (v - lo) / (hi - lo);
      const int shade = static_cast<int>(255 - 200 * f);
      os << "<rect x=\"" << left + cell * double(c) << "\" y=\"" << yy << "\" width=\""
         << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade
         << ",255)\"><title>" << c + 1 << ": " << num(v, 2) << "</title></rect>\n";
    }
  }
  os << "<text x=\"" << left << "\" y=\"" << H - 12 << "\">round 1 to " << cols << ", range "
     << num(lo, 2) << " to " << num(hi, 2) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                std::span<const RunLog> logs,
                                                const ReportOptions& options) {
  if (logs.empty()) throw MetricError("no run logs to analyze");
  const auto groups = group_runlogs(logs);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const std::span<const ExperimentGroup> gs(groups);

  save(dir / "table1.csv", render(write_table1_csv, gs), written);
  save(dir / "trajectories.csv", render(write_trajectories_csv, gs), written);
  save(dir / "trajectories_by_trial.csv", render(write_trajectories_by_trial_csv, gs),
       written);
  save(dir / "tau.csv", render(write_tau_csv, gs), written);
  save(dir / "tau_summary.csv", render(write_tau_summary_csv, gs), written);
  save(dir / "summary.json", summary_json(gs).dump(2) + "\n", written);
  if (!options.svg) return written;

  std::vector<std::string> games;
  for (const auto& g : groups)
    if (std::find(games.begin(), games.end(), g.game) == games.end()) games.push_back(g.game);
  const std::vector<std::pair<std::string, std::string>> charts = {
      {"focal", "agents on focal route"},
      {"payoff", "mean payoff"},
      {"regret", "mean regret"},
      {"switches", "fraction of agents switching"},
      {"deviation", "equilibrium deviation score"}};
  for (const auto& game : games) {
    for (const auto& [metric, y_label] : charts) {
      std::vector<LineSeries> lines;
      for (const auto& g : groups) {
        if (g.game != game) continue;
        const MetricSeries dev = deviation_metric(g.summary);
        const MetricSeries* m = metric == "deviation" ? &dev : nullptr;
        for (const MetricSeries* cand : metric_list(g.summary))
          if (cand->name == metric) m = cand;
        if (!m || m->per_round.empty()) continue;
        lines.push_back({g.label, m->round_means(), m->round_ses()});
      }
      if (lines.empty()) continue;
      save(dir / ("game" + game + "_" + metric + ".svg"),
           line_chart_svg("Game " + game + ": " + y_label, y_label, lines), written);
    }
    if (options.heatmap) {
      std::vector<std::string> rows;
      std::vector<std::vector<double>> values;
      for (const auto& g : groups) {
        if (g.game != game) continue;
        const MetricSeries dev = deviation_metric(g.summary);
        if (dev.per_round.empty()) continue;
        rows.push_back(g.label);
        values.push_back(dev.round_means());
      }
      if (!rows.empty())
        save(dir / ("game" + game + "_deviation_heatmap.svg"),
             heatmap_svg("Game " + game + ": mean deviation score by round", rows, values),
             written);
    }
  }
  return written;
}

}  // namespace routegame
