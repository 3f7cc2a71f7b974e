#pragma once

// Analysis artifacts built from run logs: CSV tables, a JSON summary and
// standalone SVG charts.

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "routegame/metrics.hpp"
#include "routegame/runlog.hpp"

namespace routegame {

// Successful trials sharing a label and game, pooled across run logs.
struct ExperimentGroup {
  std::string label;
  std::string game;
  std::vector<const TrialResult*> trials;  // successful only
  std::size_t failed = 0;
  ExperimentSummary summary;
};

// Groups in order of first appearance. Throws MetricError when nothing is
// analyzable or a group mixes networks, agent counts or round counts.
std::vector<ExperimentGroup> group_runlogs(std::span<const RunLog> logs);

// One row per label; per (game, route) the mean, the SE across trials and
// the pooled SD. Game A columns come before Game B columns.
void write_table1_csv(std::ostream& out, std::span<const ExperimentGroup> groups);
// label, game, round, metric, mean, se
void write_trajectories_csv(std::ostream& out, std::span<const ExperimentGroup> groups);
// representation, game, trial, round, metric, value
void write_trajectories_by_trial_csv(std::ostream& out,
                                     std::span<const ExperimentGroup> groups);
// label, game, trial, tau ("undefined" when constant)
void write_tau_csv(std::ostream& out, std::span<const ExperimentGroup> groups);
// label, game, trials, defined, undefined, mean_tau
void write_tau_summary_csv(std::ostream& out, std::span<const ExperimentGroup> groups);
nlohmann::ordered_json summary_json(std::span<const ExperimentGroup> groups);

struct LineSeries {
  std::string name;
  std::vector<double> ys;    // x = 1..size
  std::vector<double> errs;  // optional band, same length as ys
};

std::string line_chart_svg(const std::string& title, const std::string& y_label,
                           const std::vector<LineSeries>& series);
// rows x columns grid shaded by value.
std::string heatmap_svg(const std::string& title, const std::vector<std::string>& rows,
                        const std::vector<std::vector<double>>& values);

struct ReportOptions {
  bool svg = true;
  bool heatmap = false;
};

// Writes everything into `dir` and returns the file paths written.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                std::span<const RunLog> logs,
                                                const ReportOptions& options = {});

}  // namespace routegame
