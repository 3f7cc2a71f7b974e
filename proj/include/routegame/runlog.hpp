#pragma once

// JSONL run log: a header line echoing the experiment config, one line per
// round per trial, and one footer line per finished trial. LLM transcripts
// live next to it in transcripts/<trial_id>.jsonl.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "routegame/config.hpp"
#include "routegame/engine.hpp"

namespace routegame {

inline constexpr int kRunLogSchemaVersion = 1;
inline constexpr const char* kRunLogFile = "runlog.jsonl";
inline constexpr const char* kTranscriptDir = "transcripts";

class RunLogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaMismatch : public RunLogError {
 public:
  using RunLogError::RunLogError;
};

nlohmann::ordered_json network_to_json(const CongestionNetwork& network);
CongestionNetwork network_from_json(const nlohmann::ordered_json& j);

// Config echo. Never includes credentials or the output path.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json round_to_json(const TrialConfig& trial, std::uint64_t seed_base,
                             const RoundRecord& record);
RoundRecord round_from_json(const nlohmann::ordered_json& j);

std::filesystem::path transcript_path(const std::filesystem::path& runlog,
                                      const std::string& trial_id);

// Serializes lines from any number of trial threads; each line is flushed.
class RunLogWriter {
 public:
  // Creates parent directories and writes the header. `started_at` is free
  // text; the determinism contract ignores it.
  RunLogWriter(const std::filesystem::path& path, const ExperimentConfig& config,
               std::string started_at);
  ~RunLogWriter();
  RunLogWriter(const RunLogWriter&) = delete;
  RunLogWriter& operator=(const RunLogWriter&) = delete;

  void write_round(const TrialConfig& trial, const RoundRecord& record);
  // Writes the footer; saves the transcript file when there is one.
  void write_trial_end(const TrialResult& result);

  // Observer that streams into this writer.
  TrialObserver observer();

  const std::filesystem::path& path() const { return path_; }

 private:
  void write_line(const nlohmann::ordered_json& j);

  std::filesystem::path path_;
  std::uint64_t seed_base_;
  std::mutex mu_;
  std::FILE* file_ = nullptr;
};

struct RunLog {
  std::filesystem::path path;
  int schema_version = kRunLogSchemaVersion;
  std::string started_at;
  ExperimentConfig config;
  // Trial order. A trial with rounds but no footer (the run died) comes
  // back with ok = false and error "incomplete".
  std::vector<TrialResult> trials;
  bool truncated = false;  // the last line was cut off and skipped
};

// Throws RunLogError on unreadable or malformed input and SchemaMismatch on a
// different schema version. A truncated final line is tolerated.
RunLog read_runlog(const std::filesystem::path& path);

// Accepts a run directory or the log file itself.
std::filesystem::path resolve_runlog(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace routegame
