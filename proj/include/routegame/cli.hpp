#pragma once

// Command-line surface: run, analyze, replay, list-representations.

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "routegame/runlog.hpp"

namespace routegame {

enum ExitCode : int {
  kExitOk = 0,
  kExitTrialFailed = 1,
  kExitUsage = 2,  // bad flags, config or input files
  kExitDivergence = 3,
  kExitReplayMiss = 4,
};

struct ReplayOutcome {
  bool match = true;
  bool replay_miss = false;  // the recorded transcript was missing
  std::optional<AgentIndex> agent;  // first mismatch
  std::optional<int> round;
  std::string message;
};

// Re-executes one logged trial. LLM trials read their responses from the
// transcript next to the log, or from `transcript_dir` when given;
// algorithmic trials rerun from the stored seed. Compares decisions round by
// round.
ReplayOutcome replay_trial(const RunLog& log, const TrialResult& recorded,
                           const std::filesystem::path& transcript_dir = {});

int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);
int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

}  // namespace routegame
