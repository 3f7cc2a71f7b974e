#pragma once

// Declarative experiment configuration (TOML).
//
//   game = "A"                 # "A", "B" or "inline" (see [network])
//   agent = "mwu"              # uniform | best_response | mwu | exp3 | llm
//   representation = "S-RO"    # LLM agents
//   eta = 0.75
//   gamma = 0.75
//   agents = 18
//   rounds = 40
//   trials = 50
//   seed = 0                   # trial i uses seed + i
//   output = "runs/mwu-a"
//   workers = 1
//
//   [backend]                  # LLM agents
//   kind = "live"              # live | replay | scripted
//   endpoint = "https://api.openai.com/v1/chat/completions"
//   model = "gpt-4o-2024-08-06"
//   temperature = 1.0
//   api_key_env = "OPENAI_API_KEY"
//   rate_limit = 5.0           # requests per second, 0 = unlimited
//   max_attempts = 5           # HTTP attempts per completion
//   parse_attempts = 3         # re-prompts on unusable answers, total
//   timeout_s = 120
//   replay_dir = "runs/x/transcripts"
//   responses = ['{"route": "O-L-D"}']   # scripted
//
//   [network]                  # game = "inline"
//   name = "mini"
//   nodes = ["O", "L", "R", "D"]
//   endowment = 100
//   edges = [{from = "O", to = "L", slope = 10, intercept = 0}, ...]
//   routes = [["O", "L", "D"], ...]

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "routegame/engine.hpp"
#include "routegame/llm_client.hpp"

namespace routegame {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackendKind { None, Live, Replay, Scripted };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::None;
  LiveConfig live;
  std::filesystem::path replay_dir;
  std::vector<std::string> responses;
};

struct ExperimentConfig {
  TrialConfig trial;  // template; seed and trial_id are set per trial
  std::string game = "A";
  std::size_t trials = 1;
  std::uint64_t seed_base = 0;
  std::filesystem::path output = "runs/out";
  unsigned workers = 1;
  BackendConfig backend;

  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

// Errors name the source, and the line/column or offending field.
ExperimentConfig parse_config(std::string_view text,
                              std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// The backend an experiment needs, or nullptr for algorithmic agents.
std::shared_ptr<Backend> make_backend(const ExperimentConfig& config);

}  // namespace routegame
