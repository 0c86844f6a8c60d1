#pragma once
// Versioned text checkpoints: model variant, every parameter block at full
// double precision, optimizer moments, and training progress. Round-trips
// byte-identically.

#include <memory>
#include <string>

#include "gridtune/agent.hpp"
#include "gridtune/ppo.hpp"

namespace gridtune {

struct TrainProgress {
  long iteration = 0;
  long total_iterations = 0;
  long env_steps = 0;
};

void save_checkpoint(const std::string& path, Agent& agent,
                     const AdamState& adam, const TrainProgress& progress);

struct LoadedCheckpoint {
  std::unique_ptr<Agent> agent;
  AdamState adam;
  TrainProgress progress;
};

// Rebuilds the agent recorded at `path`. Malformed or unreadable files raise
// ConfigError.
LoadedCheckpoint load_checkpoint(const std::string& path);

// Deployable controller gains of a fixed-gain model; UsageError otherwise.
PiGains export_gains(const Agent& agent);

}  // namespace gridtune
