#pragma once
// Training orchestration: rollout collection, advantage estimation, policy
// updates, stats logging, and checkpointing under one run directory.

#include <ostream>
#include <string>

#include "gridtune/config.hpp"

namespace gridtune {

struct TrainResult {
  std::string out_dir;
  std::string stats_path;
  std::string final_checkpoint;
  long env_steps = 0;
  long episodes = 0;
};

// Runs the configured training to completion. The run directory receives
// config.json (resolved), stats.csv (one row per iteration), periodic
// ckpt_NNNN.ckpt files, and final.ckpt. Single-worker runs are reproducible
// byte-for-byte apart from the wall-clock column. On failure a diagnostic
// checkpoint is written before the error propagates.
TrainResult train(const RunConfig& cfg, std::ostream& log);

}  // namespace gridtune
