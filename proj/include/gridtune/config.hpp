#pragma once
// One hierarchical run configuration covering plant, environment, optimizer,
// worker pool, and output destination. Parsing is strict: unknown keys are
// rejected, and the fully resolved document can be echoed back out so a run
// directory always records what produced it.

#include <string>

#include "gridtune/env.hpp"
#include "gridtune/plant.hpp"
#include "gridtune/ppo.hpp"

namespace gridtune {

struct RunConfig {
  Variant variant = Variant::fixed_gain;
  PlantParams plant;
  EnvConfig env;
  PpoConfig ppo;
  int workers = 1;
  std::string out_dir;
  std::string plugin_path;  // empty = in-process environment

  void validate() const;
};

RunConfig default_run_config(Variant v);

// Strict parse; missing keys fall back to the variant's defaults. The
// top-level "variant" key is read first so the defaults match.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

std::string run_config_json(const RunConfig& cfg);

}  // namespace gridtune
