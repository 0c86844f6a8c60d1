// Reference environment plugin: the in-process environment compiled behind
// the C plugin interface. Handles are registry ids rather than pointers so
// calls on destroyed handles fail cleanly instead of corrupting memory.

#include "gridtune/env_plugin_abi.h"

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "gridtune/config.hpp"
#include "gridtune/env.hpp"

namespace {

struct Registry {
  std::mutex mu;
  std::map<uint64_t, std::unique_ptr<gridtune::Environment>> envs;
  uint64_t next_id = 1;
};

Registry& registry() {
  static Registry r;
  return r;
}

gridtune::Environment* find(uint64_t handle) {
  Registry& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  auto it = r.envs.find(handle);
  return it == r.envs.end() ? nullptr : it->second.get();
}

}  // namespace

extern "C" {

uint32_t env_api_version(void) { return GRIDTUNE_ENV_API_VERSION; }

uint64_t env_create(const char* config_utf8, uint64_t len) {
  if (config_utf8 == nullptr) return 0;
  try {
    const std::string text(config_utf8, static_cast<size_t>(len));
    const gridtune::RunConfig cfg = gridtune::parse_run_config(text);
    cfg.plant.validate();
    cfg.env.validate(cfg.plant);
    auto env = std::make_unique<gridtune::Environment>(cfg.plant, cfg.env);

    Registry& r = registry();
    std::lock_guard<std::mutex> lock(r.mu);
    const uint64_t id = r.next_id++;
    r.envs.emplace(id, std::move(env));
    return id;
  } catch (...) {
    return 0;
  }
}

uint32_t env_obs_dim(uint64_t handle) {
  const gridtune::Environment* env = find(handle);
  return env ? static_cast<uint32_t>(env->obs_dim()) : 0;
}

uint32_t env_act_dim(uint64_t handle) {
  const gridtune::Environment* env = find(handle);
  return env ? static_cast<uint32_t>(env->act_dim()) : 0;
}

int32_t env_reset(uint64_t handle, uint64_t seed, double* obs_out) {
  gridtune::Environment* env = find(handle);
  if (env == nullptr) return GRIDTUNE_ENV_BAD_HANDLE;
  if (obs_out == nullptr) return GRIDTUNE_ENV_BAD_ARGUMENT;
  try {
    const auto obs = env->reset(seed);
    std::memcpy(obs_out, obs.data(),
                sizeof(double) * static_cast<size_t>(env->obs_dim()));
    return GRIDTUNE_ENV_OK;
  } catch (...) {
    return GRIDTUNE_ENV_FAULT;
  }
}

int32_t env_step(uint64_t handle, const double* act_in, double* obs_out,
                 double* reward_out, uint8_t* terminated_out,
                 uint8_t* truncated_out) {
  gridtune::Environment* env = find(handle);
  if (env == nullptr) return GRIDTUNE_ENV_BAD_HANDLE;
  if (act_in == nullptr || obs_out == nullptr || reward_out == nullptr ||
      terminated_out == nullptr || truncated_out == nullptr)
    return GRIDTUNE_ENV_BAD_ARGUMENT;
  try {
    const gridtune::StepResult r = env->step(gridtune::Vec2{act_in[0], act_in[1]});
    std::memcpy(obs_out, r.obs.data(),
                sizeof(double) * static_cast<size_t>(env->obs_dim()));
    *reward_out = r.reward;
    *terminated_out = r.terminated ? 1 : 0;
    *truncated_out = r.truncated ? 1 : 0;
    return GRIDTUNE_ENV_OK;
  } catch (...) {
    return GRIDTUNE_ENV_FAULT;
  }
}

void env_destroy(uint64_t handle) {
  Registry& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  r.envs.erase(handle);
}

}  // extern "C"
