#include "gridtune/plugin_loader.hpp"

#include <dlfcn.h>

#include <cstring>

#include "gridtune/env_plugin_abi.h"
#include "gridtune/errors.hpp"

namespace gridtune {

namespace {

class PluginEnv : public RolloutEnv {
 public:
  PluginEnv(std::shared_ptr<PluginLibrary> lib, std::uint64_t handle)
      : lib_(std::move(lib)), handle_(handle) {
    obs_dim_ = static_cast<int>(lib_->api().obs_dim(handle_));
    act_dim_ = static_cast<int>(lib_->api().act_dim(handle_));
    if (obs_dim_ <= 0 || act_dim_ <= 0)
      throw ConfigError("plugin " + lib_->path() +
                        ": environment advertises zero dimensions");
  }

  ~PluginEnv() override { lib_->api().destroy(handle_); }

  int obs_dim() const override { return obs_dim_; }
  int act_dim() const override { return act_dim_; }

  void reset(std::uint64_t seed, double* obs_out) override {
    const std::int32_t status = lib_->api().reset(handle_, seed, obs_out);
    if (status != GRIDTUNE_ENV_OK)
      throw RuntimeFault("plugin " + lib_->path() + ": env_reset status " +
                         std::to_string(status));
  }

  void step(const double* act, double* obs_out, double* reward_out,
            bool* terminated_out, bool* truncated_out) override {
    std::uint8_t term = 0, trunc = 0;
    const std::int32_t status = lib_->api().step(handle_, act, obs_out,
                                                 reward_out, &term, &trunc);
    if (status != GRIDTUNE_ENV_OK)
      throw RuntimeFault("plugin " + lib_->path() + ": env_step status " +
                         std::to_string(status));
    *terminated_out = term != 0;
    *truncated_out = trunc != 0;
  }

 private:
  std::shared_ptr<PluginLibrary> lib_;
  std::uint64_t handle_ = 0;
  int obs_dim_ = 0;
  int act_dim_ = 0;
};

template <typename Fn>
void resolve(void* handle, const char* name, const std::string& path, Fn& out) {
  // The function-pointer cast through void* is the POSIX dlsym idiom.
  void* sym = dlsym(handle, name);
  if (sym == nullptr)
    throw ConfigError("plugin " + path + ": missing symbol '" + name + "'");
  std::memcpy(&out, &sym, sizeof sym);
}

}  // namespace

std::shared_ptr<PluginLibrary> PluginLibrary::open(const std::string& path) {
  void* handle = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (handle == nullptr) {
    const char* err = dlerror();
    throw ConfigError("plugin " + path + ": " +
                      (err != nullptr ? err : "dlopen failed"));
  }

  auto lib = std::shared_ptr<PluginLibrary>(new PluginLibrary());
  lib->handle_ = handle;
  lib->path_ = path;
  resolve(handle, "env_api_version", path, lib->api_.api_version);
  resolve(handle, "env_create", path, lib->api_.create);
  resolve(handle, "env_obs_dim", path, lib->api_.obs_dim);
  resolve(handle, "env_act_dim", path, lib->api_.act_dim);
  resolve(handle, "env_reset", path, lib->api_.reset);
  resolve(handle, "env_step", path, lib->api_.step);
  resolve(handle, "env_destroy", path, lib->api_.destroy);

  const std::uint32_t version = lib->api_.api_version();
  if (version != GRIDTUNE_ENV_API_VERSION)
    throw ConfigError("plugin " + path + ": interface version " +
                      std::to_string(version) + ", host expects " +
                      std::to_string(GRIDTUNE_ENV_API_VERSION));
  return lib;
}

PluginLibrary::~PluginLibrary() {
  if (handle_ != nullptr) dlclose(handle_);
}

std::uint32_t PluginLibrary::api_version() const { return api_.api_version(); }

std::unique_ptr<RolloutEnv> PluginLibrary::create_env(
    const std::string& config_utf8) {
  const std::uint64_t handle =
      api_.create(config_utf8.data(), config_utf8.size());
  if (handle == 0)
    throw ConfigError("plugin " + path_ + ": rejected the environment config");
  return std::make_unique<PluginEnv>(shared_from_this(), handle);
}

}  // namespace gridtune
