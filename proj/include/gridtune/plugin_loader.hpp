#pragma once
// Host side of the environment plugin interface: loads a shared library,
// gates on the interface version, and wraps plugin handles as rollout
// environments.

#include <cstdint>
#include <memory>
#include <string>

#include "gridtune/rollout.hpp"

namespace gridtune {

class PluginLibrary : public std::enable_shared_from_this<PluginLibrary> {
 public:
  // Loads and version-checks the library; throws ConfigError when the file
  // is missing, a symbol cannot be resolved, or the version does not match.
  static std::shared_ptr<PluginLibrary> open(const std::string& path);
  ~PluginLibrary();

  PluginLibrary(const PluginLibrary&) = delete;
  PluginLibrary& operator=(const PluginLibrary&) = delete;

  std::uint32_t api_version() const;
  const std::string& path() const { return path_; }

  // Creates one plugin-backed environment from a run-config document; the
  // environment keeps this library loaded for its whole lifetime.
  std::unique_ptr<RolloutEnv> create_env(const std::string& config_utf8);

  struct Api {
    std::uint32_t (*api_version)(void) = nullptr;
    std::uint64_t (*create)(const char*, std::uint64_t) = nullptr;
    std::uint32_t (*obs_dim)(std::uint64_t) = nullptr;
    std::uint32_t (*act_dim)(std::uint64_t) = nullptr;
    std::int32_t (*reset)(std::uint64_t, std::uint64_t, double*) = nullptr;
    std::int32_t (*step)(std::uint64_t, const double*, double*, double*,
                         std::uint8_t*, std::uint8_t*) = nullptr;
    void (*destroy)(std::uint64_t) = nullptr;
  };
  const Api& api() const { return api_; }

 private:
  PluginLibrary() = default;

  void* handle_ = nullptr;
  Api api_;
  std::string path_;
};

}  // namespace gridtune
