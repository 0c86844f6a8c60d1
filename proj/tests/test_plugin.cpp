#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "gridtune/config.hpp"
#include "gridtune/env_plugin_abi.h"
#include "gridtune/plugin_loader.hpp"
#include "gridtune/rng.hpp"
#include "gridtune/rollout.hpp"

using namespace gridtune;

namespace {

std::string fixed_config_json() {
  return run_config_json(default_run_config(Variant::fixed_gain));
}

}  // namespace

TEST_CASE("the reference plugin loads and reports the interface version") {
  auto lib = PluginLibrary::open(REF_PLUGIN_PATH);
  CHECK(lib->api_version() == GRIDTUNE_ENV_API_VERSION);
  CHECK(lib->path() == REF_PLUGIN_PATH);
}

TEST_CASE("missing or unloadable libraries raise config errors") {
  CHECK_THROWS_AS(PluginLibrary::open("/tmp/gridtune_no_such_plugin.so"), ConfigError);
  const std::string junk = "/tmp/gridtune_junk_plugin.so";
  {
    std::ofstream f(junk);
    f << "this is not a shared library";
  }
  CHECK_THROWS_AS(PluginLibrary::open(junk), ConfigError);
  std::remove(junk.c_str());
}

TEST_CASE("an interface version mismatch is refused up front") {
  try {
    PluginLibrary::open(BAD_PLUGIN_PATH);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("version") != std::string::npos);
    CHECK(msg.find("999") != std::string::npos);
  }
}

TEST_CASE("plugin environments advertise the variant's dimensions") {
  auto lib = PluginLibrary::open(REF_PLUGIN_PATH);
  auto fixed = lib->create_env(fixed_config_json());
  CHECK(fixed->obs_dim() == 8);
  CHECK(fixed->act_dim() == 2);
  auto adaptive = lib->create_env(run_config_json(default_run_config(Variant::adaptive_gain)));
  CHECK(adaptive->obs_dim() == 4);
  CHECK(adaptive->act_dim() == 2);
}

TEST_CASE("a rejected config yields an error, not a half-built handle") {
  auto lib = PluginLibrary::open(REF_PLUGIN_PATH);
  CHECK_THROWS_AS(lib->create_env("{ not json"), ConfigError);
  CHECK_THROWS_AS(lib->create_env(R"({"plant": {"dt_sim": 0}})"), ConfigError);
  CHECK_THROWS_AS(lib->create_env(R"({"mystery": 1})"), ConfigError);
}

TEST_CASE("the plugin walks in lockstep with the in-process environment") {
  auto lib = PluginLibrary::open(REF_PLUGIN_PATH);
  auto remote = lib->create_env(fixed_config_json());

  const RunConfig cfg = default_run_config(Variant::fixed_gain);
  InProcessEnv local(cfg.plant, cfg.env);

  std::array<double, 8> obs_l{}, obs_r{};
  remote->reset(1, obs_r.data());
  local.reset(1, obs_l.data());
  for (int i = 0; i < 8; ++i) CHECK(obs_l[i] == obs_r[i]);

  Rng rng(99);
  std::uint64_t episode = 1;
  for (int step = 0; step < 10000; ++step) {
    const double act[2] = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
    double rl = 0.0, rr = 0.0;
    bool tl = false, ul = false, tr = false, ur = false;
    local.step(act, obs_l.data(), &rl, &tl, &ul);
    remote->step(act, obs_r.data(), &rr, &tr, &ur);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(obs_l[i] - obs_r[i]) <= 1e-12);
    CHECK(std::abs(rl - rr) <= 1e-12);
    CHECK(tl == tr);
    CHECK(ul == ur);
    if (tl || ul) {
      ++episode;
      local.reset(episode, obs_l.data());
      remote->reset(episode, obs_r.data());
    }
  }
}

TEST_CASE("plugin environments slot into the worker pool unchanged") {
  FixedGainAgent agent(0.15, 5);
  auto lib = PluginLibrary::open(REF_PLUGIN_PATH);
  const std::string cfg_json = fixed_config_json();
  const RunConfig cfg = default_run_config(Variant::fixed_gain);

  RolloutBuffer via_plugin, in_process;
  {
    WorkerPool pool({2, 40}, [&] { return lib->create_env(cfg_json); });
    pool.collect(agent, 64, 0.99, via_plugin);
  }
  {
    WorkerPool pool({2, 40},
                    [&] { return std::make_unique<InProcessEnv>(cfg.plant, cfg.env); });
    pool.collect(agent, 64, 0.99, in_process);
  }
  CHECK(via_plugin.obs == in_process.obs);
  CHECK(via_plugin.reward == in_process.reward);
  CHECK(via_plugin.logp == in_process.logp);
  CHECK(via_plugin.done == in_process.done);
}

TEST_CASE("destroyed or bogus handles fail with a status instead of crashing") {
  auto lib = PluginLibrary::open(REF_PLUGIN_PATH);
  const auto& api = lib->api();

  const std::string cfg = fixed_config_json();
  const std::uint64_t h = api.create(cfg.data(), cfg.size());
  REQUIRE(h != 0);
  CHECK(api.obs_dim(h) == 8);

  double obs[8], reward = 0.0;
  std::uint8_t term = 0, trunc = 0;
  CHECK(api.reset(h, 0, obs) == GRIDTUNE_ENV_OK);
  const double act[2] = {0.0, 0.0};
  CHECK(api.step(h, act, obs, &reward, &term, &trunc) == GRIDTUNE_ENV_OK);

  api.destroy(h);
  CHECK(api.step(h, act, obs, &reward, &term, &trunc) == GRIDTUNE_ENV_BAD_HANDLE);
  CHECK(api.reset(h, 0, obs) == GRIDTUNE_ENV_BAD_HANDLE);
  CHECK(api.obs_dim(h) == 0);
  api.destroy(h);  // double destroy is a no-op, not a fault

  CHECK(api.step(0, act, obs, &reward, &term, &trunc) == GRIDTUNE_ENV_BAD_HANDLE);
  CHECK(api.create(nullptr, 0) == 0);
}

TEST_CASE("null buffers are rejected as bad arguments") {
  auto lib = PluginLibrary::open(REF_PLUGIN_PATH);
  const auto& api = lib->api();
  const std::string cfg = fixed_config_json();
  const std::uint64_t h = api.create(cfg.data(), cfg.size());
  REQUIRE(h != 0);

  double obs[8], reward = 0.0;
  std::uint8_t term = 0, trunc = 0;
  const double act[2] = {0.0, 0.0};
  CHECK(api.reset(h, 0, nullptr) == GRIDTUNE_ENV_BAD_ARGUMENT);
  CHECK(api.step(h, nullptr, obs, &reward, &term, &trunc) == GRIDTUNE_ENV_BAD_ARGUMENT);
  CHECK(api.step(h, act, obs, nullptr, &term, &trunc) == GRIDTUNE_ENV_BAD_ARGUMENT);
  api.destroy(h);
}
