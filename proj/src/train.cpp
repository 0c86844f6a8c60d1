#include "gridtune/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "gridtune/checkpoint.hpp"
#include "gridtune/errors.hpp"
#include "gridtune/plugin_loader.hpp"
#include "gridtune/rollout.hpp"

namespace gridtune {

namespace {

// Worker rng streams live at a fixed offset from the agent-init stream so
// the two never share a seed.
constexpr std::uint64_t kWorkerSeedOffset = 1000003;
constexpr std::uint64_t kShuffleSeedOffset = 2000003;

std::string checkpoint_name(long iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%04ld.ckpt", iteration);
  return buf;
}

// Wall-clock timing stays out of this file on purpose: identical runs must
// produce identical stats bytes, and timing belongs in the progress log.
void append_stats_row(std::ofstream& f, long iter, long steps, double ep_mean,
                      double step_mean, const UpdateStats& u,
                      const Schedule& sched) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%ld,%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                iter, steps, ep_mean, step_mean, u.policy_loss, u.value_loss,
                u.entropy, u.approx_kl, u.clip_frac, sched.lr,
                sched.clip_range);
  f << buf;
}

}  // namespace

TrainResult train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw ConfigError("train: out_dir must be set");

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);

  {
    std::ofstream f(out / "config.json", std::ios::binary);
    if (!f) throw RuntimeFault("train: cannot write " + (out / "config.json").string());
    f << run_config_json(cfg);
  }

  EnvFactory factory;
  std::shared_ptr<PluginLibrary> plugin;
  if (cfg.plugin_path.empty()) {
    factory = [&cfg]() -> std::unique_ptr<RolloutEnv> {
      return std::make_unique<InProcessEnv>(cfg.plant, cfg.env);
    };
  } else {
    plugin = PluginLibrary::open(cfg.plugin_path);
    const std::string doc = run_config_json(cfg);
    factory = [plugin, doc]() { return plugin->create_env(doc); };
  }

  WorkerPoolConfig pool_cfg;
  pool_cfg.n_workers = cfg.workers;
  pool_cfg.base_seed = cfg.ppo.seed + kWorkerSeedOffset;
  WorkerPool pool(pool_cfg, factory);

  std::unique_ptr<Agent> agent =
      make_agent(cfg.variant, cfg.plant, cfg.env, cfg.ppo.seed);
  AdamState adam;
  RolloutBuffer buffer;
  Rng shuffle_rng(cfg.ppo.seed + kShuffleSeedOffset);

  const std::string stats_path = (out / "stats.csv").string();
  std::ofstream stats(stats_path, std::ios::binary);
  if (!stats) throw RuntimeFault("train: cannot write " + stats_path);
  stats << "iter,steps,ep_reward_mean,step_reward_mean,policy_loss,value_loss,"
           "entropy,approx_kl,clip_frac,lr,clip_range\n";

  TrainResult result;
  result.out_dir = cfg.out_dir;
  result.stats_path = stats_path;

  const PpoConfig& ppo = cfg.ppo;
  double ep_reward_mean = std::nan("");
  TrainProgress progress;
  progress.total_iterations = ppo.total_iterations;

  auto save = [&](const std::string& name) {
    const std::string path = (out / name).string();
    save_checkpoint(path, *agent, adam, progress);
    return path;
  };

  try {
    for (long iter = 1; iter <= ppo.total_iterations; ++iter) {
      const auto t0 = std::chrono::steady_clock::now();
      const double frac = static_cast<double>(iter - 1) /
                          static_cast<double>(ppo.total_iterations);
      const Schedule sched = schedule_at(ppo, frac);

      pool.collect(*agent, ppo.n_steps, ppo.gamma, buffer);
      compute_gae(buffer, ppo.gamma, ppo.gae_lambda);
      const UpdateStats u =
          ppo_update(*agent, buffer, ppo, sched, adam, shuffle_rng);

      progress.iteration = iter;
      progress.env_steps = iter * ppo.n_steps;
      result.env_steps = progress.env_steps;
      result.episodes += static_cast<long>(buffer.episode_returns.size());

      if (!buffer.episode_returns.empty()) {
        double sum = 0.0;
        for (double r : buffer.episode_returns) sum += r;
        ep_reward_mean = sum / static_cast<double>(buffer.episode_returns.size());
      }
      const double step_reward_mean =
          buffer.raw_reward_sum / static_cast<double>(ppo.n_steps);

      append_stats_row(stats, iter, progress.env_steps, ep_reward_mean,
                       step_reward_mean, u, sched);
      stats.flush();

      if (iter % ppo.checkpoint_every == 0 && iter != ppo.total_iterations)
        save(checkpoint_name(iter));

      const auto t1 = std::chrono::steady_clock::now();
      const double seconds = std::chrono::duration<double>(t1 - t0).count();
      char line[256];
      std::snprintf(line, sizeof line,
                    "iter %ld/%ld  step_reward %.4f  ep_reward %.1f  kl %.4f  %.2fs%s",
                    iter, ppo.total_iterations, step_reward_mean,
                    ep_reward_mean, u.approx_kl, seconds,
                    u.early_stopped ? "  (early stop)" : "");
      log << line << "\n" << std::flush;
    }
  } catch (...) {
    try {
      save("diagnostic.ckpt");
      log << "training aborted; diagnostic checkpoint written\n";
    } catch (...) {
      // the original error matters more
    }
    throw;
  }

  result.final_checkpoint = save("final.ckpt");
  return result;
}

}  // namespace gridtune
