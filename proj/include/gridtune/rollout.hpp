#pragma once
// Trajectory collection across worker contexts. Every worker owns a private
// environment and rng stream and writes a disjoint buffer slice, so the
// merged rollout does not depend on how workers are scheduled. A serial
// reference path exercises the identical per-worker routine.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "gridtune/agent.hpp"
#include "gridtune/env.hpp"
#include "gridtune/ppo.hpp"

namespace gridtune {

// Step/reset surface the collector needs; satisfied by the in-process
// environment and by plugin-backed environments.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual void reset(std::uint64_t seed, double* obs_out) = 0;
  virtual void step(const double* act, double* obs_out, double* reward_out,
                    bool* terminated_out, bool* truncated_out) = 0;
};

class InProcessEnv : public RolloutEnv {
 public:
  InProcessEnv(const PlantParams& plant, const EnvConfig& cfg) : env_(plant, cfg) {}
  int obs_dim() const override { return env_.obs_dim(); }
  int act_dim() const override { return env_.act_dim(); }
  void reset(std::uint64_t seed, double* obs_out) override;
  void step(const double* act, double* obs_out, double* reward_out,
            bool* terminated_out, bool* truncated_out) override;

 private:
  Environment env_;
};

using EnvFactory = std::function<std::unique_ptr<RolloutEnv>()>;

struct WorkerPoolConfig {
  int n_workers = 1;
  std::uint64_t base_seed = 0;  // worker i draws from stream base_seed + i
};

class WorkerPool {
 public:
  WorkerPool(const WorkerPoolConfig& cfg, const EnvFactory& factory);

  int n_workers() const { return static_cast<int>(workers_.size()); }
  int obs_dim() const { return workers_.front().env->obs_dim(); }

  // Fills `out` with n_steps transitions sampled from the agent's current
  // parameters, split evenly across workers (n_workers must divide n_steps).
  // Episodes continue across calls; worker state only ever advances through
  // its own slice, so repeated runs from a fresh pool are reproducible.
  // gamma discounts the critic bootstrap folded into truncated-step rewards.
  void collect(const Agent& agent, long n_steps, double gamma,
               RolloutBuffer& out);
  // Same routine without the parallel region; reference for testing and the
  // 1-worker baseline in benchmarks.
  void collect_serial(const Agent& agent, long n_steps, double gamma,
                      RolloutBuffer& out);

 private:
  struct Worker {
    std::unique_ptr<RolloutEnv> env;
    Rng rng;
    std::uint64_t seed = 0;
    std::array<double, 8> obs{};
    bool have_obs = false;
    std::uint64_t episode = 0;
    double ep_return = 0.0;
    long ep_len = 0;
    // per-collect scratch, merged in worker order afterwards
    std::vector<double> ep_returns;
    std::vector<long> ep_lengths;
    double raw_reward_sum = 0.0;

    Worker(std::unique_ptr<RolloutEnv> e, std::uint64_t s)
        : env(std::move(e)), rng(s), seed(s) {}
  };

  void collect_worker(Worker& w, const Agent& agent, long begin, long end,
                      double gamma, RolloutBuffer& out);
  void prepare(const Agent& agent, long n_steps, RolloutBuffer& out) const;
  void merge_bookkeeping(RolloutBuffer& out);

  std::vector<Worker> workers_;
};

// Wall-clock collection throughput in environment steps per second.
double measure_steps_per_second(WorkerPool& pool, const Agent& agent,
                                long n_steps, double gamma, bool parallel);

}  // namespace gridtune
