#include "gridtune/rollout.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gridtune/errors.hpp"

namespace gridtune {

void InProcessEnv::reset(std::uint64_t seed, double* obs_out) {
  const auto obs = env_.reset(seed);
  std::memcpy(obs_out, obs.data(), sizeof(double) * static_cast<size_t>(obs_dim()));
}

void InProcessEnv::step(const double* act, double* obs_out, double* reward_out,
                        bool* terminated_out, bool* truncated_out) {
  const StepResult r = env_.step(Vec2{act[0], act[1]});
  std::memcpy(obs_out, r.obs.data(), sizeof(double) * static_cast<size_t>(obs_dim()));
  *reward_out = r.reward;
  *terminated_out = r.terminated;
  *truncated_out = r.truncated;
}

WorkerPool::WorkerPool(const WorkerPoolConfig& cfg, const EnvFactory& factory) {
  if (cfg.n_workers < 1) throw ConfigError("worker pool: n_workers must be >= 1");
  workers_.reserve(static_cast<size_t>(cfg.n_workers));
  for (int i = 0; i < cfg.n_workers; ++i) {
    auto env = factory();
    if (!env) throw ConfigError("worker pool: environment factory returned null");
    workers_.emplace_back(std::move(env), cfg.base_seed + static_cast<std::uint64_t>(i));
  }
}

void WorkerPool::prepare(const Agent& agent, long n_steps,
                         RolloutBuffer& out) const {
  if (n_steps <= 0) throw ConfigError("worker pool: n_steps must be positive");
  if (n_steps % n_workers() != 0)
    throw ConfigError("worker pool: n_workers must divide n_steps");
  const int od = workers_.front().env->obs_dim();
  if (od != agent.obs_dim())
    throw ConfigError("worker pool: environment and agent disagree on obs_dim");
  out.resize(n_steps, od, agent.act_dim());
}

void WorkerPool::collect_worker(Worker& w, const Agent& agent, long begin,
                                long end, double gamma, RolloutBuffer& out) {
  const int od = out.obs_dim;
  const int ad = out.act_dim;
  const auto& log_std = agent.log_std();
  const bool squashed = agent.squashed();

  w.ep_returns.clear();
  w.ep_lengths.clear();
  w.raw_reward_sum = 0.0;

  if (!w.have_obs) {
    w.env->reset(w.seed + w.episode, w.obs.data());
    w.have_obs = true;
    w.ep_return = 0.0;
    w.ep_len = 0;
  }

  std::array<double, 2> mean{}, raw{}, act_env{};
  std::array<double, 8> obs_next{};

  for (long t = begin; t < end; ++t) {
    double* obs_row = out.obs.data() + static_cast<size_t>(t) * od;
    std::memcpy(obs_row, w.obs.data(), sizeof(double) * static_cast<size_t>(od));

    agent.policy_mean(w.obs.data(), mean.data());
    for (int j = 0; j < ad; ++j) {
      const size_t uj = static_cast<size_t>(j);
      raw[uj] = mean[uj] + std::exp(log_std[uj]) * w.rng.normal();
    }
    double logp = gaussian_logp(std::span(mean.data(), 2),
                                std::span(log_std.data(), 2),
                                std::span(raw.data(), 2));
    if (squashed) {
      for (int j = 0; j < ad; ++j) {
        const size_t uj = static_cast<size_t>(j);
        act_env[uj] = squash(raw[uj], agent.bound(j));
        logp -= squash_log_det(raw[uj], agent.bound(j));
      }
    } else {
      act_env = raw;
    }

    double reward = 0.0;
    bool terminated = false, truncated = false;
    w.env->step(act_env.data(), obs_next.data(), &reward, &terminated,
                &truncated);

    double* act_row = out.act.data() + static_cast<size_t>(t) * ad;
    std::memcpy(act_row, raw.data(), sizeof(double) * static_cast<size_t>(ad));
    out.value[static_cast<size_t>(t)] = agent.value(w.obs.data());
    out.logp[static_cast<size_t>(t)] = logp;

    w.raw_reward_sum += reward;
    w.ep_return += reward;
    w.ep_len += 1;

    const bool done = terminated || truncated;
    double stored = reward;
    if (truncated && !terminated)
      stored += gamma * agent.value(obs_next.data());
    out.reward[static_cast<size_t>(t)] = stored;
    out.done[static_cast<size_t>(t)] = done ? 1 : 0;

    if (done) {
      w.ep_returns.push_back(w.ep_return);
      w.ep_lengths.push_back(w.ep_len);
      w.episode += 1;
      w.env->reset(w.seed + w.episode, w.obs.data());
      w.ep_return = 0.0;
      w.ep_len = 0;
    } else {
      w.obs = obs_next;
    }
  }
}

void WorkerPool::merge_bookkeeping(RolloutBuffer& out) {
  for (Worker& w : workers_) {
    out.raw_reward_sum += w.raw_reward_sum;
    out.episode_returns.insert(out.episode_returns.end(), w.ep_returns.begin(),
                               w.ep_returns.end());
    out.episode_lengths.insert(out.episode_lengths.end(), w.ep_lengths.begin(),
                               w.ep_lengths.end());
  }
}

namespace {

[[noreturn]] void rethrow_worker_failure(int worker, std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    throw RuntimeFault("rollout worker " + std::to_string(worker) + ": " +
                       e.what());
  }
}

}  // namespace

void WorkerPool::collect(const Agent& agent, long n_steps, double gamma,
                         RolloutBuffer& out) {
  prepare(agent, n_steps, out);
  const long per = n_steps / n_workers();
  const int nw = n_workers();
  std::vector<std::exception_ptr> failures(static_cast<size_t>(nw));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(nw)
#endif
  for (int i = 0; i < nw; ++i) {
    try {
      collect_worker(workers_[static_cast<size_t>(i)], agent, per * i,
                     per * (i + 1), gamma, out);
    } catch (...) {
      failures[static_cast<size_t>(i)] = std::current_exception();
    }
  }

  for (int i = 0; i < nw; ++i)
    if (failures[static_cast<size_t>(i)])
      rethrow_worker_failure(i, failures[static_cast<size_t>(i)]);

  for (int i = 0; i < nw; ++i) {
    const long last = per * (i + 1) - 1;
    Segment seg{per * i, per * (i + 1), 0.0};
    if (!out.done[static_cast<size_t>(last)])
      seg.bootstrap_value =
          agent.value(workers_[static_cast<size_t>(i)].obs.data());
    out.segments.push_back(seg);
  }
  merge_bookkeeping(out);
}

void WorkerPool::collect_serial(const Agent& agent, long n_steps, double gamma,
                                RolloutBuffer& out) {
  prepare(agent, n_steps, out);
  const long per = n_steps / n_workers();
  const int nw = n_workers();

  for (int i = 0; i < nw; ++i)
    collect_worker(workers_[static_cast<size_t>(i)], agent, per * i,
                   per * (i + 1), gamma, out);

  for (int i = 0; i < nw; ++i) {
    const long last = per * (i + 1) - 1;
    Segment seg{per * i, per * (i + 1), 0.0};
    if (!out.done[static_cast<size_t>(last)])
      seg.bootstrap_value =
          agent.value(workers_[static_cast<size_t>(i)].obs.data());
    out.segments.push_back(seg);
  }
  merge_bookkeeping(out);
}

double measure_steps_per_second(WorkerPool& pool, const Agent& agent,
                                long n_steps, double gamma, bool parallel) {
  RolloutBuffer scratch;
  const auto t0 = std::chrono::steady_clock::now();
  if (parallel)
    pool.collect(agent, n_steps, gamma, scratch);
  else
    pool.collect_serial(agent, n_steps, gamma, scratch);
  const auto t1 = std::chrono::steady_clock::now();
  const double seconds = std::chrono::duration<double>(t1 - t0).count();
  return static_cast<double>(n_steps) / (seconds > 0.0 ? seconds : 1e-9);
}

}  // namespace gridtune
