#pragma once
// Clipped-surrogate policy optimization: rollout buffer, generalized
// advantage estimation, Adam, minibatched updates with KL early stopping,
// and the linear lr/clip schedules used by the adaptive-gain runs.

#include <cstdint>
#include <span>
#include <vector>

#include "gridtune/agent.hpp"
#include "gridtune/env.hpp"
#include "gridtune/rng.hpp"

namespace gridtune {

struct PpoConfig {
  double learning_rate = 3e-4;
  double clip_range = 0.2;
  // Linear anneal from the base values to the *_final values over training
  // progress; both stay constant when dynamic_schedule is off.
  bool dynamic_schedule = false;
  double learning_rate_final = 3e-5;
  double clip_range_final = 0.05;

  long n_steps = 4800;
  long batch_size = 64;
  int n_epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  double target_kl = 0.02;  // 0 disables early stopping
  long total_iterations = 50;
  std::uint64_t seed = 0;
  long checkpoint_every = 10;  // iterations between periodic checkpoints

  void validate() const;
};

PpoConfig default_ppo_config(Variant variant);

struct Schedule {
  double lr = 0.0;
  double clip_range = 0.0;
};

// progress runs from 0 at the start of training to 1 at the end.
Schedule schedule_at(const PpoConfig& cfg, double progress);

// One worker's contiguous slice of a rollout. Advantage estimation never
// crosses a segment boundary; each segment carries the critic's bootstrap
// value for the state after its last stored transition (zero when that
// transition ended an episode).
struct Segment {
  long begin = 0;
  long end = 0;
  double bootstrap_value = 0.0;
};

struct RolloutBuffer {
  int obs_dim = 0;
  int act_dim = 0;
  long n_steps = 0;

  std::vector<double> obs;     // n_steps * obs_dim
  std::vector<double> act;     // raw (pre-squash) actions, n_steps * act_dim
  std::vector<double> reward;  // truncation bootstrap already folded in
  std::vector<double> value;
  std::vector<double> logp;
  std::vector<std::uint8_t> done;
  std::vector<double> advantage;
  std::vector<double> ret;

  std::vector<Segment> segments;

  // Stats bookkeeping; episode returns are sums of raw env rewards.
  std::vector<double> episode_returns;
  std::vector<long> episode_lengths;
  double raw_reward_sum = 0.0;

  void resize(long steps, int obs_dim_, int act_dim_);
};

// delta_t = r_t + gamma*V(s_{t+1})*(1-done_t) - V(s_t)
// A_t     = delta_t + gamma*lambda*(1-done_t)*A_{t+1}
// with V(s_{n}) taken from bootstrap_value past the end; ret = A + V.
void compute_gae(std::span<const double> reward, std::span<const double> value,
                 std::span<const std::uint8_t> done, double bootstrap_value,
                 double gamma, double lambda, std::span<double> advantage,
                 std::span<double> ret);

// Applies the recursion independently to every segment of the buffer.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

// min(ratio*adv, clip(ratio, 1-eps, 1+eps)*adv); the pessimistic bound.
double clipped_surrogate(double ratio, double advantage, double epsilon);

struct AdamState {
  long t = 0;  // completed update steps
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const std::vector<ParamBlock>& blocks);
  bool initialized() const { return !m.empty(); }
};

// One bias-corrected moment update over every block. Gradients are read from
// the blocks and left untouched; state must match the block shapes.
void adam_step(std::vector<ParamBlock>& blocks, AdamState& state, double lr);

// Scales all gradients so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(std::vector<ParamBlock>& blocks, double max_norm);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_frac = 0.0;
  long minibatches_applied = 0;
  bool early_stopped = false;
};

// n_epochs passes over seeded-shuffled minibatches. Per minibatch:
// advantages normalized (mean 0, std 1, 1e-8 guard), fresh logp/value,
// loss -L_clip + vf_coef*L_vf - ent_coef*S, global grad clip, Adam step.
// Stops before applying a minibatch whose mean approx KL
// mean((ratio-1) - log ratio) exceeds target_kl.
UpdateStats ppo_update(Agent& agent, const RolloutBuffer& buffer,
                       const PpoConfig& cfg, const Schedule& sched,
                       AdamState& adam, Rng& rng);

}  // namespace gridtune
