#include "gridtune/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridtune/errors.hpp"

namespace gridtune {

void PpoConfig::validate() const {
  if (n_steps <= 0) throw ConfigError("ppo: n_steps must be positive");
  if (batch_size <= 0) throw ConfigError("ppo: batch_size must be positive");
  if (n_steps % batch_size != 0)
    throw ConfigError("ppo: batch_size must divide n_steps");
  if (n_epochs <= 0) throw ConfigError("ppo: n_epochs must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError("ppo: gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw ConfigError("ppo: gae_lambda must lie in [0, 1]");
  if (!(clip_range > 0.0)) throw ConfigError("ppo: clip_range must be positive");
  if (!(learning_rate >= 0.0))
    throw ConfigError("ppo: learning_rate must be nonnegative");
  if (dynamic_schedule) {
    if (!(learning_rate_final >= 0.0))
      throw ConfigError("ppo: learning_rate_final must be nonnegative");
    if (!(clip_range_final > 0.0))
      throw ConfigError("ppo: clip_range_final must be positive");
  }
  if (!(vf_coef >= 0.0)) throw ConfigError("ppo: vf_coef must be nonnegative");
  if (!(ent_coef >= 0.0)) throw ConfigError("ppo: ent_coef must be nonnegative");
  if (!(max_grad_norm > 0.0))
    throw ConfigError("ppo: max_grad_norm must be positive");
  if (!(target_kl >= 0.0)) throw ConfigError("ppo: target_kl must be nonnegative");
  if (total_iterations <= 0)
    throw ConfigError("ppo: total_iterations must be positive");
  if (checkpoint_every <= 0)
    throw ConfigError("ppo: checkpoint_every must be positive");
}

PpoConfig default_ppo_config(Variant variant) {
  PpoConfig cfg;
  if (variant == Variant::adaptive_gain) {
    cfg.dynamic_schedule = true;
    cfg.n_steps = 1024;
    cfg.total_iterations = 100;
    cfg.checkpoint_every = 20;
  }
  return cfg;
}

Schedule schedule_at(const PpoConfig& cfg, double progress) {
  if (!(progress >= 0.0 && progress <= 1.0))
    throw UsageError("schedule_at: progress must lie in [0, 1]");
  Schedule s{cfg.learning_rate, cfg.clip_range};
  if (cfg.dynamic_schedule) {
    s.lr += (cfg.learning_rate_final - cfg.learning_rate) * progress;
    s.clip_range += (cfg.clip_range_final - cfg.clip_range) * progress;
  }
  return s;
}

void RolloutBuffer::resize(long steps, int obs_dim_, int act_dim_) {
  obs_dim = obs_dim_;
  act_dim = act_dim_;
  n_steps = steps;
  obs.assign(static_cast<size_t>(steps) * obs_dim_, 0.0);
  act.assign(static_cast<size_t>(steps) * act_dim_, 0.0);
  reward.assign(steps, 0.0);
  value.assign(steps, 0.0);
  logp.assign(steps, 0.0);
  done.assign(steps, 0);
  advantage.assign(steps, 0.0);
  ret.assign(steps, 0.0);
  segments.clear();
  episode_returns.clear();
  episode_lengths.clear();
  raw_reward_sum = 0.0;
}

void compute_gae(std::span<const double> reward, std::span<const double> value,
                 std::span<const std::uint8_t> done, double bootstrap_value,
                 double gamma, double lambda, std::span<double> advantage,
                 std::span<double> ret) {
  const size_t n = reward.size();
  if (value.size() != n || done.size() != n || advantage.size() != n ||
      ret.size() != n)
    throw UsageError("compute_gae: array lengths disagree");
  double adv_next = 0.0;
  double value_next = bootstrap_value;
  for (size_t i = n; i-- > 0;) {
    const double alive = done[i] ? 0.0 : 1.0;
    const double delta = reward[i] + gamma * value_next * alive - value[i];
    adv_next = delta + gamma * lambda * alive * adv_next;
    advantage[i] = adv_next;
    ret[i] = adv_next + value[i];
    value_next = value[i];
  }
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
  if (buffer.segments.empty())
    throw UsageError("compute_gae: buffer has no segments");
  for (const Segment& seg : buffer.segments) {
    if (seg.begin < 0 || seg.end > buffer.n_steps || seg.begin >= seg.end)
      throw UsageError("compute_gae: malformed segment");
    const size_t b = static_cast<size_t>(seg.begin);
    const size_t n = static_cast<size_t>(seg.end - seg.begin);
    compute_gae(std::span(buffer.reward).subspan(b, n),
                std::span(buffer.value).subspan(b, n),
                std::span(buffer.done).subspan(b, n), seg.bootstrap_value,
                gamma, lambda, std::span(buffer.advantage).subspan(b, n),
                std::span(buffer.ret).subspan(b, n));
  }
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped =
      std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  return std::min(ratio * advantage, clipped);
}

void AdamState::init(const std::vector<ParamBlock>& blocks) {
  t = 0;
  m.assign(blocks.size(), {});
  v.assign(blocks.size(), {});
  for (size_t b = 0; b < blocks.size(); ++b) {
    m[b].assign(blocks[b].n, 0.0);
    v[b].assign(blocks[b].n, 0.0);
  }
}

void adam_step(std::vector<ParamBlock>& blocks, AdamState& state, double lr) {
  if (state.m.size() != blocks.size() || state.v.size() != blocks.size())
    throw UsageError("adam_step: state does not match parameter blocks");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t b = 0; b < blocks.size(); ++b) {
    ParamBlock& blk = blocks[b];
    if (state.m[b].size() != static_cast<size_t>(blk.n))
      throw UsageError("adam_step: moment shape mismatch");
    for (long i = 0; i < blk.n; ++i) {
      const double g = blk.g[i];
      double& mi = state.m[b][static_cast<size_t>(i)];
      double& vi = state.v[b][static_cast<size_t>(i)];
      mi = state.beta1 * mi + (1.0 - state.beta1) * g;
      vi = state.beta2 * vi + (1.0 - state.beta2) * g * g;
      blk.w[i] -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + state.eps);
    }
  }
}

double clip_grad_norm(std::vector<ParamBlock>& blocks, double max_norm) {
  double sq = 0.0;
  for (const ParamBlock& blk : blocks)
    for (long i = 0; i < blk.n; ++i) sq += blk.g[i] * blk.g[i];
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (ParamBlock& blk : blocks)
      for (long i = 0; i < blk.n; ++i) blk.g[i] *= scale;
  }
  return norm;
}

namespace {

void shuffle_indices(std::vector<long>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.raw() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

UpdateStats ppo_update(Agent& agent, const RolloutBuffer& buffer,
                       const PpoConfig& cfg, const Schedule& sched,
                       AdamState& adam, Rng& rng) {
  const long n = buffer.n_steps;
  const long mb_size = cfg.batch_size;
  if (n <= 0 || n % mb_size != 0)
    throw UsageError("ppo_update: batch_size must divide buffer length");
  const int od = buffer.obs_dim;
  const int ad = buffer.act_dim;
  if (od != agent.obs_dim() || ad != agent.act_dim())
    throw UsageError("ppo_update: buffer dimensions do not match agent");

  std::vector<ParamBlock> blocks = agent.param_blocks();
  if (!adam.initialized()) adam.init(blocks);

  std::vector<long> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);

  UpdateStats stats;
  double policy_sum = 0.0, value_sum = 0.0, entropy_sum = 0.0;
  double kl_sum = 0.0, clip_sum = 0.0;
  long measured = 0;  // minibatches that contributed to the averages

  std::array<double, 2> mean{};
  std::array<double, 2> grad_mean{};
  std::vector<double> adv_n(static_cast<size_t>(mb_size));

  bool stop = false;
  for (int epoch = 0; epoch < cfg.n_epochs && !stop; ++epoch) {
    shuffle_indices(idx, rng);
    for (long mb = 0; mb < n / mb_size && !stop; ++mb) {
      const long* mb_idx = idx.data() + mb * mb_size;

      double adv_mean = 0.0;
      for (long k = 0; k < mb_size; ++k)
        adv_mean += buffer.advantage[static_cast<size_t>(mb_idx[k])];
      adv_mean /= static_cast<double>(mb_size);
      double adv_var = 0.0;
      for (long k = 0; k < mb_size; ++k) {
        const double d =
            buffer.advantage[static_cast<size_t>(mb_idx[k])] - adv_mean;
        adv_var += d * d;
      }
      const double adv_std = std::sqrt(adv_var / static_cast<double>(mb_size));
      for (long k = 0; k < mb_size; ++k)
        adv_n[static_cast<size_t>(k)] =
            (buffer.advantage[static_cast<size_t>(mb_idx[k])] - adv_mean) /
            (adv_std + 1e-8);

      agent.zero_grad();
      double mb_policy = 0.0, mb_value = 0.0, mb_kl = 0.0, mb_clip = 0.0;
      const auto& log_std = agent.log_std();

      for (long k = 0; k < mb_size; ++k) {
        const size_t i = static_cast<size_t>(mb_idx[k]);
        const double* o = buffer.obs.data() + i * static_cast<size_t>(od);
        const double* a = buffer.act.data() + i * static_cast<size_t>(ad);

        agent.policy_forward_cached(o, mean.data());
        double logp = gaussian_logp(std::span(mean.data(), 2),
                                    std::span(log_std.data(), 2),
                                    std::span(a, 2));
        if (agent.squashed())
          for (int j = 0; j < ad; ++j) logp -= squash_log_det(a[j], agent.bound(j));

        const double log_ratio = logp - buffer.logp[i];
        const double ratio = std::exp(log_ratio);
        mb_kl += (ratio - 1.0) - log_ratio;
        if (std::abs(ratio - 1.0) > sched.clip_range) mb_clip += 1.0;

        const double unclipped = ratio * adv_n[static_cast<size_t>(k)];
        const double clipped =
            std::clamp(ratio, 1.0 - sched.clip_range, 1.0 + sched.clip_range) *
            adv_n[static_cast<size_t>(k)];
        mb_policy += -std::min(unclipped, clipped);

        // d(-surrogate)/dlogp; zero when the clipped branch is active.
        const double dloss_dlogp =
            unclipped <= clipped
                ? -adv_n[static_cast<size_t>(k)] * ratio /
                      static_cast<double>(mb_size)
                : 0.0;
        for (int j = 0; j < ad; ++j) {
          const double sigma = std::exp(log_std[static_cast<size_t>(j)]);
          const double z = (a[j] - mean[static_cast<size_t>(j)]) / sigma;
          grad_mean[static_cast<size_t>(j)] = dloss_dlogp * z / sigma;
          agent.grad_log_std(j) += dloss_dlogp * (z * z - 1.0);
        }
        agent.policy_backward(grad_mean.data());

        const double v = agent.value_forward_cached(o);
        const double verr = v - buffer.ret[i];
        mb_value += verr * verr;
        agent.value_backward(cfg.vf_coef * 2.0 * verr /
                             static_cast<double>(mb_size));
      }

      mb_policy /= static_cast<double>(mb_size);
      mb_value /= static_cast<double>(mb_size);
      mb_kl /= static_cast<double>(mb_size);
      mb_clip /= static_cast<double>(mb_size);
      const double mb_entropy = gaussian_entropy(std::span(log_std.data(), 2));

      if (!std::isfinite(mb_policy) || !std::isfinite(mb_value) ||
          !std::isfinite(mb_kl))
        throw RuntimeFault("ppo_update: non-finite loss");

      policy_sum += mb_policy;
      value_sum += mb_value;
      entropy_sum += mb_entropy;
      kl_sum += mb_kl;
      clip_sum += mb_clip;
      measured += 1;

      if (cfg.target_kl > 0.0 && mb_kl > cfg.target_kl) {
        stats.early_stopped = true;
        stop = true;
        break;  // gradients of this minibatch are discarded
      }

      for (int j = 0; j < ad; ++j) agent.grad_log_std(j) -= cfg.ent_coef;
      clip_grad_norm(blocks, cfg.max_grad_norm);
      adam_step(blocks, adam, sched.lr);
      stats.minibatches_applied += 1;
    }
  }

  if (measured > 0) {
    stats.policy_loss = policy_sum / static_cast<double>(measured);
    stats.value_loss = value_sum / static_cast<double>(measured);
    stats.entropy = entropy_sum / static_cast<double>(measured);
    stats.approx_kl = kl_sum / static_cast<double>(measured);
    stats.clip_frac = clip_sum / static_cast<double>(measured);
  }
  return stats;
}

}  // namespace gridtune
