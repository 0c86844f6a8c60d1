#include "gridtune/agent.hpp"

#include <cmath>

namespace gridtune {

BoundScale Agent::bound(int) const {
  throw UsageError("Agent::bound called on an unbounded policy");
}

void Agent::zero_grad() {
  for (ParamBlock& b : param_blocks())
    for (std::size_t i = 0; i < b.n; ++i) b.g[i] = 0.0;
}

FixedGainAgent::FixedGainAgent(double omega_l, std::uint64_t seed)
    : actor_(1.0, 5.0, omega_l) {
  Rng rng(seed);
  critic_ = DenseNet({8, 64, 64, 1}, {Act::relu, Act::relu, Act::identity}, rng, 1.0);
  // Exploration noise enters the plant as a voltage command at every step,
  // so its scale must sit well below the tracking-error scale or the action
  // smoothness penalty swamps the tracking terms and drags the gains down.
  log_std_ = {-4.6, -4.6};
}

void FixedGainAgent::policy_mean(const double* obs, double* mean_out) const {
  actor_.forward(obs, mean_out);
}

double FixedGainAgent::value(const double* obs) const {
  double v;
  critic_.forward({obs, 8}, {&v, 1});
  return v;
}

void FixedGainAgent::policy_forward_cached(const double* obs, double* mean_out) {
  actor_.forward_cached(obs, mean_out);
}

void FixedGainAgent::policy_backward(const double* grad_mean) {
  actor_.backward(grad_mean);
}

double FixedGainAgent::value_forward_cached(const double* obs) {
  double v;
  critic_.forward_cached({obs, 8}, {&v, 1});
  return v;
}

void FixedGainAgent::value_backward(double grad_value) {
  critic_.backward({&grad_value, 1}, {});
}

std::vector<ParamBlock> FixedGainAgent::param_blocks() {
  std::vector<ParamBlock> out;
  actor_.collect_blocks("actor", out);
  out.push_back({"log_std", log_std_.data(), g_log_std_.data(), 2});
  critic_.collect_blocks("critic", out);
  return out;
}

std::optional<PiGains> FixedGainAgent::exported_gains() const {
  return PiGains{std::abs(actor_.kp_raw()), std::abs(actor_.ki_raw())};
}

AdaptiveGainAgent::AdaptiveGainAgent(double kp_max, double ki_max, std::uint64_t seed) {
  Rng rng(seed);
  actor_ = DenseNet({4, 64, 64, 2}, {Act::tanh, Act::tanh, Act::identity}, rng, 0.01);
  critic_ = DenseNet({4, 64, 64, 1}, {Act::tanh, Act::tanh, Act::identity}, rng, 1.0);
  bounds_ = {BoundScale{0.0, kp_max}, BoundScale{0.0, ki_max}};
  log_std_ = {0.0, 0.0};
}

void AdaptiveGainAgent::policy_mean(const double* obs, double* mean_out) const {
  actor_.forward({obs, 4}, {mean_out, 2});
}

double AdaptiveGainAgent::value(const double* obs) const {
  double v;
  critic_.forward({obs, 4}, {&v, 1});
  return v;
}

void AdaptiveGainAgent::policy_forward_cached(const double* obs, double* mean_out) {
  actor_.forward_cached({obs, 4}, {mean_out, 2});
}

void AdaptiveGainAgent::policy_backward(const double* grad_mean) {
  actor_.backward({grad_mean, 2}, {});
}

double AdaptiveGainAgent::value_forward_cached(const double* obs) {
  double v;
  critic_.forward_cached({obs, 4}, {&v, 1});
  return v;
}

void AdaptiveGainAgent::value_backward(double grad_value) {
  critic_.backward({&grad_value, 1}, {});
}

std::vector<ParamBlock> AdaptiveGainAgent::param_blocks() {
  std::vector<ParamBlock> out;
  actor_.collect_blocks("actor", out);
  out.push_back({"log_std", log_std_.data(), g_log_std_.data(), 2});
  critic_.collect_blocks("critic", out);
  return out;
}

std::unique_ptr<Agent> make_agent(Variant v, const PlantParams& plant, const EnvConfig& env,
                                  std::uint64_t seed) {
  if (v == Variant::fixed_gain)
    return std::make_unique<FixedGainAgent>(plant.gfl_lf, seed);
  return std::make_unique<AdaptiveGainAgent>(env.kp_max, env.ki_max, seed);
}

}  // namespace gridtune
