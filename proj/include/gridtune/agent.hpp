#pragma once

#include <array>
#include <memory>
#include <optional>

#include "gridtune/env.hpp"
#include "gridtune/nets.hpp"

namespace gridtune {

// One actor-critic model. Inference entry points are const and reentrant;
// the cached forward/backward pair serves the optimizer on a single thread.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual Variant variant() const = 0;
  virtual int obs_dim() const = 0;
  int act_dim() const { return 2; }

  virtual void policy_mean(const double* obs, double* mean_out) const = 0;
  virtual double value(const double* obs) const = 0;

  // Whether raw policy samples pass through the tanh bound mapping before
  // reaching the environment.
  virtual bool squashed() const = 0;
  virtual BoundScale bound(int i) const;

  const std::array<double, 2>& log_std() const { return log_std_; }
  double& grad_log_std(int i) { return g_log_std_[static_cast<size_t>(i)]; }

  virtual void policy_forward_cached(const double* obs, double* mean_out) = 0;
  virtual void policy_backward(const double* grad_mean) = 0;
  virtual double value_forward_cached(const double* obs) = 0;
  virtual void value_backward(double grad_value) = 0;

  // All trainable tensors, log_std included; order is stable and matches the
  // checkpoint layout.
  virtual std::vector<ParamBlock> param_blocks() = 0;
  void zero_grad();

  // Controller gains a trained model resolves to, when that is meaningful.
  virtual std::optional<PiGains> exported_gains() const { return std::nullopt; }

 protected:
  std::array<double, 2> log_std_{0.0, 0.0};
  std::array<double, 2> g_log_std_{0.0, 0.0};
};

// Trainable-gain current controller as the actor, dense value net as critic.
class FixedGainAgent : public Agent {
 public:
  FixedGainAgent(double omega_l, std::uint64_t seed);

  Variant variant() const override { return Variant::fixed_gain; }
  int obs_dim() const override { return 8; }
  void policy_mean(const double* obs, double* mean_out) const override;
  double value(const double* obs) const override;
  bool squashed() const override { return false; }

  void policy_forward_cached(const double* obs, double* mean_out) override;
  void policy_backward(const double* grad_mean) override;
  double value_forward_cached(const double* obs) override;
  void value_backward(double grad_value) override;
  std::vector<ParamBlock> param_blocks() override;
  std::optional<PiGains> exported_gains() const override;

  double omega_l() const { return actor_.omega_l(); }

 private:
  PiActor actor_;
  DenseNet critic_;
};

// Dense policy emitting (kp, ki) through tanh bounds, dense critic.
class AdaptiveGainAgent : public Agent {
 public:
  AdaptiveGainAgent(double kp_max, double ki_max, std::uint64_t seed);

  Variant variant() const override { return Variant::adaptive_gain; }
  int obs_dim() const override { return 4; }
  void policy_mean(const double* obs, double* mean_out) const override;
  double value(const double* obs) const override;
  bool squashed() const override { return true; }
  BoundScale bound(int i) const override { return bounds_[i]; }

  void policy_forward_cached(const double* obs, double* mean_out) override;
  void policy_backward(const double* grad_mean) override;
  double value_forward_cached(const double* obs) override;
  void value_backward(double grad_value) override;
  std::vector<ParamBlock> param_blocks() override;

 private:
  DenseNet actor_;
  DenseNet critic_;
  std::array<BoundScale, 2> bounds_;
};

std::unique_ptr<Agent> make_agent(Variant v, const PlantParams& plant, const EnvConfig& env,
                                  std::uint64_t seed);

}  // namespace gridtune
