#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>

#include "gridtune/plant.hpp"

namespace gridtune {

enum class Variant { fixed_gain, adaptive_gain };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);  // throws ConfigError

// Observation layouts. The fixed-gain agent sees the current controller's
// inputs; the adaptive-gain agent sees the power tracking picture.
using FixedObs = std::array<double, 8>;     // e_d, int_e_d, e_q, int_e_q, vd, vq, ild, ilq
using AdaptiveObs = std::array<double, 4>;  // p, q, p_err, q_err

struct RewardWeightsFixed {
  double q1 = -1.0;   // d-axis tracking error squared
  double q2 = -1.0;   // q-axis tracking error squared
  double q3 = -0.1;   // d action squared
  double q4 = -0.1;   // q action squared
  double q5 = -5.0;   // action roughness vs. its low-pass
  double q6 = -1.0;   // power consumption magnitude, active only when p < 0
};

struct RewardWeightsAdaptive {
  double q1 = 10.0;  // p tracking error squared
  double q2 = 5.0;   // q tracking error squared
  double q3 = 0.1;   // normalized kp squared
  double q4 = 0.1;   // normalized ki squared
};

struct EnvConfig {
  Variant variant = Variant::fixed_gain;
  double episode_length = 2.0;  // s, at most 5.0
  int decimation = 1;           // plant steps per agent action
  double pref = 0.5;            // pu
  double qref = 0.0;
  double obs_bound = 2.0;      // limit on bounded observation elements
  double action_bound = 2.0;   // per-component Udq clamp, fixed variant
  double kp_max = 20.0;        // adaptive action bounds (lower bound 0)
  double ki_max = 100.0;
  double lpf_alpha = 0.05;     // action smoothing filter, per agent step
  double termination_penalty = -10.0;
  RewardWeightsFixed fixed_weights;
  RewardWeightsAdaptive adaptive_weights;

  void validate(const PlantParams& plant) const;  // throws ConfigError
  long episode_steps(const PlantParams& plant) const;  // agent steps per episode
};

EnvConfig default_env_config(Variant v);

// Limit checks exclude the error integrals (indices 1 and 3), which the
// source tables leave unbounded. Bounds are closed: exactly +-bound is legal.
bool check_limits(const FixedObs& obs, double bound);
bool check_limits(const AdaptiveObs& obs, double bound);

// Reward of the fixed-gain (controller-replacement) model. The low-pass
// state is evaluated against the action first and updated afterwards.
double reward_fixed(double err_d, double err_q, Vec2 action, Vec2& lpf_state, double p,
                    const RewardWeightsFixed& w, double lpf_alpha);

// Reward of the adaptive-gain model; actions arrive normalized to [0, 1].
double reward_adaptive(double p_err, double q_err, Vec2 action_norm,
                       const RewardWeightsAdaptive& w);

struct StepInfo {
  double t = 0.0;
  double p = 0.0;
  double q = 0.0;
  double kp = 0.0;  // gains in effect; zero for the fixed variant
  double ki = 0.0;
  Vec2 u;           // voltage command applied on the last plant sub-step
  Vec2 iref;        // post-step current reference
  Vec2 action_raw;  // action as received, before clamping
};

struct StepResult {
  std::array<double, 8> obs{};  // first obs_dim entries are valid
  double reward = 0.0;
  bool terminated = false;  // limit violation
  bool truncated = false;   // episode time elapsed
  StepInfo info;
};

class Environment {
 public:
  Environment(const PlantParams& plant, const EnvConfig& config);

  int obs_dim() const { return cfg_.variant == Variant::fixed_gain ? 8 : 4; }
  int act_dim() const { return 2; }
  const EnvConfig& config() const { return cfg_; }
  const PlantParams& plant_params() const { return plant_; }
  const PlantState& plant_state() const { return st_; }
  bool alive() const { return alive_; }

  std::array<double, 8> reset(std::uint64_t seed);
  StepResult step(Vec2 action);  // dispatches on the configured variant

 private:
  StepResult step_fixed(Vec2 action);
  StepResult step_adaptive(Vec2 action);
  void fill_fixed_obs(std::array<double, 8>& obs) const;
  void fill_adaptive_obs(std::array<double, 8>& obs) const;
  void finish_step(StepResult& r);

  PlantParams plant_;
  EnvConfig cfg_;
  PlantState st_;
  Vec2 lpf_;
  long step_count_ = 0;
  long max_steps_ = 0;
  bool alive_ = false;
};

// Trace CSV row shared by sim/eval tooling and tests.
struct TraceRow {
  double t, vd, vq, ild, ilq, ild_ref, ilq_ref, p, q, ud, uq, kp, ki, reward;
};

// Assembles a row from the environment's post-step state; voltage and
// current are the bus measurement in the synchronization frame.
TraceRow trace_row(const Environment& env, const StepResult& r);

class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);  // throws RuntimeFault on open failure
  void write(const TraceRow& row);

 private:
  std::ofstream out_;
};

}  // namespace gridtune
