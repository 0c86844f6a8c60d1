#include "gridtune/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace gridtune {

namespace {

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace

std::string variant_name(Variant v) {
  return v == Variant::fixed_gain ? "fixed_gain" : "adaptive_gain";
}

Variant parse_variant(const std::string& name) {
  if (name == "fixed_gain" || name == "fixed") return Variant::fixed_gain;
  if (name == "adaptive_gain" || name == "adaptive") return Variant::adaptive_gain;
  throw ConfigError("unknown variant '" + name + "' (expected fixed_gain or adaptive_gain)");
}

void EnvConfig::validate(const PlantParams& plant) const {
  plant.validate();
  if (!(episode_length > 0.0)) throw ConfigError("env.episode_length must be positive");
  if (episode_length > 5.0) throw ConfigError("env.episode_length must be <= 5.0 s");
  const double plant_steps = episode_length / plant.dt_sim;
  if (plant_steps > 100000.0 + 1e-9)
    throw ConfigError("env.episode_length exceeds 100000 plant steps per episode");
  if (decimation < 1) throw ConfigError("env.decimation must be >= 1");
  if (!(obs_bound > 0.0)) throw ConfigError("env.obs_bound must be positive");
  if (!(action_bound > 0.0)) throw ConfigError("env.action_bound must be positive");
  if (!(kp_max > 0.0) || !(ki_max > 0.0))
    throw ConfigError("env.kp_max and env.ki_max must be positive");
  if (lpf_alpha <= 0.0 || lpf_alpha > 1.0) throw ConfigError("env.lpf_alpha must be in (0, 1]");
}

long EnvConfig::episode_steps(const PlantParams& plant) const {
  return std::lround(episode_length / (plant.dt_sim * decimation));
}

EnvConfig default_env_config(Variant v) {
  EnvConfig c;
  c.variant = v;
  c.decimation = v == Variant::fixed_gain ? 1 : 20;
  return c;
}

bool check_limits(const FixedObs& obs, double bound) {
  for (int i = 0; i < 8; ++i) {
    if (i == 1 || i == 3) continue;  // error integrals are unbounded
    if (std::abs(obs[i]) > bound) return true;
  }
  return false;
}

bool check_limits(const AdaptiveObs& obs, double bound) {
  for (double x : obs)
    if (std::abs(x) > bound) return true;
  return false;
}

double reward_fixed(double err_d, double err_q, Vec2 action, Vec2& lpf_state, double p,
                    const RewardWeightsFixed& w, double lpf_alpha) {
  double r = w.q1 * err_d * err_d + w.q2 * err_q * err_q;
  r += w.q3 * action.d * action.d + w.q4 * action.q * action.q;
  r += w.q5 * (std::abs(action.d - lpf_state.d) + std::abs(action.q - lpf_state.q));
  if (p < 0.0) r += w.q6 * std::abs(p);
  lpf_state.d += lpf_alpha * (action.d - lpf_state.d);
  lpf_state.q += lpf_alpha * (action.q - lpf_state.q);
  return r;
}

double reward_adaptive(double p_err, double q_err, Vec2 action_norm,
                       const RewardWeightsAdaptive& w) {
  return -(w.q1 * p_err * p_err + w.q2 * q_err * q_err +
           w.q3 * action_norm.d * action_norm.d + w.q4 * action_norm.q * action_norm.q);
}

Environment::Environment(const PlantParams& plant, const EnvConfig& config)
    : plant_(plant), cfg_(config) {
  cfg_.validate(plant_);
  max_steps_ = cfg_.episode_steps(plant_);
  if (max_steps_ < 1) throw ConfigError("env: episode shorter than one agent step");
}

std::array<double, 8> Environment::reset(std::uint64_t seed) {
  st_ = reset_plant(plant_, seed);
  lpf_ = {0.0, 0.0};
  step_count_ = 0;
  alive_ = true;
  std::array<double, 8> obs{};
  if (cfg_.variant == Variant::fixed_gain)
    fill_fixed_obs(obs);
  else
    fill_adaptive_obs(obs);
  return obs;
}

void Environment::fill_fixed_obs(std::array<double, 8>& obs) const {
  const BusMeasurement m = measure_bus(st_, plant_);
  const double f = soft_start(plant_, st_.t);
  const Vec2 iref =
      current_reference(m, st_.breaker_closed, cfg_.pref * f, cfg_.qref * f);
  obs = {iref.d - m.i.d, st_.gfl_int_c.d, iref.q - m.i.q, st_.gfl_int_c.q,
         m.v.d,          m.v.q,           m.i.d,          m.i.q};
}

void Environment::fill_adaptive_obs(std::array<double, 8>& obs) const {
  const BusMeasurement m = measure_bus(st_, plant_);
  const double f = soft_start(plant_, st_.t);
  const double pref = cfg_.pref * f * (st_.breaker_closed ? 1.0 : 0.0);
  const double qref = cfg_.qref * f * (st_.breaker_closed ? 1.0 : 0.0);
  obs = {m.p, m.q, pref - m.p, qref - m.q, 0.0, 0.0, 0.0, 0.0};
}

StepResult Environment::step(Vec2 action) {
  if (!alive_) throw UsageError("env.step called on a finished episode");
  return cfg_.variant == Variant::fixed_gain ? step_fixed(action) : step_adaptive(action);
}

StepResult Environment::step_fixed(Vec2 action) {
  StepResult r;
  r.info.action_raw = action;
  const Vec2 a{clamp(action.d, -cfg_.action_bound, cfg_.action_bound),
               clamp(action.q, -cfg_.action_bound, cfg_.action_bound)};
  for (int k = 0; k < cfg_.decimation; ++k) {
    // Accumulate the observation integrals from the pre-step error, in the
    // same order the classical controller would.
    const BusMeasurement pre = measure_bus(st_, plant_);
    const double f = soft_start(plant_, st_.t);
    const Vec2 iref =
        current_reference(pre, st_.breaker_closed, cfg_.pref * f, cfg_.qref * f);
    const Vec2 err = iref - pre.i;
    step_plant(st_, plant_, a);
    st_.gfl_int_c += err * plant_.dt_sim;
  }
  fill_fixed_obs(r.obs);
  r.info.u = a;
  const BusMeasurement after = measure_bus(st_, plant_);
  r.reward = reward_fixed(r.obs[0], r.obs[2], a, lpf_, after.p, cfg_.fixed_weights,
                          cfg_.lpf_alpha);
  finish_step(r);
  return r;
}

StepResult Environment::step_adaptive(Vec2 action) {
  StepResult r;
  r.info.action_raw = action;
  const PiGains g{clamp(action.d, 0.0, cfg_.kp_max), clamp(action.q, 0.0, cfg_.ki_max)};
  Vec2 u;
  for (int k = 0; k < cfg_.decimation; ++k) {
    const BusMeasurement pre = measure_bus(st_, plant_);
    const double f = soft_start(plant_, st_.t);
    const Vec2 iref =
        current_reference(pre, st_.breaker_closed, cfg_.pref * f, cfg_.qref * f);
    u = classical_current_controller(g, pre, iref, st_.gfl_int_c, plant_.gfl_lf,
                                     plant_.dt_sim);
    step_plant(st_, plant_, u);
  }
  fill_adaptive_obs(r.obs);
  r.info.u = u;
  r.info.kp = g.kp;
  r.info.ki = g.ki;
  const Vec2 a_norm{g.kp / cfg_.kp_max, g.ki / cfg_.ki_max};
  r.reward = reward_adaptive(r.obs[2], r.obs[3], a_norm, cfg_.adaptive_weights);
  finish_step(r);
  return r;
}

void Environment::finish_step(StepResult& r) {
  const BusMeasurement m = measure_bus(st_, plant_);
  const double f = soft_start(plant_, st_.t);
  r.info.t = st_.t;
  r.info.p = m.p;
  r.info.q = m.q;
  r.info.iref = current_reference(m, st_.breaker_closed, cfg_.pref * f, cfg_.qref * f);

  bool violated;
  if (cfg_.variant == Variant::fixed_gain) {
    FixedObs fo;
    std::copy_n(r.obs.begin(), 8, fo.begin());
    violated = check_limits(fo, cfg_.obs_bound);
  } else {
    AdaptiveObs ao;
    std::copy_n(r.obs.begin(), 4, ao.begin());
    violated = check_limits(ao, cfg_.obs_bound);
  }
  ++step_count_;
  if (violated) {
    r.terminated = true;
    r.reward += cfg_.termination_penalty;
  }
  if (step_count_ >= max_steps_) r.truncated = true;
  if (r.terminated || r.truncated) alive_ = false;
}

TraceRow trace_row(const Environment& env, const StepResult& r) {
  const BusMeasurement m = measure_bus(env.plant_state(), env.plant_params());
  TraceRow row;
  row.t = r.info.t;
  row.vd = m.v.d;
  row.vq = m.v.q;
  row.ild = m.i.d;
  row.ilq = m.i.q;
  row.ild_ref = r.info.iref.d;
  row.ilq_ref = r.info.iref.q;
  row.p = r.info.p;
  row.q = r.info.q;
  row.ud = r.info.u.d;
  row.uq = r.info.u.q;
  row.kp = r.info.kp;
  row.ki = r.info.ki;
  row.reward = r.reward;
  return row;
}

TraceWriter::TraceWriter(const std::string& path) : out_(path) {
  if (!out_) throw RuntimeFault("cannot open trace file '" + path + "'");
  out_ << "t,vd,vq,ild,ilq,ild_ref,ilq_ref,p,q,ud,uq,kp,ki,reward\n";
}

void TraceWriter::write(const TraceRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                r.t, r.vd, r.vq, r.ild, r.ilq, r.ild_ref, r.ilq_ref, r.p, r.q, r.ud, r.uq,
                r.kp, r.ki, r.reward);
  out_ << buf;
}

}  // namespace gridtune
