#include "gridtune/plant.hpp"

#include <cmath>

namespace gridtune {

namespace {

constexpr double kPi = 3.14159265358979323846;

// The six electrical states integrated with RK4. Controller outputs are held
// constant across the step (zero-order hold), so the subsystem is linear and
// the stage evaluations only differ in the state argument.
struct ElecState {
  Vec2 gfm_il;
  Vec2 gfm_vc;
  Vec2 gfl_il;

  ElecState operator+(const ElecState& o) const {
    return {gfm_il + o.gfm_il, gfm_vc + o.gfm_vc, gfl_il + o.gfl_il};
  }
  ElecState operator*(double s) const { return {gfm_il * s, gfm_vc * s, gfl_il * s}; }
};

// Per-unit branch dynamics in a frame rotating at nominal speed:
//   L/w0 * di/dt = e - v - R*i + w0-rotation coupling
// which rearranges to di_d/dt = (w0/L)*(e_d - v_d - R*i_d) + w0*i_q.
Vec2 branch_deriv(const Vec2& i, const Vec2& e, const Vec2& v, double r, double l, double w0) {
  return {w0 / l * (e.d - v.d - r * i.d) + w0 * i.q,
          w0 / l * (e.q - v.q - r * i.q) - w0 * i.d};
}

ElecState elec_deriv(const ElecState& x, const PlantParams& p, const Vec2& e_gfm,
                     const Vec2& e_gfl, bool gfl_on, double r_load_now) {
  const double w0 = p.omega0();
  ElecState dx;
  dx.gfm_il = branch_deriv(x.gfm_il, e_gfm, x.gfm_vc, p.gfm_rf, p.gfm_lf, w0);
  if (gfl_on) {
    dx.gfl_il = branch_deriv(x.gfl_il, e_gfl, x.gfm_vc, p.gfl_rf, p.gfl_lf, w0);
  } else {
    dx.gfl_il = {0.0, 0.0};
  }
  const Vec2 i_load = x.gfm_vc * (1.0 / r_load_now);
  const Vec2 i_net = x.gfm_il + (gfl_on ? x.gfl_il : Vec2{}) - i_load;
  dx.gfm_vc = {w0 / p.gfm_cf * i_net.d + w0 * x.gfm_vc.q,
               w0 / p.gfm_cf * i_net.q - w0 * x.gfm_vc.d};
  return dx;
}

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

bool finite(const Vec2& v) { return std::isfinite(v.d) && std::isfinite(v.q); }

}  // namespace

void PlantParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("plant.") + name + " must be positive");
  };
  positive(f0, "f0");
  positive(dt_sim, "dt_sim");
  positive(v_nom, "v_nom");
  positive(gfl_lf, "gfl_lf");
  positive(gfm_lf, "gfm_lf");
  positive(gfm_cf, "gfm_cf");
  positive(r_load, "r_load");
  positive(droop_wf, "droop_wf");
  positive(cmd_limit, "cmd_limit");
  if (gfl_rf < 0.0 || gfm_rf < 0.0) throw ConfigError("plant filter resistance must be >= 0");
  if (droop_mp < 0.0 || droop_mq < 0.0) throw ConfigError("plant droop slopes must be >= 0");
  if (gfm_kpv < 0.0 || gfm_kiv < 0.0 || gfm_kpc < 0.0 || gfm_kic < 0.0)
    throw ConfigError("plant grid-forming gains must be >= 0");
  if (pll_kp < 0.0 || pll_ki < 0.0) throw ConfigError("plant PLL gains must be >= 0");
  if (connect_time < 0.0) throw ConfigError("plant.connect_time must be >= 0");
  if (soft_start_time < 0.0) throw ConfigError("plant.soft_start_time must be >= 0");
  if (dist_amp < 0.0) throw ConfigError("plant.dist_amp must be >= 0");
  if (dist_amp > 0.0) positive(dist_order, "dist_order");
  positive(load_step_factor, "load_step_factor");
  positive(load_step_tau, "load_step_tau");
  if (dt_sim > 2e-4)
    throw ConfigError("plant.dt_sim too large for the stiff filter dynamics (max 2e-4)");
}

double soft_start(const PlantParams& params, double t) {
  if (t < params.connect_time) return 0.0;
  if (params.soft_start_time <= 0.0) return 1.0;
  return std::min(1.0, (t - params.connect_time) / params.soft_start_time);
}

double load_resistance(const PlantParams& params, double t) {
  if (t < params.load_step_time) return params.r_load;
  const double blend = 1.0 - std::exp(-(t - params.load_step_time) / params.load_step_tau);
  return params.r_load * (1.0 + (params.load_step_factor - 1.0) * blend);
}

PlantState reset_plant(const PlantParams& params, std::uint64_t /*seed*/) {
  params.validate();
  return PlantState{};
}

BusMeasurement measure_bus(const PlantState& state, const PlantParams& params) {
  (void)params;
  BusMeasurement m;
  m.v = rotate(state.gfm_vc, -state.pll_theta);
  m.i = rotate(state.gfl_il, -state.pll_theta);
  m.p = active_power(m.v, m.i);
  m.q = reactive_power(m.v, m.i);
  return m;
}

Vec2 current_reference(const BusMeasurement& meas, bool breaker_closed, double pref,
                       double qref) {
  if (!breaker_closed) return {0.0, 0.0};
  const double vd = std::max(meas.v.d, 0.1);
  return {pref / vd, -qref / vd};
}

Vec2 classical_current_controller(const PiGains& gains, const BusMeasurement& meas, Vec2 iref,
                                  Vec2& int_state, double omega_l, double dt) {
  const Vec2 err = iref - meas.i;
  Vec2 u;
  u.d = gains.kp * err.d + gains.ki * int_state.d + meas.v.d - omega_l * meas.i.q;
  u.q = gains.kp * err.q + gains.ki * int_state.q + meas.v.q + omega_l * meas.i.d;
  int_state += err * dt;
  return u;
}

BusMeasurement step_plant(PlantState& state, const PlantParams& params, Vec2 udq) {
  const double dt = params.dt_sim;
  const double w0 = params.omega0();

  if (!state.breaker_closed && state.t >= params.connect_time - 0.25 * dt) {
    state.breaker_closed = true;
  }

  // Grid-forming control, sampled at the step start and held. The measured
  // output current is what the rest of the network draws from the capacitor
  // node, so the grid-following injection offloads the grid-forming unit.
  const double r_load_now = load_resistance(params, state.t);
  const Vec2 i_load = state.gfm_vc * (1.0 / r_load_now);
  const Vec2 i_out = i_load - (state.breaker_closed ? state.gfl_il : Vec2{});
  const double p_out = active_power(state.gfm_vc, i_out);
  const double q_out = reactive_power(state.gfm_vc, i_out);
  const double omega_ref = 1.0 - params.droop_mp * p_out;
  const double buildup = params.vref_ramp_time > 0.0
                             ? std::min(1.0, state.t / params.vref_ramp_time)
                             : 1.0;
  const double v_ref = (params.v_nom - params.droop_mq * q_out) * buildup;

  const Vec2 v_own = rotate(state.gfm_vc, -state.gfm_delta);
  const Vec2 i_out_own = rotate(i_out, -state.gfm_delta);
  const Vec2 il_own = rotate(state.gfm_il, -state.gfm_delta);

  const Vec2 err_v = Vec2{v_ref, 0.0} - v_own;
  Vec2 i_cmd;
  i_cmd.d = params.gfm_kpv * err_v.d + params.gfm_kiv * state.gfm_int_v.d + i_out_own.d -
            state.gfm_omega * params.gfm_cf * v_own.q;
  i_cmd.q = params.gfm_kpv * err_v.q + params.gfm_kiv * state.gfm_int_v.q + i_out_own.q +
            state.gfm_omega * params.gfm_cf * v_own.d;
  i_cmd = clamp_norm(i_cmd, params.cmd_limit);

  const Vec2 err_c = i_cmd - il_own;
  Vec2 e_cmd;
  e_cmd.d = params.gfm_kpc * err_c.d + params.gfm_kic * state.gfm_int_c.d + v_own.d -
            state.gfm_omega * params.gfm_lf * il_own.q;
  e_cmd.q = params.gfm_kpc * err_c.q + params.gfm_kic * state.gfm_int_c.q + v_own.q +
            state.gfm_omega * params.gfm_lf * il_own.d;
  e_cmd = clamp_norm(e_cmd, params.cmd_limit);
  Vec2 e_gfm = rotate(e_cmd, state.gfm_delta);
  if (params.dist_amp > 0.0) {
    // Modulator distortion rides on top of the control command; held over
    // the step like the commands themselves.
    const double ph = params.dist_order * w0 * state.t;
    e_gfm += Vec2{std::cos(ph), -std::sin(ph)} * params.dist_amp;
  }

  // Grid-following command arrives in the PLL frame; clamp and hold.
  const Vec2 e_gfl = rotate(clamp_norm(udq, params.cmd_limit), state.pll_theta);

  // PLL regulates the q component of the bus voltage in its own frame.
  const Vec2 v_pll = rotate(state.gfm_vc, -state.pll_theta);
  const double omega_pll = 1.0 + params.pll_kp * v_pll.q + state.pll_int;

  // RK4 over the electrical states with the held commands.
  const ElecState x0{state.gfm_il, state.gfm_vc, state.gfl_il};
  auto f = [&](const ElecState& x) {
    return elec_deriv(x, params, e_gfm, e_gfl, state.breaker_closed, r_load_now);
  };
  const ElecState k1 = f(x0);
  const ElecState k2 = f(x0 + k1 * (0.5 * dt));
  const ElecState k3 = f(x0 + k2 * (0.5 * dt));
  const ElecState k4 = f(x0 + k3 * dt);
  const ElecState x1 = x0 + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);

  state.gfm_il = x1.gfm_il;
  state.gfm_vc = x1.gfm_vc;
  state.gfl_il = state.breaker_closed ? x1.gfl_il : Vec2{};

  // Forward Euler on the slow controller states, pre-step errors.
  state.gfm_int_v += err_v * dt;
  state.gfm_int_c += err_c * dt;
  state.gfm_omega += params.droop_wf * (omega_ref - state.gfm_omega) * dt;
  state.gfm_delta = wrap_angle(state.gfm_delta + (state.gfm_omega - 1.0) * w0 * dt);
  state.pll_theta = wrap_angle(state.pll_theta + (omega_pll - 1.0) * w0 * dt);
  state.pll_int += params.pll_ki * v_pll.q * dt;
  state.t += dt;

  if (!finite(state.gfm_il) || !finite(state.gfm_vc) || !finite(state.gfl_il) ||
      !std::isfinite(state.gfm_delta) || !std::isfinite(state.gfm_omega) ||
      !std::isfinite(state.pll_theta) || !std::isfinite(state.pll_int)) {
    throw SimulationDiverged("plant state became non-finite at t=" + std::to_string(state.t),
                             state);
  }

  return measure_bus(state, params);
}

}  // namespace gridtune
