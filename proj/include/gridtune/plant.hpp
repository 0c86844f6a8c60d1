#pragma once

#include <cstdint>
#include <string>

#include "gridtune/dq.hpp"
#include "gridtune/errors.hpp"

namespace gridtune {

// Averaged two-inverter microgrid in per unit. A grid-forming inverter
// (droop + cascaded voltage/current control, LC filter) builds the bus
// voltage; a grid-following inverter (L filter, PLL-synchronized) injects
// power into the same bus once a breaker closes; a resistive load hangs on
// the bus. All electrical quantities live in a single synchronous frame
// rotating at the nominal grid frequency.
struct PlantParams {
  double f0 = 60.0;       // nominal frequency, Hz
  double dt_sim = 5e-5;   // integration step, s
  double v_nom = 1.0;     // bus voltage setpoint, pu

  // grid-following inverter output filter
  double gfl_lf = 0.15;   // pu inductance
  double gfl_rf = 0.005;  // pu resistance

  // grid-forming inverter LC filter
  double gfm_lf = 0.15;
  double gfm_rf = 0.005;
  double gfm_cf = 0.10;   // pu capacitance

  double r_load = 1.25;   // pu bus load resistance

  // grid-forming droop and inner loops
  double droop_mp = 0.01;   // pu frequency per pu active power
  double droop_mq = 0.05;   // pu voltage per pu reactive power
  // Inner loops stiff enough that the bus rides through the grid-following
  // connection slam within the +-5% band.
  double droop_wf = 31.42;  // power filter bandwidth, rad/s
  double gfm_kpv = 1.5;     // voltage loop proportional gain
  double gfm_kiv = 80.0;    // voltage loop integral gain, 1/s
  double gfm_kpc = 3.0;     // current loop proportional gain
  double gfm_kic = 100.0;   // current loop integral gain, 1/s
  double vref_ramp_time = 0.2;  // black-start voltage buildup ramp, s

  // grid-following synchronization
  double pll_kp = 0.5;
  double pll_ki = 50.0;

  // Residual periodic disturbance on the grid-forming modulator output from
  // converter nonidealities. Order 2 is what phase unbalance looks like in
  // the synchronous frame; dead-time harmonics would sit at order 6. Without
  // some disturbance the bus is implausibly sterile and tight current
  // control has nothing to do between setpoint changes.
  double dist_amp = 0.10;    // pu amplitude on the modulator; 0 disables
  double dist_order = 2.0;   // harmonic order relative to f0

  double connect_time = 0.5;    // breaker closing instant, s
  double soft_start_time = 0.0;   // power-order ramp after the breaker closes, s
  // Partial load shed later in the episode; the bus transient it causes is
  // what separates sluggish current-controller gains from tight ones.
  double load_step_time = 1.4;    // s; set beyond the horizon to disable
  double load_step_factor = 1.3;  // multiplier on r_load after the shed
  double load_step_tau = 0.005;   // shed transition time constant, s
  double cmd_limit = 2.0;         // magnitude clamp on internal voltage commands, pu

  double omega0() const { return 2.0 * 3.14159265358979323846 * f0; }
  void validate() const;  // throws ConfigError
};

struct PlantState {
  double t = 0.0;
  bool breaker_closed = false;

  // electrical states, global synchronous frame
  Vec2 gfm_il;  // grid-forming filter inductor current
  Vec2 gfm_vc;  // bus (filter capacitor) voltage
  Vec2 gfl_il;  // grid-following filter inductor current

  // grid-forming controller states
  double gfm_delta = 0.0;  // internal frame angle relative to global, rad
  double gfm_omega = 1.0;  // internal frequency, pu
  Vec2 gfm_int_v;          // voltage loop integrators, own frame
  Vec2 gfm_int_c;          // current loop integrators, own frame

  // grid-following controller states
  double pll_theta = 0.0;  // PLL angle relative to global frame, rad
  double pll_int = 0.0;    // PLL integrator, pu frequency
  Vec2 gfl_int_c;          // current loop error integrals, PLL frame
};

// What the grid-following controller can see, all in its own PLL frame.
struct BusMeasurement {
  Vec2 v;    // bus voltage
  Vec2 i;    // grid-following injected current
  double p = 0.0;  // injected active power
  double q = 0.0;  // injected reactive power
};

struct PiGains {
  double kp = 1.0;
  double ki = 5.0;
};

// Thrown when an integration step produces a non-finite state.
class SimulationDiverged : public RuntimeFault {
 public:
  SimulationDiverged(const std::string& what, const PlantState& state)
      : RuntimeFault(what), state(state) {}
  PlantState state;
};

// Fresh de-energized plant. The black start is deterministic, so the seed
// only exists to keep the signature uniform with stochastic environments.
PlantState reset_plant(const PlantParams& params, std::uint64_t seed = 0);

BusMeasurement measure_bus(const PlantState& state, const PlantParams& params);

// Advances the plant by one dt_sim with the grid-following inverter voltage
// command held at udq (PLL frame, magnitude clamped to cmd_limit). Returns
// the post-step measurement. Throws SimulationDiverged on non-finite state.
BusMeasurement step_plant(PlantState& state, const PlantParams& params, Vec2 udq);

// Current reference from the power setpoints: i_d = p / max(v_d, 0.1),
// i_q = -q / max(v_d, 0.1); forced to zero while the breaker is open so the
// error integrals do not wind up against a dead bus.
Vec2 current_reference(const BusMeasurement& meas, bool breaker_closed, double pref, double qref);

// Soft-start factor in [0, 1] ramping linearly over soft_start_time once the
// breaker has closed. Callers scale pref/qref by it so the inverter never
// slams full power into the bus in a single filter time constant.
double soft_start(const PlantParams& params, double t);

// Effective load resistance at time t (load shed applied).
double load_resistance(const PlantParams& params, double t);

// One synchronous-frame PI update with cross-coupling feedforward:
//   u_d = kp*err_d + ki*int_d + v_d - w*L*i_q
//   u_q = kp*err_q + ki*int_q + v_q + w*L*i_d
// Returns udq computed from the integrals as passed in, then advances them
// by err*dt (forward Euler).
Vec2 classical_current_controller(const PiGains& gains, const BusMeasurement& meas, Vec2 iref,
                                  Vec2& int_state, double omega_l, double dt);

}  // namespace gridtune
