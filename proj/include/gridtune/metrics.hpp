#pragma once

#include <span>

#include "gridtune/errors.hpp"

namespace gridtune {

struct TransientMetrics {
  double overshoot_pct = 0.0;   // (max P - Pref) / Pref, percent
  double settling_time_s = 0.0; // first time after which |P - Pref| < 2% Pref for good
  double itae = 0.0;            // sum of t * |P - Pref| * dt, t relative to trace start
  bool settled = false;
};

// The trace is expected to cover the post-connection window; time stamps are
// absolute, metrics are reported relative to the first sample.
TransientMetrics compute_metrics(std::span<const double> t, std::span<const double> p,
                                 double pref);

}  // namespace gridtune
