#include "gridtune/metrics.hpp"

#include <cmath>

namespace gridtune {

TransientMetrics compute_metrics(std::span<const double> t, std::span<const double> p,
                                 double pref) {
  if (t.empty() || t.size() != p.size())
    throw UsageError("compute_metrics: empty or mismatched trace");
  const double t0 = t.front();
  const double band = 0.02 * std::abs(pref);

  TransientMetrics m;
  double pmax = p.front();
  std::ptrdiff_t last_out = -1;  // last sample outside the band
  for (std::size_t i = 0; i < p.size(); ++i) {
    pmax = std::max(pmax, p[i]);
    if (std::abs(p[i] - pref) >= band) last_out = static_cast<std::ptrdiff_t>(i);
    const double dt = i == 0 ? 0.0 : t[i] - t[i - 1];
    m.itae += (t[i] - t0) * std::abs(p[i] - pref) * dt;
  }
  m.overshoot_pct = (pmax - pref) / pref * 100.0;
  if (last_out + 1 < static_cast<std::ptrdiff_t>(p.size())) {
    m.settled = true;
    m.settling_time_s = last_out < 0 ? 0.0 : t[last_out + 1] - t0;
  } else {
    m.settled = false;
    m.settling_time_s = t.back() - t0;
  }
  return m;
}

}  // namespace gridtune
