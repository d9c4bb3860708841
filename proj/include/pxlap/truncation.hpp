#pragma once

#include <algorithm>
#include <cmath>

namespace pxlap {

/// T_k(s) = max(-k, min(s, k)).
inline double truncate(double s, double k) { return std::clamp(s, -k, k); }

/// G_k(s) = (|s| - k)^+ sign(s), so that s = T_k(s) + G_k(s).
inline double level_part(double s, double k) { return s - truncate(s, k); }

/// T_{k,gamma}(s) = int_0^s T_k(tau)^gamma dtau for s >= 0, in closed form.
inline double truncation_primitive(double s, double k, double gamma) {
  if (s <= k) return std::pow(s, gamma + 1.0) / (gamma + 1.0);
  return std::pow(k, gamma + 1.0) / (gamma + 1.0) + std::pow(k, gamma) * (s - k);
}

/// Piecewise-linear cutoff V_gamma: 1 on (-inf, gamma], linear down to 0 at 2 gamma, 0 beyond.
inline double cutoff_V(double s, double gamma) {
  if (s <= gamma) return 1.0;
  if (s >= 2.0 * gamma) return 0.0;
  return (2.0 * gamma - s) / gamma;
}

/// h_n(w) = T_n(w^{q-1}) for w >= 0.
inline double power_truncation(double w, double q, double n) {
  return std::min(n, std::pow(std::max(w, 0.0), q - 1.0));
}

}  // namespace pxlap
