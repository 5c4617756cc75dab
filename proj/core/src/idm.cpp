#include "mergesim/idm.hpp"

#include <algorithm>
#include <cmath>

namespace mergesim {

void IdmParams::validate() const {
  if (a_max <= 0.0 || b_comf <= 0.0 || v_max <= 0.0 || s_min <= 0.0 ||
      t_headway < 0.0 || delta <= 0.0 || b_hard <= 0.0) {
    throw std::domain_error("IdmParams: parameter out of range");
  }
}

double desired_gap(double v, double dv, const IdmParams& p) {
  const double s = p.s_min + p.t_headway * v +
                   v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf));
  return std::max(0.0, s);
}

double acceleration(double v, double s, double dv, const IdmParams& p) {
  if (s <= 0.0) {
    throw std::domain_error("idm::acceleration: nonpositive gap");
  }
  const double ratio = desired_gap(v, dv, p) / s;
  const double a =
      p.a_max * (1.0 - std::pow(v / p.v_max, p.delta) - ratio * ratio);
  return std::clamp(a, -p.b_hard, p.a_max);
}

double free_acceleration(double v, const IdmParams& p) {
  return p.a_max * (1.0 - std::pow(v / p.v_max, p.delta));
}

double equilibrium_gap(double v, const IdmParams& p) {
  if (v < 0.0 || v >= p.v_max) {
    throw std::domain_error("equilibrium_gap: no finite equilibrium for v >= v_max");
  }
  return desired_gap(v, 0.0, p) / std::sqrt(1.0 - std::pow(v / p.v_max, p.delta));
}

}  // namespace mergesim
