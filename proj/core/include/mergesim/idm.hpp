#pragma once

#include <stdexcept>

namespace mergesim {

/// Intelligent driver model parameters (Treiber et al. 2000).
struct IdmParams {
  double a_max = 1.5;        // maximum acceleration, m/s^2
  double b_comf = 2.0;       // desired (comfortable) deceleration, m/s^2, > 0
  double v_max = 25.0;       // speed limit, m/s
  double s_min = 2.0;        // minimum spacing, m
  double t_headway = 1.5;    // desired time headway, s
  double delta = 4.0;        // free-drive exponent
  double b_hard = 6.0;       // physical brake limit, m/s^2, > 0

  void validate() const;
  IdmParams with_v_max(double v) const {
    IdmParams p = *this;
    p.v_max = v;
    return p;
  }
};

/// Desired gap s*: s_min + T_s*v + v*dv / (2*sqrt(a_max*b_comf)),
/// clamped to >= 0 (strongly negative dv would otherwise produce a
/// negative gap and spurious acceleration once squared).
/// dv is the closing speed, ego minus leader.
double desired_gap(double v, double dv, const IdmParams& p);

/// IDM acceleration a_max * [1 - (v/v_max)^delta - (s*/s)^2], clamped
/// to [-b_hard, a_max]. Requires gap s > 0; a nonpositive gap signals a
/// collision or invalid state upstream and raises a domain error.
double acceleration(double v, double s, double dv, const IdmParams& p);

/// Free-road acceleration, the interaction term dropped.
double free_acceleration(double v, const IdmParams& p);

/// Steady-state gap: the s solving acceleration(v, s, 0) = 0,
///   s = desired_gap(v, 0) / sqrt(1 - (v/v_max)^delta).
/// Diverges as v -> v_max; v >= v_max is a domain error.
double equilibrium_gap(double v, const IdmParams& p);

}  // namespace mergesim
