#pragma once

#include <stdexcept>

namespace mergesim {

/// Power-demand fuel model: tractive power from inertia, rolling
/// resistance and aerodynamic drag, converted to fuel through a flat
/// drivetrain efficiency, floored at the idle rate. Absolute litres are
/// model-specific; only seed-matched ratios are compared across runs.
struct FuelModel {
  // Idle burn covers engine drag and accessory load; it is what makes
  // crawling traffic expensive per distance (roughly 8 L/100km at
  // walking pace vs 5 cruising), matching observed urban/highway ratios.
  double idle_rate = 0.0003;        // L/s
  double efficiency = 0.30;         // tank-to-wheel
  double mass = 1500.0;             // kg
  double rolling_coeff = 0.012;
  double drag_area = 0.7;           // C_d * A, m^2
  double air_density = 1.2;         // kg/m^3
  double energy_density = 34.2e6;   // J/L

  void validate() const;
};

/// Instantaneous consumption in L/s; never below idle, braking power is
/// not recuperated.
double fuel_rate(double v, double a, const FuelModel& fm);

}  // namespace mergesim
