#include "mergesim/fuel.hpp"

#include <algorithm>

namespace mergesim {

namespace {
constexpr double kGravity = 9.81;
}

void FuelModel::validate() const {
  if (idle_rate <= 0.0 || efficiency <= 0.0 || mass <= 0.0 ||
      rolling_coeff <= 0.0 || drag_area <= 0.0 || air_density <= 0.0 ||
      energy_density <= 0.0) {
    throw std::domain_error("FuelModel: parameters must be positive");
  }
}

double fuel_rate(double v, double a, const FuelModel& fm) {
  const double resistive =
      fm.rolling_coeff * fm.mass * kGravity + 0.5 * fm.air_density * fm.drag_area * v * v;
  const double power = fm.mass * a * v + resistive * v;
  return fm.idle_rate + std::max(power, 0.0) / (fm.efficiency * fm.energy_density);
}

}  // namespace mergesim
