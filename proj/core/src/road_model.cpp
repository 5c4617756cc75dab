#include "mergesim/road_model.hpp"

namespace mergesim {

void RampGeometry::validate() const {
  if (len_r1 <= 0.0 || len_r2 <= 0.0 || len_r3 <= 0.0) {
    throw std::domain_error("RampGeometry: segment lengths must be positive");
  }
  if (mainline_length <= 0.0 || merge_point_x <= 0.0) {
    throw std::domain_error("RampGeometry: mainline dimensions must be positive");
  }
  if (merge_point_x > mainline_length) {
    throw std::domain_error("RampGeometry: merge point beyond mainline end");
  }
  if (!(speed_limit_r1 < speed_limit_main)) {
    throw std::domain_error("RampGeometry: R1 speed limit must be below mainline limit");
  }
  if (!(speed_limit_ramp >= speed_limit_r1) ||
      !(speed_limit_ramp <= speed_limit_main)) {
    throw std::domain_error(
        "RampGeometry: ramp speed limit must lie between R1 and mainline limits");
  }
}

RampSegment segment_of(double ramp_pos, const RampGeometry& geom) {
  if (ramp_pos < 0.0 || ramp_pos > geom.ramp_length()) {
    throw std::domain_error("segment_of: ramp position out of range");
  }
  if (ramp_pos < geom.len_r1) return RampSegment::R1;
  if (ramp_pos < geom.len_r1 + geom.len_r2) return RampSegment::R2;
  return RampSegment::R3;
}

double virtual_position(double ramp_pos, const RampGeometry& geom) {
  if (ramp_pos < 0.0 || ramp_pos > geom.ramp_length()) {
    throw std::domain_error("virtual_position: ramp position out of range");
  }
  return geom.merge_point_x - (geom.ramp_length() - ramp_pos);
}

}  // namespace mergesim
