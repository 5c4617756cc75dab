#pragma once

#include <stdexcept>

namespace mergesim {

/// Merging-area geometry: a single-lane mainline plus a three-segment
/// on-ramp (R1 low-speed curve, R2 acceleration stretch, R3 lane-change
/// zone). Ramp positions are arc length from the ramp origin; the ramp
/// nose (downstream end of R3) coincides with merge_point_x on the
/// mainline.
struct RampGeometry {
  double len_r1 = 60.0;
  double len_r2 = 100.0;
  double len_r3 = 250.0;
  double merge_point_x = 500.0;
  double mainline_length = 800.0;
  double speed_limit_r1 = 10.0;   // 36 km/h ramp curve
  double speed_limit_ramp = 16.7; // 60 km/h posted ramp limit
  double speed_limit_main = 25.0; // 90 km/h merge-area mainline

  double ramp_length() const { return len_r1 + len_r2 + len_r3; }
  void validate() const;
};

enum class RampSegment { R1, R2, R3 };

/// Classify a ramp arc-length position into its segment. Segment
/// intervals are half-open [start, end); the ramp end itself belongs
/// to R3.
RampSegment segment_of(double ramp_pos, const RampGeometry& geom);

/// Map a ramp position onto the mainline by arc-length alignment at the
/// ramp nose: virtual_position(ramp_length) == merge_point_x.
double virtual_position(double ramp_pos, const RampGeometry& geom);

}  // namespace mergesim
