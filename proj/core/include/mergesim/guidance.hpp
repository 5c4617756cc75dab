#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mergesim/idm.hpp"
#include "mergesim/road_model.hpp"

namespace mergesim {

using VehicleId = std::uint64_t;

enum class LaneKind { Mainline, Ramp };

/// Kinematic snapshot of one vehicle. `position` is the front-bumper
/// arc length on the vehicle's own roadway (mainline x or ramp arc
/// length); gaps are measured bumper to bumper.
struct VehicleState {
  VehicleId id = 0;
  LaneKind lane = LaneKind::Mainline;
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double length = 5.0;
  bool is_cav = false;
  bool lane_change_ready = false;

  double rear() const { return position - length; }
};

/// Snapshot partitioned by roadway segment, each list ordered leading
/// first (descending position).
struct VehicleGroups {
  std::vector<VehicleState> r1;
  std::vector<VehicleState> r2;
  std::vector<VehicleState> r3;
  std::vector<VehicleState> mainline;
};

/// IDM-based gap-acceptance settings. The ego side always applies; the
/// projected-follower side can be relaxed to reproduce an ego-only
/// acceptance reading.
struct MergeCriteria {
  IdmParams ego;
  IdmParams follower;
  bool check_follower = true;
};

struct MergeDecision {
  bool eligible = false;
  std::optional<VehicleId> leader_id;
  std::optional<VehicleId> follower_id;
  double leader_gap = 0.0;
  double leader_required = 0.0;
  double follower_gap = 0.0;
  double follower_required = 0.0;
  bool overlap = false;  // a mainline vehicle straddles the virtual position
};

struct GuidanceCommand {
  VehicleId target_id = 0;
  double recommended_accel = 0.0;
  double recommended_speed = 0.0;
  std::optional<VehicleId> leader_id;
  double issued_at = 0.0;
  bool overlap = false;
};

VehicleGroups classify_vehicles(std::span<const VehicleState> snapshot,
                                const RampGeometry& geom);

/// Gap acceptance at the ego's virtual mainline position: the gap to
/// the projected leader must cover the ego's IDM desired gap and (when
/// enabled) the gap from the projected follower must cover the
/// follower's. Missing neighbours make the matching condition vacuous.
MergeDecision merge_eligible(const VehicleState& ego,
                             std::span<const VehicleState> mainline,
                             const MergeCriteria& crit,
                             const RampGeometry& geom);

/// Target selection: the leading ineligible vehicle in R3 if any,
/// otherwise the leading vehicle in R2. R1 vehicles are never guided.
std::optional<VehicleId> select_target(
    const VehicleGroups& groups,
    const std::function<bool(const VehicleState&)>& merge_ok);

/// IDM speed guidance for the on-ramp target via its virtual vehicle:
/// car-following against the nearest mainline leader ahead of the
/// virtual position, free-road IDM when there is none. If a mainline
/// vehicle overlaps the virtual position the command is full braking
/// with the overlap diagnostic set.
GuidanceCommand compute_guidance(const VehicleState& target,
                                 std::span<const VehicleState> mainline,
                                 const RampGeometry& geom, const IdmParams& p,
                                 double now, double guidance_interval = 1.0);

/// One controller pass over a snapshot: classify, gate R3 vehicles,
/// pick the target, and produce its command (or none if no target).
std::optional<GuidanceCommand> plan_guidance(
    std::span<const VehicleState> snapshot, const RampGeometry& geom,
    const IdmParams& p, const MergeCriteria& crit, double now,
    double guidance_interval = 1.0);

}  // namespace mergesim
