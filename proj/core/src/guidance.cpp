#include "mergesim/guidance.hpp"

#include <algorithm>
#include <cmath>

namespace mergesim {

namespace {

void sort_leading_first(std::vector<VehicleState>& v) {
  std::sort(v.begin(), v.end(), [](const VehicleState& a, const VehicleState& b) {
    if (a.position != b.position) return a.position > b.position;
    return a.id < b.id;
  });
}

// Nearest mainline vehicle whose rear bumper lies strictly ahead of x,
// and the nearest whose front bumper lies at or behind x. Assumes no
// particular input order.
struct Neighbours {
  const VehicleState* leader = nullptr;
  const VehicleState* follower = nullptr;
  const VehicleState* overlapping = nullptr;
};

Neighbours neighbours_at(double x, std::span<const VehicleState> mainline) {
  Neighbours out;
  for (const VehicleState& m : mainline) {
    if (m.rear() > x) {
      if (!out.leader || m.rear() < out.leader->rear()) out.leader = &m;
    } else if (m.position <= x) {
      if (!out.follower || m.position > out.follower->position) out.follower = &m;
    } else {
      out.overlapping = &m;  // rear <= x < front
    }
  }
  return out;
}

}  // namespace

VehicleGroups classify_vehicles(std::span<const VehicleState> snapshot,
                                const RampGeometry& geom) {
  VehicleGroups groups;
  for (const VehicleState& v : snapshot) {
    if (v.lane == LaneKind::Mainline) {
      groups.mainline.push_back(v);
      continue;
    }
    switch (segment_of(v.position, geom)) {
      case RampSegment::R1: groups.r1.push_back(v); break;
      case RampSegment::R2: groups.r2.push_back(v); break;
      case RampSegment::R3: groups.r3.push_back(v); break;
    }
  }
  sort_leading_first(groups.r1);
  sort_leading_first(groups.r2);
  sort_leading_first(groups.r3);
  sort_leading_first(groups.mainline);
  return groups;
}

MergeDecision merge_eligible(const VehicleState& ego,
                             std::span<const VehicleState> mainline,
                             const MergeCriteria& crit,
                             const RampGeometry& geom) {
  if (ego.lane != LaneKind::Ramp ||
      segment_of(ego.position, geom) != RampSegment::R3) {
    throw std::domain_error("merge_eligible: ego must be in R3");
  }
  const double vp = virtual_position(ego.position, geom);
  const Neighbours nb = neighbours_at(vp, mainline);

  MergeDecision d;
  if (nb.overlapping) {
    d.overlap = true;
    d.leader_id = nb.overlapping->id;
    return d;  // ineligible
  }

  bool lead_ok = true;
  if (nb.leader) {
    d.leader_id = nb.leader->id;
    d.leader_gap = nb.leader->rear() - vp;
    d.leader_required = desired_gap(ego.speed, ego.speed - nb.leader->speed, crit.ego);
    lead_ok = d.leader_gap >= d.leader_required;
  }
  bool follow_ok = true;
  if (nb.follower && crit.check_follower) {
    d.follower_id = nb.follower->id;
    d.follower_gap = (vp - ego.length) - nb.follower->position;
    d.follower_required = desired_gap(nb.follower->speed,
                                      nb.follower->speed - ego.speed, crit.follower);
    follow_ok = d.follower_gap >= d.follower_required;
  }
  d.eligible = lead_ok && follow_ok;
  return d;
}

std::optional<VehicleId> select_target(
    const VehicleGroups& groups,
    const std::function<bool(const VehicleState&)>& merge_ok) {
  for (const VehicleState& v : groups.r3) {
    if (!merge_ok(v)) return v.id;  // leading ineligible vehicle
  }
  if (!groups.r2.empty()) return groups.r2.front().id;
  return std::nullopt;
}

GuidanceCommand compute_guidance(const VehicleState& target,
                                 std::span<const VehicleState> mainline,
                                 const RampGeometry& geom, const IdmParams& p,
                                 double now, double guidance_interval) {
  if (target.lane != LaneKind::Ramp) {
    throw std::domain_error("compute_guidance: target must be on ramp");
  }
  const double vp = virtual_position(target.position, geom);
  const Neighbours nb = neighbours_at(vp, mainline);

  GuidanceCommand cmd;
  cmd.target_id = target.id;
  cmd.issued_at = now;
  if (nb.overlapping) {
    cmd.overlap = true;
    cmd.leader_id = nb.overlapping->id;
    cmd.recommended_accel = -p.b_hard;
  } else if (nb.leader) {
    cmd.leader_id = nb.leader->id;
    const double gap = nb.leader->rear() - vp;
    cmd.recommended_accel =
        acceleration(target.speed, gap, target.speed - nb.leader->speed, p);
  } else {
    cmd.recommended_accel =
        std::clamp(free_acceleration(target.speed, p), -p.b_hard, p.a_max);
  }
  cmd.recommended_speed = std::clamp(
      target.speed + cmd.recommended_accel * guidance_interval, 0.0, p.v_max);
  return cmd;
}

std::optional<GuidanceCommand> plan_guidance(
    std::span<const VehicleState> snapshot, const RampGeometry& geom,
    const IdmParams& p, const MergeCriteria& crit, double now,
    double guidance_interval) {
  const VehicleGroups groups = classify_vehicles(snapshot, geom);
  const auto merge_ok = [&](const VehicleState& v) {
    return merge_eligible(v, groups.mainline, crit, geom).eligible;
  };
  const std::optional<VehicleId> target_id = select_target(groups, merge_ok);
  if (!target_id) return std::nullopt;

  const auto find_in = [&](const std::vector<VehicleState>& list)
      -> const VehicleState* {
    for (const VehicleState& v : list) {
      if (v.id == *target_id) return &v;
    }
    return nullptr;
  };
  const VehicleState* target = find_in(groups.r3);
  if (!target) target = find_in(groups.r2);
  if (!target) return std::nullopt;
  return compute_guidance(*target, groups.mainline, geom, p, now,
                          guidance_interval);
}

}  // namespace mergesim
