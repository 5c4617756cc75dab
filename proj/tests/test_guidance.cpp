#include <doctest.h>

#include <cmath>
#include <random>

#include "mergesim/guidance.hpp"

using namespace mergesim;

namespace {

RampGeometry geom() {
  RampGeometry g;
  g.len_r1 = 60.0;
  g.len_r2 = 100.0;
  g.len_r3 = 150.0;
  g.merge_point_x = 500.0;
  g.mainline_length = 800.0;
  return g;
}

IdmParams params() {
  IdmParams p;
  p.v_max = 33.33;
  return p;
}

VehicleState ramp_vehicle(VehicleId id, double pos, double speed) {
  VehicleState v;
  v.id = id;
  v.lane = LaneKind::Ramp;
  v.position = pos;
  v.speed = speed;
  v.is_cav = true;
  return v;
}

VehicleState main_vehicle(VehicleId id, double pos, double speed) {
  VehicleState v;
  v.id = id;
  v.lane = LaneKind::Mainline;
  v.position = pos;
  v.speed = speed;
  return v;
}

MergeCriteria criteria() {
  MergeCriteria c;
  c.ego = params();
  c.follower = params();
  return c;
}

}  // namespace

TEST_CASE("classify splits by segment and orders leading-first") {
  const RampGeometry g = geom();
  CHECK(classify_vehicles({}, g).mainline.empty());

  std::vector<VehicleState> snap = {
      ramp_vehicle(1, g.len_r1 + 1.0, 10.0),
      ramp_vehicle(2, g.len_r1 + 40.0, 12.0),
      ramp_vehicle(3, g.len_r1 + 20.0, 11.0),
      ramp_vehicle(4, 10.0, 5.0),
      main_vehicle(5, 100.0, 25.0),
      main_vehicle(6, 300.0, 25.0),
  };
  const VehicleGroups groups = classify_vehicles(snap, g);
  CHECK(groups.r1.size() == 1);
  REQUIRE(groups.r2.size() == 3);
  CHECK(groups.r3.empty());
  REQUIRE(groups.mainline.size() == 2);
  CHECK(groups.r2[0].id == 2);
  CHECK(groups.r2[1].id == 3);
  CHECK(groups.r2[2].id == 1);
  CHECK(groups.mainline[0].id == 6);
}

TEST_CASE("merge eligibility") {
  const RampGeometry g = geom();
  const MergeCriteria crit = criteria();
  const VehicleState ego = ramp_vehicle(1, g.ramp_length() - 10.0, 20.0);
  const double vp = virtual_position(ego.position, g);

  SUBCASE("empty mainline is vacuously eligible") {
    CHECK(merge_eligible(ego, {}, crit, g).eligible);
  }
  SUBCASE("zero follower gap is never accepted") {
    const std::vector<VehicleState> mainline = {
        main_vehicle(2, vp - ego.length, 20.0)};
    CHECK_FALSE(merge_eligible(ego, mainline, crit, g).eligible);
  }
  SUBCASE("symmetric 40 m gaps at matched speed are accepted") {
    const std::vector<VehicleState> mainline = {
        main_vehicle(2, vp + 40.0 + 5.0, 20.0),  // rear bumper 40 m ahead
        main_vehicle(3, vp - ego.length - 40.0, 20.0),
    };
    const MergeDecision d = merge_eligible(ego, mainline, crit, g);
    CHECK(d.eligible);
    CHECK(d.leader_gap == doctest::Approx(40.0));
    CHECK(d.follower_gap == doctest::Approx(40.0));
    CHECK(d.leader_required == doctest::Approx(32.0));
    CHECK(d.follower_required == doctest::Approx(32.0));
  }
  SUBCASE("overlapping mainline vehicle blocks the merge") {
    const std::vector<VehicleState> mainline = {main_vehicle(2, vp + 2.0, 20.0)};
    const MergeDecision d = merge_eligible(ego, mainline, crit, g);
    CHECK_FALSE(d.eligible);
    CHECK(d.overlap);
  }
  SUBCASE("follower check can be relaxed to ego-only") {
    MergeCriteria relaxed = crit;
    relaxed.check_follower = false;
    const std::vector<VehicleState> mainline = {
        main_vehicle(3, vp - ego.length - 1.0, 20.0)};
    CHECK_FALSE(merge_eligible(ego, mainline, crit, g).eligible);
    CHECK(merge_eligible(ego, mainline, relaxed, g).eligible);
  }
  SUBCASE("ego outside R3 is a domain error") {
    const VehicleState r2 = ramp_vehicle(1, g.len_r1 + 1.0, 20.0);
    CHECK_THROWS_AS(merge_eligible(r2, {}, crit, g), std::domain_error);
  }
}

TEST_CASE("eligibility is monotone in gaps") {
  const RampGeometry g = geom();
  const MergeCriteria crit = criteria();
  const VehicleState ego = ramp_vehicle(1, g.ramp_length() - 20.0, 18.0);
  const double vp = virtual_position(ego.position, g);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> gap(1.0, 120.0);
  std::uniform_real_distribution<double> speed(5.0, 30.0);
  for (int i = 0; i < 500; ++i) {
    const double lead_gap = gap(rng), foll_gap = gap(rng);
    const double v_lead = speed(rng), v_foll = speed(rng);
    const auto decide = [&](double lg, double fg) {
      const std::vector<VehicleState> mainline = {
          main_vehicle(2, vp + lg + 5.0, v_lead),
          main_vehicle(3, vp - ego.length - fg, v_foll)};
      return merge_eligible(ego, mainline, crit, g).eligible;
    };
    if (decide(lead_gap, foll_gap)) {
      CHECK(decide(lead_gap + 20.0, foll_gap));
      CHECK(decide(lead_gap, foll_gap + 20.0));
    }
  }
}

TEST_CASE("target selection") {
  const RampGeometry g = geom();
  const auto always = [](const VehicleState&) { return true; };
  const auto never = [](const VehicleState&) { return false; };

  VehicleGroups groups;
  groups.r3 = {ramp_vehicle(7, g.ramp_length() - 5.0, 15.0)};
  groups.r2 = {ramp_vehicle(2, g.len_r1 + 50.0, 12.0),
               ramp_vehicle(5, g.len_r1 + 10.0, 10.0)};

  // Ineligible R3 vehicle wins over R2.
  CHECK(select_target(groups, never) == 7);
  // All R3 vehicles eligible: leading R2 vehicle.
  CHECK(select_target(groups, always) == 2);
  groups.r3.clear();
  CHECK(select_target(groups, always) == 2);
  groups.r2.clear();
  groups.r1 = {ramp_vehicle(9, 10.0, 5.0)};
  CHECK_FALSE(select_target(groups, always).has_value());
}

TEST_CASE("guidance command computation") {
  const RampGeometry g = geom();
  const IdmParams p = params();
  const VehicleState target = ramp_vehicle(1, g.len_r1 + 50.0, 20.0);
  const double vp = virtual_position(target.position, g);

  SUBCASE("no mainline vehicles at v_max gives zero accel") {
    VehicleState fast = target;
    fast.speed = p.v_max;
    const GuidanceCommand cmd = compute_guidance(fast, {}, g, p, 0.0);
    CHECK(cmd.recommended_accel == doctest::Approx(0.0));
    CHECK(cmd.recommended_speed == doctest::Approx(p.v_max));
  }
  SUBCASE("distant leader from rest gives a_max") {
    VehicleState rest = target;
    rest.speed = 0.0;
    const std::vector<VehicleState> mainline = {main_vehicle(2, 1e6, 25.0)};
    const GuidanceCommand cmd = compute_guidance(rest, mainline, g, p, 0.0);
    CHECK(cmd.recommended_accel == doctest::Approx(p.a_max).epsilon(1e-6));
  }
  SUBCASE("opening leader case matches direct evaluation") {
    const std::vector<VehicleState> mainline = {
        main_vehicle(2, vp + 30.0 + 5.0, 25.0)};
    const GuidanceCommand cmd = compute_guidance(target, mainline, g, p, 12.0);
    const double s_star = 2.0 + 1.5 * 20.0 + 20.0 * (-5.0) / (2.0 * std::sqrt(3.0));
    const double expect =
        1.5 * (1.0 - std::pow(20.0 / 33.33, 4.0) - std::pow(s_star / 30.0, 2.0));
    CHECK(cmd.recommended_accel == doctest::Approx(expect).epsilon(1e-9));
    CHECK(cmd.recommended_accel == doctest::Approx(1.2892).epsilon(1e-4));
    CHECK(cmd.leader_id == 2);
    CHECK(cmd.issued_at == 12.0);
    CHECK(cmd.recommended_speed ==
          doctest::Approx(20.0 + expect * 1.0).epsilon(1e-9));
  }
  SUBCASE("overlap produces maximum braking, not a crash") {
    const std::vector<VehicleState> mainline = {main_vehicle(2, vp + 1.0, 25.0)};
    const GuidanceCommand cmd = compute_guidance(target, mainline, g, p, 0.0);
    CHECK(cmd.overlap);
    CHECK(cmd.recommended_accel == -p.b_hard);
  }
  SUBCASE("mainline target is rejected") {
    CHECK_THROWS_AS(compute_guidance(main_vehicle(2, 100.0, 25.0), {}, g, p, 0.0),
                    std::domain_error);
  }
}

TEST_CASE("leader choice matches a linear-scan oracle") {
  const RampGeometry g = geom();
  const IdmParams p = params();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(0.0, 800.0);
  std::uniform_real_distribution<double> ramp_pos(g.len_r1, g.ramp_length());
  std::uniform_real_distribution<double> speed(5.0, 30.0);
  for (int trial = 0; trial < 300; ++trial) {
    const VehicleState target = ramp_vehicle(1, ramp_pos(rng), speed(rng));
    const double vp = virtual_position(target.position, g);
    std::vector<VehicleState> mainline;
    for (int i = 0; i < 12; ++i) {
      mainline.push_back(main_vehicle(static_cast<VehicleId>(10 + i), pos(rng),
                                      speed(rng)));
    }
    // Skip configurations with a vehicle straddling the virtual position.
    bool overlap = false;
    for (const auto& m : mainline) {
      if (m.rear() <= vp && m.position > vp) overlap = true;
    }
    if (overlap) continue;

    const GuidanceCommand cmd = compute_guidance(target, mainline, g, p, 0.0);
    const VehicleState* best = nullptr;
    for (const auto& m : mainline) {
      if (m.rear() > vp && (!best || m.rear() < best->rear())) best = &m;
    }
    if (best) {
      CHECK(cmd.leader_id == best->id);
    } else {
      CHECK_FALSE(cmd.leader_id.has_value());
    }
    CHECK(cmd.recommended_accel >= -p.b_hard);
    CHECK(cmd.recommended_accel <= p.a_max);
    CHECK(cmd.recommended_speed >= 0.0);
    CHECK(cmd.recommended_speed <= p.v_max);
  }
}

TEST_CASE("controller guides ramp vehicles only") {
  const RampGeometry g = geom();
  const IdmParams p = params();
  const MergeCriteria crit = criteria();
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> pos(0.0, 780.0);
  std::uniform_real_distribution<double> rpos(0.0, g.ramp_length());
  std::uniform_real_distribution<double> speed(0.0, 30.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<VehicleState> snap;
    std::vector<VehicleId> ramp_ids;
    for (int i = 0; i < 6; ++i) {
      snap.push_back(main_vehicle(static_cast<VehicleId>(i + 1), pos(rng), speed(rng)));
    }
    for (int i = 0; i < 4; ++i) {
      VehicleState v = ramp_vehicle(static_cast<VehicleId>(100 + i), rpos(rng), speed(rng));
      ramp_ids.push_back(v.id);
      snap.push_back(v);
    }
    const auto cmd = plan_guidance(snap, g, p, crit, 0.0);
    if (cmd) {
      CHECK(std::find(ramp_ids.begin(), ramp_ids.end(), cmd->target_id) !=
            ramp_ids.end());
      // Never an R1 vehicle.
      for (const auto& v : snap) {
        if (v.id == cmd->target_id) {
          CHECK(segment_of(v.position, g) != RampSegment::R1);
        }
      }
    }
  }
}
