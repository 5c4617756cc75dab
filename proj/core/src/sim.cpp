#include "mergesim/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mergesim {

namespace {

// Bumper gap below which a lane change is not executed even if the IDM
// acceptance clamps the required gap to zero; keeps the strict
// ordering invariant intact at the merge instant.
constexpr double kMergeMargin = 0.1;
constexpr double kWallMargin = 0.5;  // stop this far short of the ramp end
constexpr double kWallBrake = 3.5;   // planned-stop deceleration, m/s^2
constexpr double kBacklogSampleInterval = 60.0;

// Slot-seeking guidance: how many voids upstream of the target's
// current one are scanned for a usable merge slot, the spare length a
// usable void must offer beyond the two desired gaps (covers the
// transient overshoot of IDM settling), the minimum drop-back rate
// toward a chosen slot, and the largest speed sacrifice the controller
// may ask for to reach a slot before the runway ends.
constexpr std::size_t kSlotSearchDepth = 12;
constexpr double kSlotMargin = 6.0;
constexpr double kDropbackSpeed = 2.0;
constexpr double kMaxDrop = 6.0;
// A stopped R3 vehicle with less free run than this ahead of it cannot
// rebuild merge speed and is written off by the controller.
constexpr double kStallRunway = 50.0;
// How long a driver stopped at the lane end waits for a criterion-clean
// gap before forcing into one the follower can survive.
constexpr double kForceWait = 45.0;
// Advised speed may exceed the local lane pace by this much, enough to
// slide forward inside a void.
constexpr double kPassMargin = 2.0;
// Residual drop-back distance small enough to ignore; avoids chatter
// between free-run and drop-back advice.
constexpr double kAimDeadband = 2.0;
// Distance kept behind a stalled ramp-end blocker so the held vehicle
// can rebuild merge speed after the blocker clears.
constexpr double kRestartRunway = 250.0;
// Mean mainline speed near the merge point below which the lane counts
// as jammed; queued ramp vehicles then close up and merge into the jam
// wave instead of holding back.
constexpr double kJamSpeed = 8.0;
// Advised cruise speed while dropping back toward an upstream void or
// while no usable void is in sight; low enough that voids stream past
// quickly, high enough that merge speed can still be rebuilt.
constexpr double kHoldSpeed = 7.0;
// A drop-back plan only needs to rebuild to within this much of the
// lane pace before the runway ends; the last couple of metres per
// second close during the approach into the aimed void.
constexpr double kMatchSlack = 3.0;

// Distance a constant-speed follower closes on a vehicle that starts at
// v0 and accelerates along the free-road IDM profile. Unbounded when
// the profile cannot reach the follower's speed.
double free_closure(double v0, double v_follower, const IdmParams& p) {
  if (v_follower <= v0) return 0.0;
  double v = v0, closure = 0.0;
  const double dt = 0.05;
  for (int i = 0; i < 40000 && v < v_follower; ++i) {
    closure += (v_follower - v) * dt;
    const double a = free_acceleration(v, p);
    if (a <= 1e-6) return 1e18;
    v += a * dt;
  }
  return v >= v_follower ? closure : 1e18;
}

// Road distance covered while accelerating freely from v0 to v1.
double free_run_dist(double v0, double v1, const IdmParams& p) {
  if (v1 <= v0) return 0.0;
  double v = v0, dist = 0.0;
  const double dt = 0.05;
  for (int i = 0; i < 40000 && v < v1; ++i) {
    const double a = free_acceleration(v, p);
    if (a <= 1e-6) return 1e18;
    v += a * dt;
    dist += v * dt;
  }
  return v >= v1 ? dist : 1e18;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t idx = static_cast<std::size_t>(
      q * static_cast<double>(values.size() - 1));
  return values[idx];
}

}  // namespace

void ScenarioConfig::validate() const {
  geometry.validate();
  idm.validate();
  fuel.validate();
  if (mainline_flow < 0.0 || ramp_flow < 0.0) {
    throw std::domain_error("ScenarioConfig: flows must be nonnegative");
  }
  if (dt <= 0.0 || guidance_interval <= 0.0) {
    throw std::domain_error("ScenarioConfig: dt and guidance interval must be positive");
  }
  const double ratio = guidance_interval / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::domain_error("ScenarioConfig: dt must divide the guidance interval");
  }
  if (!(duration > warmup) || warmup < 0.0) {
    throw std::domain_error("ScenarioConfig: duration must exceed warmup");
  }
  if (vehicle_length <= 0.0) {
    throw std::domain_error("ScenarioConfig: vehicle length must be positive");
  }
  if (merge_headway <= 0.0) {
    throw std::domain_error("ScenarioConfig: merge headway must be positive");
  }
  if (!(outer_lane_share > 0.0) || outer_lane_share > 1.0) {
    throw std::domain_error("ScenarioConfig: outer lane share must be in (0, 1]");
  }
  if (outer_lane_speed <= 0.0) {
    throw std::domain_error("ScenarioConfig: outer lane speed must be positive");
  }
}

double SimResult::backlog_mid() const {
  if (backlog_samples.empty()) return 0.0;
  return backlog_samples[backlog_samples.size() / 2];
}

double SimResult::backlog_end() const {
  return backlog_samples.empty() ? 0.0 : backlog_samples.back();
}

std::string SimResult::csv_header() {
  return "total_fuel_l,merges,merge_failures,collisions,mean_merge_speed,"
         "p5_merge_speed,spawned,exited,present,queued,backlog_mid,backlog_end";
}

std::string SimResult::csv_row() const {
  std::ostringstream out;
  out << fmt(total_fuel_l) << ',' << merges << ',' << merge_failures << ','
      << collisions << ',' << fmt(mean_merge_speed) << ','
      << fmt(p5_merge_speed) << ',' << spawned << ',' << exited << ','
      << present << ',' << queued << ',' << fmt(backlog_mid()) << ','
      << fmt(backlog_end());
  return out.str();
}

int spawn_arrivals(std::mt19937_64& rng, double flow_veh_per_hr, double dt) {
  if (flow_veh_per_hr < 0.0) {
    throw std::domain_error("spawn_arrivals: negative flow");
  }
  if (flow_veh_per_hr == 0.0) return 0;
  const double lambda = flow_veh_per_hr * dt / 3600.0;
  // Knuth's product method; lambda is far below 1 for any sane step.
  const double limit = std::exp(-lambda);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int count = -1;
  double p = 1.0;
  do {
    p *= unit(rng);
    ++count;
  } while (p > limit);
  return count;
}

void cooperative_adjust(std::span<const VehicleState> mainline,
                        const VehicleState* candidate,
                        const RampGeometry& geom, const IdmParams& p,
                        std::span<double> accels) {
  if (!candidate) return;
  const double vp = virtual_position(candidate->position, geom);
  const double virtual_rear = vp - candidate->length;
  const VehicleState* follower = nullptr;
  std::size_t follower_idx = 0;
  for (std::size_t i = 0; i < mainline.size(); ++i) {
    const VehicleState& m = mainline[i];
    if (m.position <= virtual_rear &&
        (!follower || m.position > follower->position)) {
      follower = &m;
      follower_idx = i;
    }
  }
  if (!follower) return;
  const double gap = virtual_rear - follower->position;
  if (gap <= 0.0) return;
  const double yield = acceleration(follower->speed, gap,
                                    follower->speed - candidate->speed, p);
  accels[follower_idx] = std::min(accels[follower_idx], yield);
}

double equilibrium_entry_speed(double flow_veh_per_hr, const IdmParams& p,
                               double vehicle_length) {
  const double v_hi = p.v_max * (1.0 - 1e-9);
  if (flow_veh_per_hr <= 0.0) return v_hi;
  const auto slack = [&](double v) {
    return v * 3600.0 / flow_veh_per_hr - (equilibrium_gap(v, p) + vehicle_length);
  };
  const int grid = 400;
  double best_v = 0.0, best_slack = -1e300;
  for (int k = 1; k <= grid; ++k) {
    const double v = v_hi * static_cast<double>(k) / (grid + 1);
    const double s = slack(v);
    if (s > best_slack) {
      best_slack = s;
      best_v = v;
    }
  }
  if (best_slack <= 0.0) return best_v;  // demand above capacity
  // Upper root of the slack function (free-flow branch).
  double lo = best_v, hi = v_hi;
  if (slack(hi) > 0.0) return hi;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slack(mid) > 0.0 ? lo : hi) = mid;
  }
  return lo;
}

Simulation::Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.validate();
  main_params_ = cfg_.idm.with_v_max(cfg_.geometry.speed_limit_main);
  outer_params_ = cfg_.idm.with_v_max(
      std::min(cfg_.outer_lane_speed, cfg_.geometry.speed_limit_main));
  criteria_.ego = main_params_;
  criteria_.ego.t_headway = cfg_.merge_headway;
  criteria_.follower = criteria_.ego;
  criteria_.check_follower = cfg_.merge_check_follower;
  steps_per_guidance_ =
      static_cast<std::uint64_t>(std::llround(cfg_.guidance_interval / cfg_.dt));
  mainline_entry_speed_ = equilibrium_entry_speed(
      cfg_.mainline_flow * cfg_.outer_lane_share, outer_params_,
      cfg_.vehicle_length);
  ramp_entry_speed_ = std::min(cfg_.geometry.speed_limit_r1,
                               cfg_.effective_r2_entry_speed());
  if (!cfg_.replay_path.empty()) {
    replay_records_ = load_trajectory_csv(cfg_.replay_path);
    update_replay();
  }
}

double Simulation::uniform() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng_);
}

std::size_t Simulation::ramp_backlog() const {
  return ramp_.size() + ramp_queue_;
}

std::vector<VehicleState> Simulation::snapshot() const {
  std::vector<VehicleState> out;
  out.reserve(mainline_.size() + ramp_.size() + replay_.size());
  for (const Vehicle& v : mainline_) out.push_back(v.state);
  for (const Vehicle& v : ramp_) out.push_back(v.state);
  for (const VehicleState& v : replay_) out.push_back(v);
  return out;
}

std::vector<VehicleState> Simulation::combined_mainline() const {
  std::vector<VehicleState> out;
  out.reserve(mainline_.size() + replay_.size());
  std::size_t i = 0, j = 0;
  while (i < mainline_.size() || j < replay_.size()) {
    if (j == replay_.size() ||
        (i < mainline_.size() &&
         mainline_[i].state.position >= replay_[j].position)) {
      out.push_back(mainline_[i++].state);
    } else {
      out.push_back(replay_[j++]);
    }
  }
  return out;
}

void Simulation::update_replay() {
  replay_.clear();
  for (std::size_t r = 0; r < replay_records_.size(); ++r) {
    const TrajectoryRecord& rec = replay_records_[r];
    if (rec.samples.size() < 2) continue;
    const double t0 = rec.samples.front().time_s;
    const double t1 = rec.samples.back().time_s;
    if (clock_ < t0 || clock_ > t1) continue;
    const double u = (clock_ - t0) / rec.sample_interval_s;
    const std::size_t k = std::min(static_cast<std::size_t>(u),
                                   rec.samples.size() - 2);
    const double frac = u - static_cast<double>(k);
    const double x = rec.samples[k].position_m +
                     frac * (rec.samples[k + 1].position_m - rec.samples[k].position_m);
    const double v = (rec.samples[k + 1].position_m - rec.samples[k].position_m) /
                     rec.sample_interval_s;
    VehicleState st;
    st.id = 1'000'000'000ull + r;  // replay ids live outside the spawn range
    st.lane = LaneKind::Mainline;
    st.position = x;
    st.speed = std::max(0.0, v);
    st.length = cfg_.vehicle_length;
    replay_.push_back(st);
  }
  std::sort(replay_.begin(), replay_.end(),
            [](const VehicleState& a, const VehicleState& b) {
              return a.position > b.position;
            });
}

void Simulation::spawn() {
  if (cfg_.replay_path.empty()) {
    const int main_arrivals = spawn_arrivals(
        rng_, cfg_.mainline_flow * cfg_.outer_lane_share, cfg_.dt);
    mainline_queue_ += static_cast<std::size_t>(main_arrivals);
    spawned_ += static_cast<std::uint64_t>(main_arrivals);
  }
  const int ramp_arrivals = spawn_arrivals(rng_, cfg_.ramp_flow, cfg_.dt);
  ramp_queue_ += static_cast<std::size_t>(ramp_arrivals);
  spawned_ += static_cast<std::uint64_t>(ramp_arrivals);
  insert_from_queues();
}

void Simulation::insert_from_queues() {
  const double entry_front = cfg_.vehicle_length;
  const auto try_insert = [&](std::vector<Vehicle>& lane, std::size_t& queue,
                              double entry_speed, LaneKind kind, bool is_cav,
                              const IdmParams& p) {
    while (queue > 0) {
      const double v_ins = entry_speed;
      if (!lane.empty()) {
        const VehicleState& last = lane.back().state;
        const double gap = last.rear() - entry_front;
        // Hold the entrant until its IDM equilibrium spacing at entry
        // speed fits behind the tail. Squeezing entrants in closer
        // would make them brake on arrival and send a compression wave
        // downstream, filling the merge window with unusable
        // micro-gaps.
        if (gap < equilibrium_gap(std::min(v_ins, 0.95 * p.v_max), p)) break;
      }
      Vehicle veh;
      veh.state.id = next_id_++;
      veh.state.lane = kind;
      veh.state.position = entry_front;
      veh.state.speed = std::max(0.0, v_ins);
      veh.state.length = cfg_.vehicle_length;
      veh.state.is_cav = is_cav;
      lane.push_back(std::move(veh));
      --queue;
    }
  };
  if (cfg_.replay_path.empty()) {
    try_insert(mainline_, mainline_queue_, mainline_entry_speed_,
               LaneKind::Mainline, false, outer_params_);
  }
  try_insert(ramp_, ramp_queue_, ramp_entry_speed_, LaneKind::Ramp, true,
             cfg_.idm);
}

void Simulation::run_guidance() {
  const std::vector<VehicleState> snap = snapshot();
  const VehicleGroups groups = classify_vehicles(snap, cfg_.geometry);
  const IdmParams& acc = criteria_.ego;
  const std::vector<VehicleState> main = combined_mainline();
  for (Vehicle& v : ramp_) v.advised_accel.reset();

  // A vehicle stopped in R3 without room ahead to rebuild merge speed
  // can only clear during a mainline jam wave; it is written off by the
  // controller so the drivers behind it can still be set up for a clean
  // run. Free run is measured to the nearest stopped vehicle ahead or
  // to the ramp end.
  std::vector<VehicleId> stalled_ids;
  {
    double barrier = cfg_.geometry.ramp_length();
    for (const VehicleState& v : groups.r3) {
      if (v.speed < 0.5 && barrier - v.position < kStallRunway) {
        stalled_ids.push_back(v.id);
      }
      if (v.speed < 0.5) barrier = v.rear();
    }
  }
  const auto is_stalled = [&](VehicleId id) {
    return std::find(stalled_ids.begin(), stalled_ids.end(), id) !=
           stalled_ids.end();
  };

  // Mean mainline speed just upstream of the merge point. In a jam wave
  // advice is withheld entirely: voids do not exist, and closing up on
  // the slow traffic is how queued vehicles get out.
  double local_speed = cfg_.geometry.speed_limit_main;
  {
    double sum = 0.0;
    int n = 0;
    for (const VehicleState& v : groups.mainline) {
      if (v.position <= cfg_.geometry.merge_point_x &&
          v.position > cfg_.geometry.merge_point_x - 150.0) {
        sum += v.speed;
        ++n;
      }
    }
    if (n > 0) local_speed = sum / n;
  }
  const bool jammed = local_speed <= kJamSpeed;

  const auto req_follow = [&](double back_v, double lead_v) {
    return desired_gap(back_v, back_v - lead_v, acc);
  };
  // The closest the IDM shadow-following can settle behind a leader;
  // the ego cannot slide further forward inside a void than this.
  const auto settle_gap = [&](double lead_v) {
    return equilibrium_gap(std::min(lead_v, 0.95 * acc.v_max), acc);
  };

  // Per-vehicle slot aiming, front to back. While a vehicle is
  // rebuilding speed it slips backward through the traffic stream, so
  // it aims at the first usable void at or behind its predicted landing
  // point; the advice only corrects the residual beyond that natural
  // slip. A void may be shared when it is wide enough for the vehicles
  // already aiming at it plus one more.
  std::unordered_map<std::size_t, int> claims;  // void index -> aimed vehicles
  double blocker_rear = -1.0;    // rearmost bumper of a stalled blocker ahead
  int aimless_ahead = 0;         // ramp vehicles ahead without a usable aim
  if (!jammed && !main.empty()) {
    for (Vehicle& veh : ramp_) {
      const VehicleState& ego = veh.state;
      if (segment_of(ego.position, cfg_.geometry) == RampSegment::R1) break;
      if (is_stalled(ego.id)) {
        blocker_rear = ego.rear();
        aims_.erase(ego.id);
        ++aimless_ahead;
        continue;
      }
      const double vpos = virtual_position(ego.position, cfg_.geometry);
      std::size_t i0 = main.size();
      for (std::size_t k = main.size(); k-- > 0;) {
        if (main[k].rear() > vpos) {
          i0 = k;
          break;
        }
      }
      if (i0 >= main.size()) {
        aims_.erase(ego.id);  // leads all mainline traffic: run free
        continue;
      }
      const double v_ref = main[i0].speed;
      const double slip = free_closure(ego.speed, v_ref, main_params_);
      const double p_nat = vpos - slip;  // predicted landing point
      // Runway ends at the wall braking curve, or a restart-runway
      // short of a stalled blocker so a failed attempt is not stranded
      // bumper to bumper.
      const double end_x =
          blocker_rear >= 0.0
              ? blocker_rear - kRestartRunway
              : cfg_.geometry.ramp_length() - kWallMargin -
                    v_ref * v_ref / (2.0 * kWallBrake);
      const double t_avail =
          (end_x - ego.position) / std::max(0.5 * (ego.speed + v_ref), 5.0);
      // Deepest reachable drop-back: hold kHoldSpeed while the traffic
      // stream slides past, keeping enough runway to rebuild matching
      // speed before end_x.
      const double rebuild =
          free_run_dist(kHoldSpeed, v_ref - kMatchSlack, main_params_);
      const double slow_len = end_x - ego.position - rebuild;
      const double max_drop =
          kAimDeadband + (slow_len > 0.0
                              ? slow_len * (v_ref - kHoldSpeed) / kHoldSpeed
                              : 0.0);
      // Usable landing band inside void k: no closer to the leader than
      // the settling gap, no closer to the void's rear vehicle than its
      // desired gap plus slack. Vehicles already aiming here shift the
      // band backward by one slot each. Returns the extra drop-back
      // distance beyond the natural slip, or nothing if unusable.
      const auto evaluate = [&](std::size_t k) -> std::optional<double> {
        const auto it = claims.find(k);
        const int ahead = it == claims.end() ? 0 : it->second;
        const double slot_width =
            ego.length + desired_gap(main[k].speed, 0.0, acc);
        const double front_ok = main[k].rear() - settle_gap(main[k].speed) -
                                ahead * slot_width;
        // A follower closing on the void's front vehicle will keep
        // eating the void; judge the band by where its rear will be
        // around the time the ego can merge, not where it is now.
        const double closing =
            k + 1 < main.size()
                ? std::max(0.0, main[k + 1].speed - main[k].speed)
                : 0.0;
        const double back_need =
            k + 1 < main.size()
                ? main[k + 1].position + closing * std::min(t_avail, 10.0) +
                      ego.length +
                      req_follow(main[k + 1].speed, main[k].speed) +
                      kSlotMargin / 2.0
                : -1e18;
        if (front_ok < back_need) return std::nullopt;  // void too small
        if (p_nat < back_need - kSlotMargin) {
          return std::nullopt;  // would land at the void's rear
        }
        return std::max(0.0, p_nat - front_ok);
      };
      // Keep the previously aimed void while it remains usable; a fresh
      // aim every tick feeds back on itself (each drop-back command
      // slows the ego, grows the predicted slip, and pushes the aim
      // further upstream).
      std::size_t ka = main.size();
      std::optional<double> extra;
      if (auto it = aims_.find(ego.id); it != aims_.end()) {
        for (std::size_t k = i0; k < main.size(); ++k) {
          if (main[k].id == it->second) {
            ka = k;
            break;
          }
        }
        if (ka < main.size()) {
          extra = evaluate(ka);
          if (extra && *extra > max_drop) extra.reset();
          if (!extra) ka = main.size();
        }
      }
      if (ka >= main.size()) {
        aims_.erase(ego.id);
        const std::size_t stop = std::min(main.size(), i0 + kSlotSearchDepth);
        for (std::size_t k = i0; k < stop; ++k) {
          std::optional<double> e = evaluate(k);
          if (!e) continue;
          if (*e > max_drop) break;  // too deep to reach
          ka = k;
          extra = e;
          aims_[ego.id] = main[k].id;
          break;
        }
      }
      double advice;
      if (ka < main.size()) {
        ++claims[ka];
        if (ka == i0 && *extra <= kAimDeadband) {
          // Inside the aimed void: shadow-follow its front vehicle.
          const double gap = main[ka].rear() - vpos;
          advice = gap > 0.0 ? acceleration(ego.speed, gap,
                                            ego.speed - main[ka].speed, acc)
                             : -acc.b_hard;
        } else if (*extra <= kAimDeadband) {
          // On track: run free and let the slip deliver the ego into
          // the aimed void.
          advice = free_acceleration(ego.speed, main_params_);
        } else {
          // Spread the residual drop-back over the remaining runway.
          const double drop = std::clamp(*extra / std::max(t_avail, 1.0),
                                         kDropbackSpeed, kMaxDrop);
          const double rec_v =
              std::max(kHoldSpeed, std::min(ego.speed, main[ka].speed) - drop);
          advice = (rec_v - ego.speed) / cfg_.guidance_interval;
        }
      } else if (segment_of(ego.position, cfg_.geometry) == RampSegment::R3 &&
                 aimless_ahead < 1) {
        // No usable void in sight: ease off and let voids stream past
        // instead of racing to the wall, stopping a restart-runway
        // short of any stalled blocker. Only the first such vehicle
        // holds back; once a queue is forming, holding back more of
        // them just starves the merge area.
        const double room = end_x - ego.position;
        const double rec_v = std::min(
            room > 0.0 ? std::sqrt(2.0 * acc.b_comf * room) : 0.0,
            kHoldSpeed);
        advice = (rec_v - ego.speed) / cfg_.guidance_interval;
        ++aimless_ahead;
      } else {
        ++aimless_ahead;
        continue;  // no aim: drive normally and work toward the queue
      }
      // Cap the advised speed a little above the local lane pace:
      // enough to slide forward within a void, without burning fuel on
      // speed that is surrendered right after the merge.
      advice = std::min(advice,
                        (v_ref + kPassMargin - ego.speed) /
                            cfg_.guidance_interval);
      veh.advised_accel = std::clamp(advice, -acc.b_comf, acc.a_max);
#ifdef MERGESIM_DEBUG_GUIDANCE
      if (const char* d = std::getenv("MERGESIM_DEBUG_ID");
          d && std::stoull(d) == ego.id) {
        std::fprintf(stderr,
                     "t=%.1f x=%.1f v=%.2f vpos=%.1f slip=%.1f end_x=%.1f "
                     "max_drop=%.1f i0=%zu ka=%zd aim=%lld extra=%s adv=%.2f\n",
                     clock_, ego.position, ego.speed, vpos, slip, end_x,
                     max_drop, i0, ka < main.size() ? (ssize_t)ka : -1,
                     ka < main.size() ? (long long)main[ka].id : -1,
                     extra ? fmt(*extra).c_str() : "none", *veh.advised_accel);
        for (std::size_t k = i0;
             k < std::min(main.size(), i0 + kSlotSearchDepth); ++k) {
          const auto it2 = claims.find(k);
          const int ahead2 =
              (it2 == claims.end() ? 0 : it2->second) - (k == ka ? 1 : 0);
          const double fo = main[k].rear() - settle_gap(main[k].speed) -
                            ahead2 * (ego.length +
                                      desired_gap(main[k].speed, 0.0, acc));
          const double bn = k + 1 < main.size()
                                ? main[k + 1].position + ego.length +
                                      req_follow(main[k + 1].speed,
                                                 main[k].speed) +
                                      kSlotMargin / 2.0
                                : -1e18;
          std::fprintf(stderr,
                       "    k=%zu id=%llu front=%.1f rear=%.1f claims=%d "
                       "band=[%.1f,%.1f] p_nat=%.1f\n",
                       k, (unsigned long long)main[k].id, main[k].position,
                       main[k].rear(), ahead2, bn, fo, p_nat);
        }
      }
#endif
    }
  }

  // The logged command stream stays single-target: the leading vehicle
  // that still needs help, with stalled vehicles treated as beyond it.
  const auto merge_ok = [&](const VehicleState& v) {
    if (is_stalled(v.id)) return true;
    return merge_eligible(v, groups.mainline, criteria_, cfg_.geometry)
        .eligible;
  };
  const std::optional<VehicleId> target_id = select_target(groups, merge_ok);
  latched_.reset();
  if (!target_id) return;
  for (const Vehicle& veh : ramp_) {
    if (veh.state.id != *target_id) continue;
    GuidanceCommand cmd;
    cmd.target_id = veh.state.id;
    cmd.issued_at = clock_;
    if (veh.advised_accel) {
      cmd.recommended_accel = *veh.advised_accel;
      cmd.recommended_speed = std::max(
          0.0, veh.state.speed + cmd.recommended_accel * cfg_.guidance_interval);
      if (auto it = aims_.find(veh.state.id); it != aims_.end()) {
        cmd.leader_id = it->second;
      }
      latched_ = cmd;
    } else {
      latched_ = compute_guidance(veh.state, groups.mainline, cfg_.geometry,
                                  acc, clock_, cfg_.guidance_interval);
    }
    break;
  }
  if (latched_) commands_.push_back(*latched_);
}

const VehicleState* Simulation::merge_candidate_state() const {
  if (ramp_.empty()) return nullptr;
  const VehicleState& head = ramp_.front().state;
  return segment_of(head.position, cfg_.geometry) == RampSegment::R1 ? nullptr
                                                                     : &head;
}

void Simulation::compute_accels() {
  const std::vector<VehicleState> combined = combined_mainline();
  std::vector<double> combined_accels(combined.size(), 0.0);
  const IdmParams& main_params = main_params_;
  const IdmParams& outer_params = outer_params_;

  for (std::size_t i = 0; i < combined.size(); ++i) {
    const VehicleState& me = combined[i];
    if (i == 0) {
      combined_accels[i] = std::clamp(free_acceleration(me.speed, outer_params),
                                      -outer_params.b_hard, outer_params.a_max);
    } else {
      const VehicleState& leader = combined[i - 1];
      const double gap = leader.rear() - me.position;
      if (gap <= 0.0) {
        throw CollisionError("mainline overlap ahead of vehicle " +
                             std::to_string(me.id) + " at t=" + fmt(clock_));
      }
      combined_accels[i] =
          acceleration(me.speed, gap, me.speed - leader.speed, outer_params);
    }
  }

  if (cfg_.cooperative && cfg_.replay_path.empty()) {
    cooperative_adjust(combined, merge_candidate_state(), cfg_.geometry,
                       outer_params, combined_accels);
  }

  // Copy back to the owned mainline vehicles (replay entries keep their
  // recorded motion and ignore the computed value).
  mainline_accels_.assign(mainline_.size(), 0.0);
  {
    std::size_t own = 0;
    for (std::size_t i = 0; i < combined.size(); ++i) {
      if (own < mainline_.size() && combined[i].id == mainline_[own].state.id) {
        mainline_accels_[own++] = combined_accels[i];
      }
    }
  }

  // Ramp vehicles: IDM behind their ramp predecessor, capped by the
  // end-of-ramp wall. Unguided drivers have no mainline information and
  // drive the acceleration lane at its own limit; advised drivers
  // follow the instructed speed, so they drive with mainline-speed
  // parameters shaped by their latched advice.
  const double ramp_len = cfg_.geometry.ramp_length();
  const IdmParams r1_params =
      cfg_.idm.with_v_max(cfg_.effective_r2_entry_speed());
  const IdmParams ramp_params =
      cfg_.idm.with_v_max(cfg_.geometry.speed_limit_ramp);
  ramp_accels_.assign(ramp_.size(), 0.0);
  for (std::size_t i = 0; i < ramp_.size(); ++i) {
    const VehicleState& me = ramp_[i].state;
    const bool in_r1 = segment_of(me.position, cfg_.geometry) == RampSegment::R1;
    const bool guided = !in_r1 && ramp_[i].advised_accel.has_value();
    const IdmParams& p = in_r1 ? r1_params : (guided ? main_params : ramp_params);

    double a = std::clamp(free_acceleration(me.speed, p), -p.b_hard, p.a_max);
    if (i > 0) {
      const VehicleState& leader = ramp_[i - 1].state;
      const double gap = leader.rear() - me.position;
      if (gap <= 0.0) {
        throw CollisionError("ramp overlap ahead of vehicle " +
                             std::to_string(me.id) + " at t=" + fmt(clock_));
      }
      a = std::min(a, acceleration(me.speed, gap, me.speed - leader.speed, p));
    }
    // End-of-ramp guard: follow the comfortable braking curve into a
    // stop just short of the ramp end. Unlike car-following against a
    // phantom stopped vehicle, this lets vehicles hold speed through
    // the lane-change zone and only brake when a stop becomes
    // kinematically necessary.
    const double stop_dist = ramp_len - me.position - kWallMargin;
    if (stop_dist <= 0.0) {
      a = std::min(a, -p.b_hard);
    } else {
      const double reach = std::max(0.0, stop_dist - me.speed * cfg_.dt);
      const double v_allow = std::sqrt(2.0 * kWallBrake * reach);
      a = std::min(a, (v_allow - me.speed) / cfg_.dt);
    }
    // The command caps the target's acceleration. Guidance is advisory,
    // so it never brakes harder than b_comf; the wall guard above owns
    // emergency braking.
    if (guided) {
      a = std::min(a, std::max(*ramp_[i].advised_accel, -p.b_comf));
    }
    ramp_accels_[i] = std::clamp(a, -p.b_hard, p.a_max);
  }
}

void Simulation::integrate() {
  const double dt = cfg_.dt;
  for (std::size_t i = 0; i < mainline_.size(); ++i) {
    VehicleState& s = mainline_[i].state;
    s.accel = mainline_accels_[i];
    s.speed = std::max(0.0, s.speed + s.accel * dt);
    s.position += s.speed * dt;
  }
  const double ramp_len = cfg_.geometry.ramp_length();
  for (std::size_t i = 0; i < ramp_.size(); ++i) {
    VehicleState& s = ramp_[i].state;
    s.accel = ramp_accels_[i];
    s.speed = std::max(0.0, s.speed + s.accel * dt);
    s.position += s.speed * dt;
    if (s.position >= ramp_len) {
      s.position = ramp_len;
      s.speed = 0.0;
    }
  }
  clock_ += dt;
  ++step_index_;
  if (!replay_records_.empty()) update_replay();
}

void Simulation::execute_lane_change() {
  const std::vector<VehicleState> mainline_view = combined_mainline();
  const double ramp_len = cfg_.geometry.ramp_length();
  for (std::size_t i = 0; i < ramp_.size(); ++i) {
    VehicleState& s = ramp_[i].state;
    if (segment_of(s.position, cfg_.geometry) != RampSegment::R3) continue;
    const MergeDecision d = merge_eligible(s, mainline_view, criteria_, cfg_.geometry);
    bool clear =
        d.eligible && (!d.leader_id || d.leader_gap >= kMergeMargin) &&
        (!d.follower_id || d.follower_gap >= kMergeMargin);
    // A driver stopped at the lane end does not wait forever for a gap
    // the polite criterion would accept: after a while it forces into
    // any gap the follower can survive with a hard brake. The follower
    // reaction is what launches the baseline's stop-and-go wave.
    if (!clear && s.speed < 0.5 &&
        ramp_len - s.position < kStallRunway) {
      ramp_[i].wall_wait_s += cfg_.dt;
      if (ramp_[i].wall_wait_s >= kForceWait && !d.overlap &&
          (!d.leader_id || d.leader_gap >= criteria_.ego.s_min)) {
        bool survivable = true;
        if (d.follower_id) {
          const auto fol = std::find_if(
              mainline_view.begin(), mainline_view.end(),
              [&](const VehicleState& m) { return m.id == *d.follower_id; });
          if (fol != mainline_view.end()) {
            const double closing =
                std::max(0.0, fol->speed * fol->speed - s.speed * s.speed);
            survivable = d.follower_gap >=
                         criteria_.ego.s_min +
                             closing / (2.0 * criteria_.follower.b_hard);
          }
        }
        clear = survivable;
      }
    }
    // Replayed followers cannot brake for the entrant, so the gap must
    // also absorb the whole kinematic closure while the entrant gets up
    // to the follower's speed.
    if (clear && d.follower_id && *d.follower_id >= 1'000'000'000ull) {
      const auto follower = std::find_if(
          mainline_view.begin(), mainline_view.end(),
          [&](const VehicleState& m) { return m.id == *d.follower_id; });
      if (follower != mainline_view.end()) {
        const double need = criteria_.ego.s_min +
                            free_closure(s.speed, follower->speed, criteria_.ego);
        if (d.follower_gap < need) clear = false;
        // A leader slower than the replayed follower would trap the
        // entrant between the two, so the slot is not usable.
        if (clear && d.leader_id) {
          const auto leader = std::find_if(
              mainline_view.begin(), mainline_view.end(),
              [&](const VehicleState& m) { return m.id == *d.leader_id; });
          if (leader != mainline_view.end() &&
              leader->speed + 0.5 < follower->speed) {
            clear = false;
          }
        }
      }
    }
    if (clear) {
      Vehicle merged = std::move(ramp_[i]);
      ramp_.erase(ramp_.begin() + static_cast<long>(i));
      aims_.erase(merged.state.id);
      merged.advised_accel.reset();
      merged.state.position = virtual_position(merged.state.position, cfg_.geometry);
      merged.state.lane = LaneKind::Mainline;
      merged.state.lane_change_ready = true;
      merge_speeds_.push_back(merged.state.speed);
      events_.push_back("t=" + fmt(clock_) + " merge vehicle " +
                        std::to_string(merged.state.id) + " at x=" +
                        fmt(merged.state.position) + " v=" + fmt(merged.state.speed));
      auto at = std::find_if(mainline_.begin(), mainline_.end(),
                             [&](const Vehicle& m) {
                               return m.state.position < merged.state.position;
                             });
      mainline_.insert(at, std::move(merged));
      break;  // at most one lane change per step
    }
    if (!ramp_[i].stalled && s.speed < 0.05 &&
        ramp_len - s.position < cfg_.idm.s_min + 1.0) {
      ramp_[i].stalled = true;
      ++merge_failures_;
      events_.push_back("t=" + fmt(clock_) + " vehicle " + std::to_string(s.id) +
                        " stalled at ramp end");
    }
  }
}

void Simulation::accrue_fuel() {
  if (clock_ <= cfg_.warmup) return;
  const double dt = cfg_.dt;
  const auto burn = [&](Vehicle& v) {
    const double rate = fuel_rate(v.state.speed, v.state.accel, cfg_.fuel);
    v.fuel_l += rate * dt;
    fuel_total_ += rate * dt;
    if (v.state.is_cav) fuel_ramp_ += rate * dt;
  };
  for (Vehicle& v : mainline_) burn(v);
  for (Vehicle& v : ramp_) burn(v);
  // Entry-queued vehicles idle; their fuel is part of the congestion cost.
  fuel_total_ += static_cast<double>(mainline_queue_ + ramp_queue_) *
                 cfg_.fuel.idle_rate * dt;
  fuel_ramp_ += static_cast<double>(ramp_queue_) * cfg_.fuel.idle_rate * dt;
}

void Simulation::remove_exited() {
  while (!mainline_.empty() &&
         mainline_.front().state.rear() > cfg_.geometry.mainline_length) {
    if (cfg_.record_trajectories && !mainline_.front().trace.empty()) {
      TrajectoryRecord rec;
      rec.vehicle_id = std::to_string(mainline_.front().state.id);
      rec.samples = std::move(mainline_.front().trace);
      rec.sample_interval_s = cfg_.guidance_interval;
      finished_traces_.push_back(std::move(rec));
    }
    mainline_.erase(mainline_.begin());
    ++exited_;
  }
}

void Simulation::check_no_overlap() {
  const auto check = [&](std::span<const VehicleState> lane, const char* name) {
    for (std::size_t i = 1; i < lane.size(); ++i) {
      const double gap = lane[i - 1].rear() - lane[i].position;
      if (gap <= 0.0) {
        std::string msg = std::string("collision on ") + name + ": vehicles " +
                          std::to_string(lane[i - 1].id) + "/" +
                          std::to_string(lane[i].id) + " at t=" + fmt(clock_);
        for (std::size_t k = events_.size() > 5 ? events_.size() - 5 : 0;
             k < events_.size(); ++k) {
          msg += "\n  " + events_[k];
        }
        throw CollisionError(msg);
      }
    }
  };
  const std::vector<VehicleState> main_view = combined_mainline();
  check(main_view, "mainline");
  std::vector<VehicleState> ramp_view;
  ramp_view.reserve(ramp_.size());
  for (const Vehicle& v : ramp_) ramp_view.push_back(v.state);
  check(ramp_view, "ramp");
}

void Simulation::record_traces() {
  // Only vehicles that entered on the mainline are recorded. A merged
  // vehicle's record would begin mid-road at its merge position, and on
  // replay it would materialize there regardless of what now occupies
  // that slot; mainline-borne records all start at the entry point.
  for (Vehicle& v : mainline_) {
    if (v.state.lane_change_ready) continue;
    TrajectorySample sample;
    sample.time_s = clock_;
    sample.position_m = v.state.position;
    sample.speed_mps = v.state.speed;
    v.trace.push_back(sample);
  }
}

void Simulation::step() {
  spawn();
  if (cfg_.guidance_enabled && step_index_ % steps_per_guidance_ == 0) {
    run_guidance();
  }
  compute_accels();
  integrate();
  execute_lane_change();
  accrue_fuel();
  remove_exited();
  check_no_overlap();
  if (cfg_.record_trajectories && step_index_ % steps_per_guidance_ == 0) {
    record_traces();
  }
}

SimResult Simulation::run() {
  const std::uint64_t n_steps =
      static_cast<std::uint64_t>(std::llround(cfg_.duration / cfg_.dt));
  const std::uint64_t backlog_stride = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(kBacklogSampleInterval / cfg_.dt)));
  backlog_samples_.push_back(static_cast<double>(ramp_backlog()));
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    step();
    if (step_index_ % backlog_stride == 0) {
      backlog_samples_.push_back(static_cast<double>(ramp_backlog()));
    }
  }

  SimResult result;
  result.total_fuel_l = fuel_total_;
  result.ramp_fuel_l = fuel_ramp_;
  result.merges = merge_speeds_.size();
  result.merge_failures = merge_failures_;
  result.collisions = 0;
  if (!merge_speeds_.empty()) {
    result.mean_merge_speed =
        std::accumulate(merge_speeds_.begin(), merge_speeds_.end(), 0.0) /
        static_cast<double>(merge_speeds_.size());
    result.p5_merge_speed = percentile(merge_speeds_, 0.05);
  }
  result.spawned = spawned_;
  result.exited = exited_;
  result.present = mainline_.size() + ramp_.size();
  result.queued = mainline_queue_ + ramp_queue_;
  result.backlog_samples = backlog_samples_;
  if (cfg_.record_trajectories) {
    for (Vehicle& v : mainline_) {
      if (v.trace.empty()) continue;
      TrajectoryRecord rec;
      rec.vehicle_id = std::to_string(v.state.id);
      rec.samples = std::move(v.trace);
      rec.sample_interval_s = cfg_.guidance_interval;
      finished_traces_.push_back(std::move(rec));
    }
    for (Vehicle& v : ramp_) {
      if (v.trace.empty()) continue;
      TrajectoryRecord rec;
      rec.vehicle_id = std::to_string(v.state.id);
      rec.samples = std::move(v.trace);
      rec.sample_interval_s = cfg_.guidance_interval;
      finished_traces_.push_back(std::move(rec));
    }
    result.trajectories = std::move(finished_traces_);
  }
  return result;
}

SimResult run_scenario(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace mergesim
