#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mergesim/fuel.hpp"
#include "mergesim/guidance.hpp"
#include "mergesim/idm.hpp"
#include "mergesim/road_model.hpp"
#include "mergesim/trajectory_io.hpp"

namespace mergesim {

// Scenario car-following defaults: a 1.0 s headway keeps single-lane
// capacity above the heaviest mainline demands studied, as on a real
// highway lane; the IdmParams defaults elsewhere are the conservative
// textbook values.
inline IdmParams scenario_idm_defaults() {
  IdmParams p;
  p.t_headway = 1.0;
  return p;
}

struct ScenarioConfig {
  RampGeometry geometry;
  IdmParams idm = scenario_idm_defaults();
  FuelModel fuel;

  double mainline_flow = 2000.0;  // veh/hr/ln, nominal per-lane demand
  double ramp_flow = 200.0;       // veh/hr/ln
  // Only the outer mainline lane is simulated. Near an on-ramp part of
  // the nominal per-lane demand shifts to inner lanes (drivers vacate
  // the merge lane), so the simulated lane carries this fraction of the
  // nominal demand.
  double outer_lane_share = 0.65;
  // Cruise pace of the outer lane near the merge area. Busy merge lanes
  // run a little below the posted limit; guided ramp vehicles may build
  // past the ramp's own limit to this pace, which is what lets them
  // match a slot instead of stopping at the lane end.
  double outer_lane_speed = 22.0;
  bool cooperative = false;
  bool guidance_enabled = true;
  bool merge_check_follower = true;
  // Gap-acceptance / guidance-tracking headway. Drivers accept merge
  // gaps tighter than their steady car-following headway and let the
  // platoon relax afterwards; with the full car-following headway the
  // post-merge spacing requirement exceeds the ambient equilibrium
  // spacing and no merge is ever admissible in dense traffic.
  double merge_headway = 0.5;

  double duration = 4200.0;  // s, total including warmup
  double warmup = 600.0;     // s, excluded from fuel totals
  double dt = 0.1;           // s
  double guidance_interval = 1.0;  // s
  std::uint64_t seed = 1;

  // Target speed for R1 vehicles, i.e. the average speed at the start
  // of R2. Nonpositive means "use the R1 speed limit".
  double r2_entry_speed = 0.0;
  double vehicle_length = 5.0;

  std::string replay_path;  // mainline replay CSV; empty = spawn traffic
  bool record_trajectories = false;

  double effective_r2_entry_speed() const {
    return r2_entry_speed > 0.0 ? r2_entry_speed : geometry.speed_limit_r1;
  }
  void validate() const;
};

/// Raised when the no-overlap invariant breaks. Never caught inside the
/// engine; a collision is a test-failure signal, not something to patch
/// over.
class CollisionError : public std::runtime_error {
 public:
  explicit CollisionError(const std::string& what) : std::runtime_error(what) {}
};

struct SimResult {
  double total_fuel_l = 0.0;  // post-warmup, all vehicles incl. entry queues
  double ramp_fuel_l = 0.0;   // share burned by ramp-origin vehicles
  std::uint64_t merges = 0;
  std::uint64_t merge_failures = 0;  // vehicles that stalled at the ramp end
  std::uint64_t collisions = 0;      // always 0 in an accepted run
  double mean_merge_speed = 0.0;
  double p5_merge_speed = 0.0;
  std::uint64_t spawned = 0;
  std::uint64_t exited = 0;
  std::uint64_t present = 0;
  std::uint64_t queued = 0;
  std::vector<double> backlog_samples;  // ramp vehicles + entry queue, 60 s cadence
  std::vector<TrajectoryRecord> trajectories;

  double backlog_mid() const;
  double backlog_end() const;

  static std::string csv_header();
  std::string csv_row() const;
};

/// Poisson arrival draw for one step, mean flow*dt/3600.
int spawn_arrivals(std::mt19937_64& rng, double flow_veh_per_hr, double dt);

/// Cooperative yield: the mainline vehicle immediately behind the merge
/// candidate's virtual position caps its acceleration by IDM against
/// the virtual vehicle. `mainline` and `accels` are aligned,
/// leading-first. Identity when candidate is null.
void cooperative_adjust(std::span<const VehicleState> mainline,
                        const VehicleState* candidate,
                        const RampGeometry& geom, const IdmParams& p,
                        std::span<double> accels);

/// Free-flow equilibrium entry speed for a given demand: the highest
/// speed at which the mean arrival spacing still covers the IDM
/// equilibrium spacing; capacity speed when demand exceeds capacity.
double equilibrium_entry_speed(double flow_veh_per_hr, const IdmParams& p,
                               double vehicle_length);

class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);

  void step();
  SimResult run();

  double clock() const { return clock_; }
  std::vector<VehicleState> snapshot() const;
  const std::vector<std::string>& event_log() const { return events_; }
  const std::vector<GuidanceCommand>& command_log() const { return commands_; }
  std::size_t ramp_backlog() const;

 private:
  struct Vehicle {
    VehicleState state;
    double fuel_l = 0.0;
    bool stalled = false;  // reached the ramp end ineligible at least once
    double wall_wait_s = 0.0;  // time spent stopped at the ramp end
    std::optional<double> advised_accel;  // latched guidance advice cap
    std::vector<TrajectorySample> trace;
  };

  double uniform();
  void spawn();
  void insert_from_queues();
  void run_guidance();
  void compute_accels();
  void integrate();
  void execute_lane_change();
  void accrue_fuel();
  void remove_exited();
  void check_no_overlap();
  void record_traces();
  void update_replay();

  std::vector<VehicleState> combined_mainline() const;
  const VehicleState* merge_candidate_state() const;

  ScenarioConfig cfg_;
  MergeCriteria criteria_;
  IdmParams main_params_;   // merging / guided driving, full mainline limit
  IdmParams outer_params_;  // outer-lane cruise pace
  std::mt19937_64 rng_;
  double clock_ = 0.0;
  std::uint64_t step_index_ = 0;
  std::uint64_t next_id_ = 1;
  std::uint64_t steps_per_guidance_ = 10;

  std::vector<Vehicle> mainline_;  // leading first (descending position)
  std::vector<Vehicle> ramp_;     // leading first
  std::vector<VehicleState> replay_;  // active replay vehicles this step
  std::vector<TrajectoryRecord> replay_records_;
  std::size_t mainline_queue_ = 0;
  std::size_t ramp_queue_ = 0;
  double mainline_entry_speed_ = 0.0;
  double ramp_entry_speed_ = 0.0;

  std::optional<GuidanceCommand> latched_;
  std::unordered_map<VehicleId, VehicleId> aims_;  // ramp vehicle -> aimed void front
  std::vector<double> mainline_accels_;
  std::vector<double> ramp_accels_;

  std::uint64_t spawned_ = 0;
  std::uint64_t exited_ = 0;
  std::vector<double> merge_speeds_;
  std::uint64_t merge_failures_ = 0;
  double fuel_total_ = 0.0;
  double fuel_ramp_ = 0.0;  // ramp-origin share incl. ramp entry queue
  std::vector<double> backlog_samples_;
  std::vector<std::string> events_;
  std::vector<GuidanceCommand> commands_;
  std::vector<TrajectoryRecord> finished_traces_;
};

SimResult run_scenario(const ScenarioConfig& cfg);

}  // namespace mergesim
