#include "mergesim/config.hpp"

#include <cstdlib>
#include <fstream>

namespace mergesim {

namespace {

template <typename T>
void get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

nlohmann::json section(const nlohmann::json& j, const char* key) {
  return j.contains(key) ? j.at(key) : nlohmann::json::object();
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;

  const nlohmann::json geom = section(j, "geometry");
  get(geom, "len_r1", cfg.geometry.len_r1);
  get(geom, "len_r2", cfg.geometry.len_r2);
  get(geom, "len_r3", cfg.geometry.len_r3);
  get(geom, "merge_point_x", cfg.geometry.merge_point_x);
  get(geom, "mainline_length", cfg.geometry.mainline_length);
  get(geom, "speed_limit_r1", cfg.geometry.speed_limit_r1);
  get(geom, "speed_limit_main", cfg.geometry.speed_limit_main);

  const nlohmann::json idm = section(j, "idm");
  get(idm, "a_max", cfg.idm.a_max);
  get(idm, "b_comf", cfg.idm.b_comf);
  get(idm, "v_max", cfg.idm.v_max);
  get(idm, "s_min", cfg.idm.s_min);
  get(idm, "t_headway", cfg.idm.t_headway);
  get(idm, "delta", cfg.idm.delta);
  get(idm, "b_hard", cfg.idm.b_hard);

  const nlohmann::json fuel = section(j, "fuel");
  get(fuel, "idle_rate", cfg.fuel.idle_rate);
  get(fuel, "efficiency", cfg.fuel.efficiency);
  get(fuel, "mass", cfg.fuel.mass);
  get(fuel, "rolling_coeff", cfg.fuel.rolling_coeff);
  get(fuel, "drag_area", cfg.fuel.drag_area);
  get(fuel, "air_density", cfg.fuel.air_density);
  get(fuel, "energy_density", cfg.fuel.energy_density);

  const nlohmann::json flows = section(j, "flows");
  get(flows, "mainline", cfg.mainline_flow);
  get(flows, "ramp", cfg.ramp_flow);

  const nlohmann::json flags = section(j, "flags");
  get(flags, "cooperative", cfg.cooperative);
  get(flags, "guidance", cfg.guidance_enabled);
  get(flags, "merge_check_follower", cfg.merge_check_follower);

  const nlohmann::json run = section(j, "run");
  get(run, "duration", cfg.duration);
  get(run, "warmup", cfg.warmup);
  get(run, "dt", cfg.dt);
  get(run, "guidance_interval", cfg.guidance_interval);
  get(run, "r2_entry_speed", cfg.r2_entry_speed);
  get(run, "vehicle_length", cfg.vehicle_length);
  get(run, "replay", cfg.replay_path);
  get(run, "record_trajectories", cfg.record_trajectories);

  get(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["geometry"] = {{"len_r1", cfg.geometry.len_r1},
                   {"len_r2", cfg.geometry.len_r2},
                   {"len_r3", cfg.geometry.len_r3},
                   {"merge_point_x", cfg.geometry.merge_point_x},
                   {"mainline_length", cfg.geometry.mainline_length},
                   {"speed_limit_r1", cfg.geometry.speed_limit_r1},
                   {"speed_limit_main", cfg.geometry.speed_limit_main}};
  j["idm"] = {{"a_max", cfg.idm.a_max},     {"b_comf", cfg.idm.b_comf},
              {"v_max", cfg.idm.v_max},     {"s_min", cfg.idm.s_min},
              {"t_headway", cfg.idm.t_headway}, {"delta", cfg.idm.delta},
              {"b_hard", cfg.idm.b_hard}};
  j["fuel"] = {{"idle_rate", cfg.fuel.idle_rate},
               {"efficiency", cfg.fuel.efficiency},
               {"mass", cfg.fuel.mass},
               {"rolling_coeff", cfg.fuel.rolling_coeff},
               {"drag_area", cfg.fuel.drag_area},
               {"air_density", cfg.fuel.air_density},
               {"energy_density", cfg.fuel.energy_density}};
  j["flows"] = {{"mainline", cfg.mainline_flow}, {"ramp", cfg.ramp_flow}};
  j["flags"] = {{"cooperative", cfg.cooperative},
                {"guidance", cfg.guidance_enabled},
                {"merge_check_follower", cfg.merge_check_follower}};
  j["run"] = {{"duration", cfg.duration},
              {"warmup", cfg.warmup},
              {"dt", cfg.dt},
              {"guidance_interval", cfg.guidance_interval},
              {"r2_entry_speed", cfg.r2_entry_speed},
              {"vehicle_length", cfg.vehicle_length},
              {"replay", cfg.replay_path},
              {"record_trajectories", cfg.record_trajectories}};
  j["seed"] = cfg.seed;
  return j;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

SweepSpec sweep_from_json(const nlohmann::json& j) {
  SweepSpec spec;
  if (j.contains("base")) spec.base = scenario_from_json(j.at("base"));
  get(j, "seeds", spec.seeds);
  const nlohmann::json axes = section(j, "axes");
  get(axes, "ramp_flow", spec.axes.ramp_flow);
  get(axes, "mainline_flow", spec.axes.mainline_flow);
  get(axes, "r2_length", spec.axes.r2_length);
  get(axes, "r2_entry_speed", spec.axes.r2_entry_speed);
  get(axes, "cooperative", spec.axes.cooperative);
  if (const char* env = std::getenv("MERGE_ADVISOR_SEEDS")) {
    spec.seeds = std::atoi(env);
  }
  if (spec.seeds < 1) throw std::domain_error("sweep: seeds must be >= 1");
  return spec;
}

SweepSpec load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep file: " + path);
  nlohmann::json j;
  in >> j;
  return sweep_from_json(j);
}

}  // namespace mergesim
