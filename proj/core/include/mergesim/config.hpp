#pragma once

#include <string>

#include "mergesim/experiments.hpp"
#include "mergesim/sim.hpp"

#include <json.hpp>

namespace mergesim {

/// Scenario configuration file format. Every key is optional; missing
/// keys keep the built-in defaults. Sections: geometry, idm, fuel,
/// flows, flags, run, seed.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);

/// Sweep specification: { "base": <scenario>, "seeds": N,
/// "axes": { "ramp_flow": [...], "mainline_flow": [...],
///           "r2_length": [...], "r2_entry_speed": [...],
///           "cooperative": [...] } }.
/// The MERGE_ADVISOR_SEEDS environment variable overrides the seed count.
SweepSpec sweep_from_json(const nlohmann::json& j);
SweepSpec load_sweep(const std::string& path);

}  // namespace mergesim
