// merge-advisor: scenario simulation, fuel-saving sweeps and trajectory
// denoising for the on-ramp merging speed-guidance pipeline.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mergesim/config.hpp"
#include "mergesim/experiments.hpp"
#include "mergesim/sim.hpp"
#include "mergesim/trajectory_io.hpp"
#include "mergesim/wavelet.hpp"

namespace {

int cmd_simulate(const std::string& config_path, std::uint64_t seed,
                 bool seed_given, const std::string& replay,
                 const std::string& traj_out, const std::string& commands_out) {
  mergesim::ScenarioConfig cfg =
      config_path.empty() ? mergesim::ScenarioConfig{}
                          : mergesim::load_scenario(config_path);
  if (seed_given) cfg.seed = seed;
  if (!replay.empty()) cfg.replay_path = replay;
  if (!traj_out.empty()) cfg.record_trajectories = true;

  mergesim::Simulation sim(cfg);
  const mergesim::SimResult result = sim.run();

  std::cout << mergesim::SimResult::csv_header() << "\n"
            << result.csv_row() << "\n";
  if (!traj_out.empty()) {
    mergesim::save_trajectory_csv(result.trajectories, traj_out);
  }
  if (!commands_out.empty()) {
    std::ofstream out(commands_out);
    if (!out) throw std::runtime_error("cannot write " + commands_out);
    out << "time_s,target_id,leader_id,accel_mps2,speed_mps\n";
    for (const mergesim::GuidanceCommand& c : sim.command_log()) {
      out << c.issued_at << ',' << c.target_id << ','
          << (c.leader_id ? std::to_string(*c.leader_id) : std::string("-"))
          << ',' << c.recommended_accel << ',' << c.recommended_speed << "\n";
    }
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir,
              int jobs) {
  const mergesim::SweepSpec spec = mergesim::load_sweep(spec_path);
  const std::vector<mergesim::SweepRow> rows = mergesim::run_sweep(spec, jobs);
  mergesim::emit_outputs(rows, spec, out_dir);
  int failed = 0;
  for (const mergesim::SweepRow& r : rows) failed += r.failed_runs;
  if (failed > 0) {
    std::cerr << "sweep: " << failed << " run(s) aborted on collision\n";
    return 1;
  }
  std::cout << "wrote " << out_dir << "/sweep.csv and " << out_dir
            << "/sweep.svg (" << rows.size() << " cells)\n";
  return 0;
}

int cmd_denoise(const std::string& in_path, const std::string& out_path,
                int levels, double alpha, const std::string& rules) {
  mergesim::WaveletPipelineConfig cfg;
  cfg.levels = levels;
  cfg.alpha = alpha;
  if (rules == "log-finest") {
    cfg.finest_rule = mergesim::ThresholdRule::DivLogLevel;
    cfg.coarser_rule = mergesim::ThresholdRule::DivSqrtLevel;
  } else if (rules != "sqrt-finest") {
    throw CLI::ValidationError("--rules must be sqrt-finest or log-finest");
  }

  std::vector<mergesim::TrajectoryRecord> records =
      mergesim::load_trajectory_csv(in_path);
  for (mergesim::TrajectoryRecord& rec : records) {
    const std::vector<double> clean = mergesim::denoise(rec.positions(), cfg);
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
      rec.samples[i].position_m = clean[i];
    }
    if (rec.samples.size() >= 2) {
      const std::vector<double> speeds = mergesim::speed_profile(rec);
      for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        rec.samples[i].speed_mps = speeds[i];
      }
    }
  }
  mergesim::save_trajectory_csv(records, out_path);
  return 0;
}

int cmd_noise(const std::string& in_path, const std::string& out_path,
              const mergesim::NoiseSpec& spec) {
  std::vector<mergesim::TrajectoryRecord> records =
      mergesim::load_trajectory_csv(in_path);
  for (mergesim::TrajectoryRecord& rec : records) {
    rec = mergesim::inject_noise(rec, spec);
  }
  mergesim::save_trajectory_csv(records, out_path);
  return 0;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
  const auto a = mergesim::load_trajectory_csv(a_path);
  const auto b = mergesim::load_trajectory_csv(b_path);
  std::cout << "vehicle_id,rmse_m\n";
  for (const mergesim::TrajectoryRecord& ra : a) {
    for (const mergesim::TrajectoryRecord& rb : b) {
      if (ra.vehicle_id == rb.vehicle_id) {
        std::cout << ra.vehicle_id << ',' << mergesim::rmse(ra, rb) << "\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"on-ramp merging speed-guidance simulator and trajectory denoiser"};
  app.require_subcommand(1);

  std::string config_path, replay, traj_out, commands_out;
  std::uint64_t seed = 1;
  auto* simulate = app.add_subcommand("simulate", "run one scenario");
  simulate->add_option("--config", config_path, "scenario JSON file");
  auto* seed_opt = simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--replay", replay, "mainline replay trajectory CSV");
  simulate->add_option("--traj-out", traj_out, "write 1 Hz trajectory dump CSV");
  simulate->add_option("--commands-out", commands_out, "write guidance command log CSV");

  std::string spec_path, out_dir = "sweep-out";
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run a fuel-saving sweep");
  sweep->add_option("--spec", spec_path, "sweep JSON file")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--jobs", jobs, "parallel worker threads");

  std::string den_in, den_out, rules = "sqrt-finest";
  int levels = 3;
  double alpha = 0.5;
  auto* denoise = app.add_subcommand("denoise", "wavelet-denoise trajectories");
  denoise->add_option("--in", den_in, "input trajectory CSV")->required();
  denoise->add_option("--out", den_out, "output trajectory CSV")->required();
  denoise->add_option("--levels", levels, "decomposition levels");
  denoise->add_option("--alpha", alpha, "shrink slope in [0,1]");
  denoise->add_option("--rules", rules, "threshold rule assignment: sqrt-finest|log-finest");

  std::string noise_in, noise_out;
  mergesim::NoiseSpec noise_spec;
  auto* noise = app.add_subcommand("noise", "inject synthetic measurement noise");
  noise->add_option("--in", noise_in, "input trajectory CSV")->required();
  noise->add_option("--out", noise_out, "output trajectory CSV")->required();
  noise->add_option("--sigma", noise_spec.gaussian_sigma, "gaussian sigma (m)");
  noise->add_option("--impulse-prob", noise_spec.impulse_probability, "impulse probability per sample");
  noise->add_option("--impulse-mag", noise_spec.impulse_magnitude, "impulse magnitude (m)");
  noise->add_option("--seed", noise_spec.seed, "noise seed");

  std::string met_a, met_b;
  auto* metrics = app.add_subcommand("metrics", "positional RMSE between two trajectory files");
  metrics->add_option("--a", met_a, "first trajectory CSV")->required();
  metrics->add_option("--b", met_b, "second trajectory CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return cmd_simulate(config_path, seed, seed_opt->count() > 0, replay,
                          traj_out, commands_out);
    }
    if (sweep->parsed()) return cmd_sweep(spec_path, out_dir, jobs);
    if (denoise->parsed()) return cmd_denoise(den_in, den_out, levels, alpha, rules);
    if (noise->parsed()) return cmd_noise(noise_in, noise_out, noise_spec);
    if (metrics->parsed()) return cmd_metrics(met_a, met_b);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
