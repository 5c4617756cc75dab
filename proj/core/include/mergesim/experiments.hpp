#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mergesim/sim.hpp"

namespace mergesim {

/// Sweep axes; an empty list means "keep the base config value".
struct SweepAxes {
  std::vector<double> ramp_flow;
  std::vector<double> mainline_flow;
  std::vector<double> r2_length;
  std::vector<double> r2_entry_speed;
  std::vector<bool> cooperative;
};

/// Every cell runs a seed-matched baseline (guidance off) / treatment
/// (guidance on) pair per seed, so the fuel-saving ratio compares
/// like-for-like arrival draws.
struct SweepSpec {
  SweepAxes axes;
  int seeds = 100;  // seed values 1..seeds
  ScenarioConfig base;
};

struct SweepCell {
  double ramp_flow = 0.0;
  double mainline_flow = 0.0;
  double r2_length = 0.0;
  double r2_entry_speed = 0.0;
  bool cooperative = false;
};

struct SweepRow {
  SweepCell cell;
  std::vector<double> savings;  // per matched seed pair, collision pairs excluded
  double mean_baseline_fuel = 0.0;
  double mean_treated_fuel = 0.0;
  double mean_saving = 0.0;
  double p5_saving = 0.0;
  double p95_saving = 0.0;
  double mean_baseline_backlog_mid = 0.0;
  double mean_baseline_backlog_end = 0.0;
  double mean_treated_backlog_end = 0.0;
  int failed_runs = 0;  // collision-aborted runs in this cell
};

/// Fuel-saving ratio 1 - treated/baseline. Negative values mean the
/// treatment burned more fuel than the baseline.
double fuel_saving(double baseline_l, double treated_l);

/// Cartesian product of the axes, each cell over all seeds, baseline
/// and treatment seed-matched. Row order and content are independent
/// of execution order and of the job count.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, int jobs = 1);

void emit_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Self-contained SVG line plot of mean saving against the first axis
/// with more than one value, with the 5th/95th percentile band.
void emit_svg_plot(const std::vector<SweepRow>& rows, const SweepSpec& spec,
                   std::ostream& out);

/// Writes <dir>/sweep.csv and <dir>/sweep.svg.
void emit_outputs(const std::vector<SweepRow>& rows, const SweepSpec& spec,
                  const std::string& out_dir);

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec);
ScenarioConfig apply_cell(const ScenarioConfig& base, const SweepCell& cell);

}  // namespace mergesim
