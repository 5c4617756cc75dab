// Acceptance gate: one line per criterion, exit code = number of failures.
// MERGE_ADVISOR_SEEDS overrides the 100-seed default for the sweep grids.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mergesim/experiments.hpp"
#include "mergesim/wavelet.hpp"

using namespace mergesim;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s — %s\n", pass ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  if (!pass) ++failures;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

int seed_count() {
  if (const char* env = std::getenv("MERGE_ADVISOR_SEEDS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 100;
}

int job_count() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

// --- criterion 1: perfect reconstruction -----------------------------------

void check_perfect_reconstruction() {
  const double start = now_s();
  const std::vector<std::size_t> lengths = {64, 100, 256, 1023};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 10.0);
  double max_err = 0.0;
  WaveletPipelineConfig cfg;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = lengths[trial % lengths.size()];
    std::vector<double> x(n);
    for (double& v : x) v = gauss(rng);
    const std::vector<double> back = idwt(dwt(x, cfg), cfg);
    for (std::size_t i = 0; i < n; ++i) {
      max_err = std::max(max_err, std::abs(back[i] - x[i]));
    }
  }
  const double elapsed = now_s() - start;
  report("1. wavelet perfect reconstruction",
         max_err < 1e-9 && elapsed < 10.0,
         "max error " + fmt(max_err) + ", " + fmt(elapsed) + " s");
}

// --- criterion 2: denoising efficacy ---------------------------------------

// Car-following trajectory: IDM follower behind a leader with a slowly
// varying speed, sampled at 1 s for 256 samples.
TrajectoryRecord idm_trajectory(std::uint64_t seed) {
  IdmParams p = IdmParams{}.with_v_max(33.33);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.28);
  const double ph1 = phase(rng), ph2 = phase(rng);

  const double dt = 0.1;
  double lead_x = 80.0, x = 0.0, v = 15.0;
  TrajectoryRecord rec;
  rec.vehicle_id = "f" + std::to_string(seed);
  rec.sample_interval_s = 1.0;
  for (int step = 0; step <= 2560; ++step) {
    const double t = step * dt;
    if (step % 10 == 0) {
      rec.samples.push_back({t, x, std::nullopt});
      if (rec.samples.size() == 256) break;
    }
    const double lead_v =
        15.0 + 5.0 * std::sin(0.05 * t + ph1) + 3.0 * std::sin(0.013 * t + ph2);
    const double a = acceleration(v, lead_x - x - 5.0, v - lead_v, p);
    v = std::max(0.0, v + a * dt);
    x += v * dt;
    lead_x += lead_v * dt;
  }
  return rec;
}

void check_denoise_efficacy() {
  WaveletPipelineConfig cfg;
  int improved = 0;
  double mean_reduction = 0.0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    const TrajectoryRecord clean = idm_trajectory(1000 + i);
    NoiseSpec spec;
    spec.gaussian_sigma = 1.0;
    spec.seed = 5000 + i;
    const TrajectoryRecord noisy = inject_noise(clean, spec);
    TrajectoryRecord denoised = noisy;
    const std::vector<double> out = denoise(noisy.positions(), cfg);
    for (std::size_t k = 0; k < out.size(); ++k) {
      denoised.samples[k].position_m = out[k];
    }
    const double before = rmse(noisy, clean);
    const double after = rmse(denoised, clean);
    if (after < before) ++improved;
    mean_reduction += 1.0 - after / before;
  }
  mean_reduction /= trials;
  report("2. denoising efficacy",
         improved >= 95 && mean_reduction >= 0.30,
         std::to_string(improved) + "/100 improved, mean RMSE reduction " +
             fmt(100.0 * mean_reduction) + "%");
}

// --- criterion 3: threshold and shrink unit values -------------------------

void check_unit_values() {
  WaveletPipelineConfig cfg;
  double worst = 0.0;
  const auto miss = [&](double got, double want) {
    worst = std::max(worst, std::abs(got - want));
  };
  miss(threshold_level(1, 3, 1.0, 1024, cfg), 3.723297411059034);
  miss(threshold_level(2, 3, 1.0, 1024, cfg), 3.3890913559440805);
  miss(threshold_level(1, 3, 0.0, 1024, cfg), 0.0);
  miss(shrink(2.0, 1.0, 0.5), 1.5);
  miss(shrink(0.5, 1.0, 0.5), 0.0);
  miss(shrink(-2.0, 1.0, 0.5), -1.5);
  const std::vector<double> band = {1.0, -1.0, 2.0, -2.0, 3.0};
  miss(noise_sigma(band), 2.965159377316531);
  report("3. threshold/shrink unit values", worst < 1e-9,
         "max deviation " + fmt(worst));
}

// --- criterion 4: platoon equilibrium --------------------------------------

double equilibrium_gap_bisect(double v, const IdmParams& p) {
  double lo = 1e-6, hi = 1e7;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (acceleration(v, mid, 0.0, p) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

void check_platoon_equilibrium() {
  const IdmParams p = IdmParams{}.with_v_max(33.33);
  bool ok = true;
  std::string detail;
  for (double v_lead : {10.0, 20.0, 25.0}) {
    const double target = equilibrium_gap_bisect(v_lead, p);
    double gap = 2.0 * target, v = 0.0;
    const double dt = 0.1;
    for (int step = 0; step < 3000; ++step) {
      const double a = acceleration(v, gap, v - v_lead, p);
      v = std::max(0.0, v + a * dt);
      gap += (v_lead - v) * dt;
    }
    const double rel = std::abs(gap - target) / target;
    if (rel > 0.01) ok = false;
    if (!detail.empty()) detail += ", ";
    detail += "v=" + fmt(v_lead) + ": " + fmt(100.0 * rel) + "%";
  }
  report("4. platoon converges to the equilibrium gap", ok, detail);
}

// --- criteria 5-10: sweep grids --------------------------------------------

SweepSpec grid_ramp_flow() {
  SweepSpec spec;
  spec.seeds = seed_count();
  spec.base.mainline_flow = 2000.0;
  spec.axes.ramp_flow = {100, 200, 300, 400, 500, 600, 700};
  spec.axes.cooperative = {false, true};
  return spec;
}

SweepSpec grid_r2_length() {
  SweepSpec spec;
  spec.seeds = seed_count();
  spec.base.ramp_flow = 200.0;
  spec.axes.mainline_flow = {2000, 2200, 2400, 2600, 2800, 3000};
  spec.axes.r2_length = {100.0, 50.0};
  return spec;
}

const SweepRow* find_row(const std::vector<SweepRow>& rows, double ramp,
                         double main, double r2, bool coop) {
  for (const auto& r : rows) {
    if (r.cell.ramp_flow == ramp && r.cell.mainline_flow == main &&
        r.cell.r2_length == r2 && r.cell.cooperative == coop) {
      return &r;
    }
  }
  return nullptr;
}

void check_sweeps() {
  const double start = now_s();
  const SweepSpec spec_a = grid_ramp_flow();
  const SweepSpec spec_b = grid_r2_length();
  const auto rows_a = run_sweep(spec_a, job_count());
  const auto rows_b = run_sweep(spec_b, job_count());
  const double elapsed = now_s() - start;
  std::printf("       (sweeps: %zu + %zu cells, %d seeds, %.0f s)\n",
              rows_a.size(), rows_b.size(), spec_a.seeds, elapsed);

  // 5. zero collisions anywhere.
  int failed_runs = 0;
  for (const auto& r : rows_a) failed_runs += r.failed_runs;
  for (const auto& r : rows_b) failed_runs += r.failed_runs;
  report("5. zero collisions across both grids", failed_runs == 0,
         std::to_string(failed_runs) + " collision-aborted runs");

  // 6. determinism: identical result rows and CSV bytes on repetition.
  {
    ScenarioConfig cfg = spec_a.base;
    cfg.ramp_flow = 400.0;
    cfg.seed = 17;
    const std::string r1 = run_scenario(cfg).csv_row();
    const std::string r2 = run_scenario(cfg).csv_row();
    const std::string r3 = run_scenario(cfg).csv_row();
    std::ostringstream c1, c2;
    emit_csv(rows_a, c1);
    emit_csv(rows_a, c2);
    report("6. repeated runs are byte-identical",
           r1 == r2 && r2 == r3 && c1.str() == c2.str(),
           r1 == r3 ? "3/3 identical rows, stable CSV" : "rows diverged");
  }

  // 7. non-cooperative saving positive, non-decreasing 100..600, low
  //    density in [5%, 40%].
  {
    std::vector<double> means;
    for (double f : spec_a.axes.ramp_flow) {
      const SweepRow* r = find_row(rows_a, f, 2000.0, 100.0, false);
      means.push_back(r ? r->mean_saving : -1.0);
    }
    bool positive = true, nondecreasing = true;
    for (std::size_t i = 0; i < means.size(); ++i) {
      if (means[i] <= 0.0) positive = false;
      if (i > 0 && i < 6 && means[i] + 1e-12 < means[i - 1]) {
        nondecreasing = false;
      }
    }
    const bool low_band = means.front() >= 0.05 && means.front() <= 0.40;
    std::string detail = "means";
    for (double m : means) detail += " " + fmt(100.0 * m) + "%";
    report("7. non-cooperative saving grows with ramp flow",
           positive && nondecreasing && low_band, detail);
  }

  // 8. cooperative saving stays in a stable positive band up to 600.
  {
    bool ok = true;
    std::string detail = "means";
    for (double f : {100.0, 200.0, 300.0, 400.0, 500.0, 600.0}) {
      const SweepRow* r = find_row(rows_a, f, 2000.0, 100.0, true);
      const double m = r ? r->mean_saving : -1.0;
      if (m < 0.03 || m > 0.35) ok = false;
      detail += " " + fmt(100.0 * m) + "%";
    }
    report("8. cooperative saving in the stable band", ok, detail);
  }

  // 9. shortening R2 to 50 m never hurts at heavy mainline flow.
  {
    bool ok = true;
    std::string detail;
    for (double f : spec_b.axes.mainline_flow) {
      const SweepRow* r100 = find_row(rows_b, 200.0, f, 100.0, false);
      const SweepRow* r50 = find_row(rows_b, 200.0, f, 50.0, false);
      const double d = (r50 ? r50->mean_saving : -1.0) -
                       (r100 ? r100->mean_saving : 1.0);
      if (d < 0.0) ok = false;
      if (!detail.empty()) detail += ", ";
      detail += fmt(f) + ": +" + fmt(100.0 * d) + "pp";
    }
    report("9. shorter acceleration stretch helps at heavy flow", ok, detail);
  }

  // 10. ungoverned baseline congests at ramp flow >= 400: the ramp
  //     backlog keeps growing through the second half of the run.
  {
    bool ok = true;
    std::string detail;
    for (double f : {400.0, 500.0, 600.0, 700.0}) {
      const SweepRow* r = find_row(rows_a, f, 2000.0, 100.0, false);
      const double mid = r ? r->mean_baseline_backlog_mid : 1e9;
      const double end = r ? r->mean_baseline_backlog_end : 0.0;
      if (!(end >= 1.5 * mid && end >= 10.0)) ok = false;
      if (!detail.empty()) detail += ", ";
      detail += fmt(f) + ": " + fmt(mid) + "->" + fmt(end);
    }
    report("10. baseline ramp queue grows without bound", ok, detail);
  }
}

}  // namespace

int main() {
  check_perfect_reconstruction();
  check_denoise_efficacy();
  check_unit_values();
  check_platoon_equilibrium();
  check_sweeps();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
