#include "mergesim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace mergesim {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

double fuel_saving(double baseline_l, double treated_l) {
  if (baseline_l <= 0.0) {
    throw std::domain_error("fuel_saving: baseline must be positive");
  }
  return 1.0 - treated_l / baseline_l;
}

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec) {
  const auto axis = [](const std::vector<double>& a, double base) {
    return a.empty() ? std::vector<double>{base} : a;
  };
  const std::vector<double> ramp = axis(spec.axes.ramp_flow, spec.base.ramp_flow);
  const std::vector<double> main = axis(spec.axes.mainline_flow, spec.base.mainline_flow);
  const std::vector<double> r2 = axis(spec.axes.r2_length, spec.base.geometry.len_r2);
  const std::vector<double> entry =
      axis(spec.axes.r2_entry_speed, spec.base.effective_r2_entry_speed());
  const std::vector<bool> coop = spec.axes.cooperative.empty()
                                     ? std::vector<bool>{spec.base.cooperative}
                                     : spec.axes.cooperative;
  std::vector<SweepCell> cells;
  for (double rf : ramp)
    for (double mf : main)
      for (double r2len : r2)
        for (double es : entry)
          for (bool c : coop) {
            cells.push_back(SweepCell{rf, mf, r2len, es, c});
          }
  return cells;
}

ScenarioConfig apply_cell(const ScenarioConfig& base, const SweepCell& cell) {
  ScenarioConfig cfg = base;
  cfg.ramp_flow = cell.ramp_flow;
  cfg.mainline_flow = cell.mainline_flow;
  cfg.geometry.len_r2 = cell.r2_length;
  cfg.r2_entry_speed = cell.r2_entry_speed;
  cfg.cooperative = cell.cooperative;
  return cfg;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int jobs) {
  if (spec.seeds < 1) throw std::domain_error("run_sweep: need at least one seed");
  const std::vector<SweepCell> cells = enumerate_cells(spec);

  struct PairOutcome {
    bool failed = false;
    double baseline_fuel = 0.0;
    double treated_fuel = 0.0;
    double baseline_backlog_mid = 0.0;
    double baseline_backlog_end = 0.0;
    double treated_backlog_end = 0.0;
  };
  const std::size_t n_pairs = cells.size() * static_cast<std::size_t>(spec.seeds);
  std::vector<PairOutcome> outcomes(n_pairs);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_pairs) return;
      const SweepCell& cell = cells[task / static_cast<std::size_t>(spec.seeds)];
      const std::uint64_t seed =
          static_cast<std::uint64_t>(task % static_cast<std::size_t>(spec.seeds)) + 1;
      ScenarioConfig cfg = apply_cell(spec.base, cell);
      cfg.seed = seed;
      PairOutcome out;
      try {
        cfg.guidance_enabled = false;
        const SimResult baseline = run_scenario(cfg);
        cfg.guidance_enabled = true;
        const SimResult treated = run_scenario(cfg);
        out.baseline_fuel = baseline.total_fuel_l;
        out.treated_fuel = treated.total_fuel_l;
        out.baseline_backlog_mid = baseline.backlog_mid();
        out.baseline_backlog_end = baseline.backlog_end();
        out.treated_backlog_end = treated.backlog_end();
      } catch (const CollisionError&) {
        out.failed = true;
      }
      outcomes[task] = out;
    }
  };

  const int n_threads = std::max(1, jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<SweepRow> rows;
  rows.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SweepRow row;
    row.cell = cells[c];
    std::vector<double> base_fuel, treat_fuel, bmid, bend, tend;
    for (int s = 0; s < spec.seeds; ++s) {
      const PairOutcome& out =
          outcomes[c * static_cast<std::size_t>(spec.seeds) + static_cast<std::size_t>(s)];
      if (out.failed) {
        ++row.failed_runs;
        continue;
      }
      base_fuel.push_back(out.baseline_fuel);
      treat_fuel.push_back(out.treated_fuel);
      bmid.push_back(out.baseline_backlog_mid);
      bend.push_back(out.baseline_backlog_end);
      tend.push_back(out.treated_backlog_end);
      row.savings.push_back(fuel_saving(out.baseline_fuel, out.treated_fuel));
    }
    row.mean_baseline_fuel = mean(base_fuel);
    row.mean_treated_fuel = mean(treat_fuel);
    row.mean_saving = mean(row.savings);
    row.p5_saving = percentile(row.savings, 0.05);
    row.p95_saving = percentile(row.savings, 0.95);
    row.mean_baseline_backlog_mid = mean(bmid);
    row.mean_baseline_backlog_end = mean(bend);
    row.mean_treated_backlog_end = mean(tend);
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "ramp_flow_veh_hr_ln,mainline_flow_veh_hr_ln,r2_length_m,"
         "r2_entry_speed_mps,cooperative,seeds,mean_baseline_fuel_l,"
         "mean_treated_fuel_l,mean_saving,p5_saving,p95_saving,"
         "mean_baseline_backlog_mid,mean_baseline_backlog_end,"
         "mean_treated_backlog_end,failed_runs\n";
  for (const SweepRow& r : rows) {
    out << fmt(r.cell.ramp_flow) << ',' << fmt(r.cell.mainline_flow) << ','
        << fmt(r.cell.r2_length) << ',' << fmt(r.cell.r2_entry_speed) << ','
        << (r.cell.cooperative ? 1 : 0) << ',' << r.savings.size() << ','
        << fmt(r.mean_baseline_fuel) << ',' << fmt(r.mean_treated_fuel) << ','
        << fmt(r.mean_saving) << ',' << fmt(r.p5_saving) << ','
        << fmt(r.p95_saving) << ',' << fmt(r.mean_baseline_backlog_mid) << ','
        << fmt(r.mean_baseline_backlog_end) << ','
        << fmt(r.mean_treated_backlog_end) << ',' << r.failed_runs << "\n";
  }
}

namespace {

struct AxisPick {
  std::string label;
  double SweepCell::*member = nullptr;
};

AxisPick pick_axis(const SweepSpec& spec) {
  if (spec.axes.ramp_flow.size() > 1) {
    return {"ramp flow (veh/hr/ln)", &SweepCell::ramp_flow};
  }
  if (spec.axes.mainline_flow.size() > 1) {
    return {"mainline flow (veh/hr/ln)", &SweepCell::mainline_flow};
  }
  if (spec.axes.r2_length.size() > 1) {
    return {"R2 length (m)", &SweepCell::r2_length};
  }
  if (spec.axes.r2_entry_speed.size() > 1) {
    return {"R2 entry speed (m/s)", &SweepCell::r2_entry_speed};
  }
  return {"ramp flow (veh/hr/ln)", &SweepCell::ramp_flow};
}

std::string series_key(const SweepCell& cell, double SweepCell::*x) {
  std::ostringstream key;
  if (x != &SweepCell::ramp_flow) key << "ramp=" << cell.ramp_flow << " ";
  if (x != &SweepCell::mainline_flow) key << "main=" << cell.mainline_flow << " ";
  if (x != &SweepCell::r2_length) key << "R2=" << cell.r2_length << "m ";
  if (x != &SweepCell::r2_entry_speed) key << "v0=" << cell.r2_entry_speed << " ";
  key << (cell.cooperative ? "coop" : "non-coop");
  return key.str();
}

}  // namespace

void emit_svg_plot(const std::vector<SweepRow>& rows, const SweepSpec& spec,
                   std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("emit_svg_plot: empty table");
  const AxisPick axis = pick_axis(spec);

  struct Point {
    double x, mean, p5, p95;
  };
  std::vector<std::string> keys;
  std::vector<std::vector<Point>> series;
  for (const SweepRow& r : rows) {
    const std::string key = series_key(r.cell, axis.member);
    std::size_t idx = keys.size();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (keys[i] == key) idx = i;
    }
    if (idx == keys.size()) {
      keys.push_back(key);
      series.emplace_back();
    }
    series[idx].push_back(
        Point{r.cell.*axis.member, r.mean_saving, r.p5_saving, r.p95_saving});
  }
  for (auto& s : series) {
    std::sort(s.begin(), s.end(),
              [](const Point& a, const Point& b) { return a.x < b.x; });
  }

  double x_min = 1e300, x_max = -1e300, y_min = 0.0, y_max = 0.0;
  for (const auto& s : series) {
    for (const Point& p : s) {
      x_min = std::min(x_min, p.x);
      x_max = std::max(x_max, p.x);
      y_min = std::min({y_min, p.p5, p.mean});
      y_max = std::max({y_max, p.p95, p.mean});
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  y_max += 0.05;
  y_min -= 0.05;

  const double w = 720, h = 480, ml = 70, mr = 20, mt = 30, mb = 55;
  const auto sx = [&](double x) {
    return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr);
  };
  const auto sy = [&](double y) {
    return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb);
  };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x_min + (x_max - x_min) * k / 5.0;
    const double yv = y_min + (y_max - y_min) * k / 5.0;
    out << "<text x=\"" << sx(xv) << "\" y=\"" << h - mb + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(std::round(xv))
        << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(yv) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">"
        << fmt(std::round(yv * 100.0) / 100.0) << "</text>\n";
  }
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" font-size=\"13\" text-anchor=\"middle\">" << axis.label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + h - mb) / 2 << ")\">mean fuel saving (fraction)</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = colors[i % 6];
    const auto& s = series[i];
    if (s.size() > 1) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" "
          << "stroke=\"none\" points=\"";
      for (const Point& p : s) out << sx(p.x) << ',' << sy(p.p95) << ' ';
      for (auto it = s.rbegin(); it != s.rend(); ++it) {
        out << sx(it->x) << ',' << sy(it->p5) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (const Point& p : s) out << sx(p.x) << ',' << sy(p.mean) << ' ';
    out << "\"/>\n";
    for (const Point& p : s) {
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.mean)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << w - mr - 4 << "\" y=\"" << mt + 16 * (i + 1)
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">"
        << keys[i] << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_outputs(const std::vector<SweepRow>& rows, const SweepSpec& spec,
                  const std::string& out_dir) {
  if (rows.empty()) throw std::invalid_argument("emit_outputs: empty table");
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir + "/sweep.csv");
    if (!csv) throw std::runtime_error("cannot write " + out_dir + "/sweep.csv");
    emit_csv(rows, csv);
  }
  {
    std::ofstream svg(out_dir + "/sweep.svg");
    if (!svg) throw std::runtime_error("cannot write " + out_dir + "/sweep.svg");
    emit_svg_plot(rows, spec, svg);
  }
}

}  // namespace mergesim
