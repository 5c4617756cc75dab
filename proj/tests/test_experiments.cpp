#include <doctest.h>

#include <sstream>

#include "mergesim/experiments.hpp"

using namespace mergesim;

namespace {

SweepSpec tiny_spec() {
  SweepSpec spec;
  spec.base.duration = 180.0;
  spec.base.warmup = 30.0;
  spec.base.mainline_flow = 1200.0;
  spec.base.ramp_flow = 300.0;
  spec.seeds = 2;
  spec.axes.ramp_flow = {200.0, 400.0};
  spec.axes.cooperative = {false, true};
  return spec;
}

}  // namespace

TEST_CASE("fuel saving ratio") {
  CHECK(fuel_saving(100.0, 80.0) == doctest::Approx(0.20));
  CHECK(fuel_saving(50.0, 50.0) == doctest::Approx(0.0));
  CHECK(fuel_saving(50.0, 60.0) == doctest::Approx(-0.20));
  CHECK_THROWS_AS(fuel_saving(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(fuel_saving(-1.0, 1.0), std::domain_error);
}

TEST_CASE("cell enumeration is a Cartesian product over the set axes") {
  const SweepSpec spec = tiny_spec();
  const auto cells = enumerate_cells(spec);
  REQUIRE(cells.size() == 4);
  // Unset axes carry the base values into every cell.
  for (const auto& c : cells) {
    CHECK(c.mainline_flow == 1200.0);
    CHECK(c.r2_length == spec.base.geometry.len_r2);
  }
  CHECK(cells[0].ramp_flow == 200.0);
  CHECK(cells[0].cooperative == false);
  CHECK(cells[3].ramp_flow == 400.0);
  CHECK(cells[3].cooperative == true);

  const ScenarioConfig cfg = apply_cell(spec.base, cells[3]);
  CHECK(cfg.ramp_flow == 400.0);
  CHECK(cfg.cooperative == true);
  CHECK(cfg.duration == spec.base.duration);

  SweepSpec empty = spec;
  empty.axes = {};
  CHECK(enumerate_cells(empty).size() == 1);
}

TEST_CASE("sweep pairs seeds and is independent of the job count") {
  const SweepSpec spec = tiny_spec();
  const auto rows1 = run_sweep(spec, 1);
  REQUIRE(rows1.size() == 4);
  for (const auto& row : rows1) {
    CHECK(static_cast<int>(row.savings.size()) + row.failed_runs == spec.seeds);
    CHECK(row.failed_runs == 0);
    CHECK(row.mean_baseline_fuel > 0.0);
    CHECK(row.mean_treated_fuel > 0.0);
    CHECK(row.p5_saving <= row.mean_saving);
    CHECK(row.mean_saving <= row.p95_saving);
  }

  const auto rows2 = run_sweep(spec, 2);
  REQUIRE(rows2.size() == rows1.size());
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].savings == rows2[i].savings);
    CHECK(rows1[i].mean_saving == rows2[i].mean_saving);
  }
}

TEST_CASE("csv emission is byte-stable") {
  const SweepSpec spec = tiny_spec();
  const auto rows = run_sweep(spec, 1);
  std::ostringstream a, b;
  emit_csv(rows, a);
  emit_csv(rows, b);
  CHECK(a.str() == b.str());

  std::istringstream in(a.str());
  std::string header;
  std::getline(in, header);
  CHECK(header.find("ramp_flow") != std::string::npos);
  CHECK(header.find("mean_saving") != std::string::npos);
  CHECK(header.find("failed_runs") != std::string::npos);
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) ++lines;
  }
  CHECK(lines == static_cast<int>(rows.size()));
}

TEST_CASE("svg plot carries the axis and units") {
  const SweepSpec spec = tiny_spec();
  const auto rows = run_sweep(spec, 1);
  std::ostringstream out;
  emit_svg_plot(rows, spec, out);
  const std::string svg = out.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("veh/hr/ln") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}
