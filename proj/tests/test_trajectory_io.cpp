#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mergesim/trajectory_io.hpp"

using namespace mergesim;

namespace {

TrajectoryRecord make_record(const std::string& id, std::size_t n, double dt,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jump(0.0, 3.0);
  TrajectoryRecord rec;
  rec.vehicle_id = id;
  rec.sample_interval_s = dt;
  double x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x += jump(rng);
    rec.samples.push_back({static_cast<double>(i) * dt, x, std::nullopt});
  }
  return rec;
}

}  // namespace

TEST_CASE("parse basics") {
  std::istringstream empty("vehicle_id,time_s,position_m\n");
  CHECK(parse_trajectory_csv(empty).empty());

  std::istringstream three(
      "vehicle_id,time_s,position_m\n"
      "v1,0,10\n"
      "v1,1,12\n"
      "v1,2,15\n");
  const auto records = parse_trajectory_csv(three);
  REQUIRE(records.size() == 1);
  CHECK(records[0].vehicle_id == "v1");
  REQUIRE(records[0].samples.size() == 3);
  CHECK(records[0].sample_interval_s == doctest::Approx(1.0));
  CHECK(records[0].samples[2].position_m == doctest::Approx(15.0));
}

TEST_CASE("parse rejects malformed input with line numbers") {
  std::istringstream dup(
      "vehicle_id,time_s,position_m\n"
      "v1,0,10\n"
      "v1,1,12\n"
      "v1,1,15\n");
  CHECK_THROWS_WITH_AS(parse_trajectory_csv(dup),
                       doctest::Contains("line 4"), CsvFormatError);

  std::istringstream bad(
      "vehicle_id,time_s,position_m\n"
      "v1,0,ten\n");
  CHECK_THROWS_WITH_AS(parse_trajectory_csv(bad),
                       doctest::Contains("line 2"), CsvFormatError);

  std::istringstream nonuniform(
      "vehicle_id,time_s,position_m\n"
      "v1,0,1\n"
      "v1,1,2\n"
      "v1,2.5,3\n");
  CHECK_THROWS_AS(parse_trajectory_csv(nonuniform), CsvFormatError);

  std::istringstream header("vehicle,time\n");
  CHECK_THROWS_AS(parse_trajectory_csv(header), CsvFormatError);
}

TEST_CASE("serialize then parse is the identity on valid records") {
  std::mt19937_64 rng(101);
  std::vector<TrajectoryRecord> records;
  records.push_back(make_record("a", 50, 1.0, rng));
  records.push_back(make_record("b", 30, 1.0, rng));

  std::ostringstream out;
  serialize_trajectory_csv(records, out);
  std::istringstream in(out.str());
  const auto back = parse_trajectory_csv(in);
  REQUIRE(back.size() == records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    CHECK(back[r].vehicle_id == records[r].vehicle_id);
    REQUIRE(back[r].samples.size() == records[r].samples.size());
    for (std::size_t i = 0; i < records[r].samples.size(); ++i) {
      CHECK(back[r].samples[i].time_s == records[r].samples[i].time_s);
      CHECK(back[r].samples[i].position_m == records[r].samples[i].position_m);
    }
  }
}

TEST_CASE("noise injection") {
  std::mt19937_64 rng(7);
  const TrajectoryRecord rec = make_record("v", 10000, 1.0, rng);

  NoiseSpec none;
  const TrajectoryRecord same = inject_noise(rec, none);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    CHECK(same.samples[i].position_m == rec.samples[i].position_m);
  }

  NoiseSpec spec;
  spec.gaussian_sigma = 1.0;
  spec.seed = 99;
  const TrajectoryRecord noisy = inject_noise(rec, spec);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    mean += noisy.samples[i].position_m - rec.samples[i].position_m;
  }
  mean /= static_cast<double>(rec.samples.size());
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const double d = noisy.samples[i].position_m - rec.samples[i].position_m - mean;
    var += d * d;
  }
  var /= static_cast<double>(rec.samples.size() - 1);
  CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(0.03));

  // Same seed, same output.
  const TrajectoryRecord again = inject_noise(rec, spec);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    CHECK(again.samples[i].position_m == noisy.samples[i].position_m);
  }
}

TEST_CASE("rmse") {
  std::mt19937_64 rng(13);
  const TrajectoryRecord a = make_record("v", 100, 1.0, rng);
  CHECK(rmse(a, a) == 0.0);

  TrajectoryRecord shifted = a;
  for (auto& s : shifted.samples) s.position_m += 2.5;
  CHECK(rmse(a, shifted) == doctest::Approx(2.5).epsilon(1e-12));

  // Direct-summation oracle on a random pair.
  TrajectoryRecord b = a;
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (auto& s : b.samples) s.position_m += gauss(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = a.samples[i].position_m - b.samples[i].position_m;
    acc += d * d;
  }
  CHECK(rmse(a, b) ==
        doctest::Approx(std::sqrt(acc / 100.0)).epsilon(1e-12));

  TrajectoryRecord shorter = a;
  shorter.samples.pop_back();
  CHECK_THROWS_AS(rmse(a, shorter), std::invalid_argument);
}

TEST_CASE("speed profile finite differences") {
  TrajectoryRecord lin;
  lin.sample_interval_s = 1.0;
  for (int i = 0; i < 20; ++i) {
    lin.samples.push_back({static_cast<double>(i), 5.0 * i, std::nullopt});
  }
  for (double v : speed_profile(lin)) CHECK(v == doctest::Approx(5.0));

  TrajectoryRecord flat = lin;
  for (auto& s : flat.samples) s.position_m = 42.0;
  for (double v : speed_profile(flat)) CHECK(v == 0.0);

  TrajectoryRecord quad;
  quad.sample_interval_s = 1.0;
  for (int i = 0; i < 20; ++i) {
    quad.samples.push_back(
        {static_cast<double>(i), static_cast<double>(i) * i, std::nullopt});
  }
  const std::vector<double> v = speed_profile(quad);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    CHECK(v[i] == doctest::Approx(2.0 * static_cast<double>(i)));
  }

  TrajectoryRecord single;
  single.samples.push_back({0.0, 0.0, std::nullopt});
  CHECK_THROWS_AS(speed_profile(single), std::invalid_argument);
}
