#include "mergesim/trajectory_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace mergesim {

namespace {

constexpr double kUniformTolerance = 1e-9;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw CsvFormatError("malformed numeric field '" + field + "' at line " +
                         std::to_string(line));
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<double> TrajectoryRecord::positions() const {
  std::vector<double> p(samples.size());
  std::transform(samples.begin(), samples.end(), p.begin(),
                 [](const TrajectorySample& s) { return s.position_m; });
  return p;
}

void NoiseSpec::validate() const {
  if (gaussian_sigma < 0.0 || impulse_probability < 0.0 ||
      impulse_probability > 1.0) {
    throw std::domain_error("NoiseSpec: parameter out of range");
  }
}

std::vector<TrajectoryRecord> parse_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw CsvFormatError("empty input, expected header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool has_speed = false;
  if (line == "vehicle_id,time_s,position_m,speed_mps") {
    has_speed = true;
  } else if (line != "vehicle_id,time_s,position_m") {
    throw CsvFormatError("unexpected header '" + line + "'");
  }

  struct Row {
    TrajectorySample sample;
    std::size_t line;
  };
  std::vector<std::string> id_order;
  std::vector<std::vector<Row>> rows_by_id;
  auto rows_for = [&](const std::string& id) -> std::vector<Row>& {
    for (std::size_t i = 0; i < id_order.size(); ++i) {
      if (id_order[i] == id) return rows_by_id[i];
    }
    id_order.push_back(id);
    rows_by_id.emplace_back();
    return rows_by_id.back();
  };

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    const std::size_t expected = has_speed ? 4u : 3u;
    if (fields.size() != expected || fields[0].empty()) {
      throw CsvFormatError("malformed row at line " + std::to_string(line_no));
    }
    Row row;
    row.line = line_no;
    row.sample.time_s = parse_double(fields[1], line_no);
    row.sample.position_m = parse_double(fields[2], line_no);
    if (has_speed) row.sample.speed_mps = parse_double(fields[3], line_no);
    rows_for(fields[0]).push_back(row);
  }

  std::vector<TrajectoryRecord> records;
  for (std::size_t i = 0; i < id_order.size(); ++i) {
    auto& rows = rows_by_id[i];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.sample.time_s < b.sample.time_s;
    });
    TrajectoryRecord rec;
    rec.vehicle_id = id_order[i];
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (!(rows[k].sample.time_s > rows[k - 1].sample.time_s)) {
        throw CsvFormatError("duplicate or non-increasing time at line " +
                             std::to_string(rows[k].line) + " for vehicle '" +
                             rec.vehicle_id + "'");
      }
    }
    if (rows.size() >= 2) {
      const double dt0 = rows[1].sample.time_s - rows[0].sample.time_s;
      for (std::size_t k = 1; k < rows.size(); ++k) {
        const double dt = rows[k].sample.time_s - rows[k - 1].sample.time_s;
        if (std::abs(dt - dt0) > kUniformTolerance) {
          throw CsvFormatError(
              "non-uniform sampling for vehicle '" + rec.vehicle_id +
              "': interval " + format_double(dt) + " at line " +
              std::to_string(rows[k].line) + " vs " + format_double(dt0));
        }
      }
      rec.sample_interval_s = dt0;
    }
    for (const Row& r : rows) rec.samples.push_back(r.sample);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TrajectoryRecord> load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  return parse_trajectory_csv(in);
}

void serialize_trajectory_csv(const std::vector<TrajectoryRecord>& records,
                              std::ostream& out) {
  bool any_speed = false;
  for (const auto& rec : records) {
    for (const auto& s : rec.samples) {
      if (s.speed_mps) any_speed = true;
    }
  }
  out << (any_speed ? "vehicle_id,time_s,position_m,speed_mps"
                    : "vehicle_id,time_s,position_m")
      << "\n";
  for (const auto& rec : records) {
    for (const auto& s : rec.samples) {
      out << rec.vehicle_id << ',' << format_double(s.time_s) << ','
          << format_double(s.position_m);
      if (any_speed) out << ',' << format_double(s.speed_mps.value_or(0.0));
      out << "\n";
    }
  }
}

void save_trajectory_csv(const std::vector<TrajectoryRecord>& records,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  serialize_trajectory_csv(records, out);
}

TrajectoryRecord inject_noise(const TrajectoryRecord& rec, const NoiseSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> sign(0, 1);

  TrajectoryRecord out = rec;
  for (auto& s : out.samples) {
    if (spec.gaussian_sigma > 0.0) {
      s.position_m += spec.gaussian_sigma * gauss(rng);
    }
    if (spec.impulse_probability > 0.0 && unit(rng) < spec.impulse_probability) {
      s.position_m += (sign(rng) ? 1.0 : -1.0) * spec.impulse_magnitude;
    }
    s.speed_mps.reset();
  }
  return out;
}

double rmse(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.samples.size() != b.samples.size()) {
    throw std::invalid_argument("rmse: record lengths differ");
  }
  if (a.samples.empty()) throw std::invalid_argument("rmse: empty records");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (std::abs(a.samples[i].time_s - b.samples[i].time_s) > kUniformTolerance) {
      throw std::invalid_argument("rmse: records not time-aligned");
    }
    const double d = a.samples[i].position_m - b.samples[i].position_m;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.samples.size()));
}

std::vector<double> speed_profile(const TrajectoryRecord& rec) {
  const std::size_t n = rec.samples.size();
  if (n < 2) throw std::invalid_argument("speed_profile: need at least 2 samples");
  const double dt = rec.sample_interval_s;
  std::vector<double> v(n);
  auto pos = [&](std::size_t i) { return rec.samples[i].position_m; };
  v[0] = (pos(1) - pos(0)) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    v[i] = (pos(i + 1) - pos(i - 1)) / (2.0 * dt);
  }
  v[n - 1] = (pos(n - 1) - pos(n - 2)) / dt;
  return v;
}

}  // namespace mergesim
