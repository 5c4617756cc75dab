#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <optional>
#include <string>
#include <vector>

namespace mergesim {

struct TrajectorySample {
  double time_s = 0.0;
  double position_m = 0.0;
  std::optional<double> speed_mps;
};

/// One vehicle's uniformly sampled longitudinal trajectory. Times are
/// strictly increasing with a constant interval (the wavelet pipeline
/// requires uniform sampling).
struct TrajectoryRecord {
  std::string vehicle_id;
  std::vector<TrajectorySample> samples;
  double sample_interval_s = 0.0;

  std::vector<double> positions() const;
};

struct NoiseSpec {
  double gaussian_sigma = 0.0;   // m
  double impulse_probability = 0.0;
  double impulse_magnitude = 0.0;  // m
  std::uint64_t seed = 0;

  void validate() const;
};

class CsvFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse the trajectory interchange CSV:
///   vehicle_id,time_s,position_m[,speed_mps]
/// Rows are grouped by id and sorted by time; non-monotone times and
/// non-uniform sampling are rejected with the offending line/interval
/// named in the error message.
std::vector<TrajectoryRecord> parse_trajectory_csv(std::istream& in);
std::vector<TrajectoryRecord> load_trajectory_csv(const std::string& path);

void serialize_trajectory_csv(const std::vector<TrajectoryRecord>& records,
                              std::ostream& out);
void save_trajectory_csv(const std::vector<TrajectoryRecord>& records,
                         const std::string& path);

/// Gaussian measurement noise plus sparse impulses on the position
/// channel, deterministic per seed. Recorded speeds are dropped (they
/// no longer match the perturbed positions).
TrajectoryRecord inject_noise(const TrajectoryRecord& rec, const NoiseSpec& spec);

/// Root mean squared positional difference between two aligned records.
double rmse(const TrajectoryRecord& a, const TrajectoryRecord& b);

/// Speed series by finite-differencing positions: central differences
/// in the interior, one-sided at the ends.
std::vector<double> speed_profile(const TrajectoryRecord& rec);

}  // namespace mergesim
