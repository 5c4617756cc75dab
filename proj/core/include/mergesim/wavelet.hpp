#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mergesim {

/// Orthonormal wavelet filter pair. `lowpass` is the scaling filter h
/// (sums to sqrt(2), even shifts orthonormal); `highpass` is the
/// conjugate quadrature mirror g[n] = (-1)^n h[L-1-n] (sums to 0).
/// With an orthonormal pair the same filters serve analysis and
/// synthesis, so no separate reconstruction filters are stored.
struct WaveletBasis {
  std::string name;
  std::vector<double> lowpass;
  std::vector<double> highpass;

  std::size_t length() const { return lowpass.size(); }
  void validate() const;

  /// Daubechies-3 (6 taps, 3 vanishing moments), built from the exact
  /// closed form in terms of sqrt(10) rather than copied decimals.
  static WaveletBasis db3();
};

/// Which level-dependent threshold formula applies:
///   DivSqrtLevel:  t_j = sigma * sqrt(2 ln N) / sqrt(j)
///   DivLogLevel:   t_j = sigma * sqrt(2 ln N) / ln(j + 1)
enum class ThresholdRule { DivSqrtLevel, DivLogLevel };

struct WaveletPipelineConfig {
  WaveletBasis basis = WaveletBasis::db3();
  int levels = 3;
  double alpha = 0.5;  // shrink slope in [0,1]; 1 = soft, 0 = hard
  ThresholdRule finest_rule = ThresholdRule::DivSqrtLevel;
  ThresholdRule coarser_rule = ThresholdRule::DivLogLevel;

  void validate() const;
};

/// Pyramidal decomposition output. details[0] is the finest band d_1,
/// details[J-1] the coarsest d_J; approx is a_J. level_input_len[j-1]
/// records the signal length entering level j (needed to invert the
/// boundary extension exactly).
struct WaveletCoeffs {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;
  std::vector<std::size_t> level_input_len;
  std::size_t n_original = 0;

  int levels() const { return static_cast<int>(details.size()); }
};

/// J-level pyramidal filter-bank decomposition with symmetric
/// (half-sample) boundary extension. Exactly invertible by idwt.
WaveletCoeffs dwt(std::span<const double> signal, const WaveletPipelineConfig& cfg);

/// Exact inverse of dwt for untouched coefficients; reconstructs a
/// signal of length n_original from shrunk coefficients otherwise.
std::vector<double> idwt(const WaveletCoeffs& coeffs, const WaveletPipelineConfig& cfg);

/// Robust noise scale from the finest detail band: median(|w|)/0.6745.
double noise_sigma(std::span<const double> finest_detail);

/// Level-dependent threshold t_j; the finest level (j == 1) uses
/// cfg.finest_rule, coarser levels cfg.coarser_rule.
double threshold_level(int j, int levels, double sigma, std::size_t n,
                       const WaveletPipelineConfig& cfg);

/// Piecewise shrink interpolating hard (alpha=0) and soft (alpha=1)
/// thresholding: w-alpha*t for w >= t, 0 for |w| < t, w+alpha*t for
/// w <= -t.
double shrink(double w, double t, double alpha);

/// Full pipeline: decompose, shrink every detail band with its level
/// threshold (approx band untouched), reconstruct.
std::vector<double> denoise(std::span<const double> noisy,
                            const WaveletPipelineConfig& cfg);

}  // namespace mergesim
