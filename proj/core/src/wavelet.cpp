#include "mergesim/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mergesim {

namespace {

// Half-sample symmetric reflection of an out-of-range index into [0, n).
std::size_t reflect(long i, std::size_t n) {
  const long ln = static_cast<long>(n);
  while (i < 0 || i >= ln) {
    if (i < 0) i = -1 - i;
    if (i >= ln) i = 2 * ln - 1 - i;
  }
  return static_cast<std::size_t>(i);
}

// Signal extended by L-1 reflected samples on each side.
std::vector<double> extend_symmetric(std::span<const double> x, std::size_t pad) {
  std::vector<double> y(x.size() + 2 * pad);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = x[reflect(static_cast<long>(i) - static_cast<long>(pad), x.size())];
  }
  return y;
}

// Inner products of y with the even filter shifts whose support lies
// entirely inside [0, |y|): c[i] = <y, f(. - 2i)>. Keeping only fully
// supported shifts makes every coefficient a true inner product with
// the symmetric extension, so the detail response to a constant is
// exactly zero; the shifts dropped at the edges only touch samples
// inside the padding, which the reconstruction crops away, so the
// round trip stays exact on the original support.
std::size_t band_size(std::size_t m, std::size_t filter_len) {
  return (m - filter_len) / 2 + 1;
}

std::vector<double> analyze_band(std::span<const double> y,
                                 std::span<const double> f) {
  const std::size_t count = band_size(y.size(), f.size());
  std::vector<double> c(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t base = 2 * i;
    double acc = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) {
      acc += y[base + n] * f[n];
    }
    c[i] = acc;
  }
  return c;
}

void synthesize_band(std::span<const double> c, std::span<const double> f,
                     std::span<double> y) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::size_t base = 2 * i;
    for (std::size_t n = 0; n < f.size(); ++n) {
      y[base + n] += c[i] * f[n];
    }
  }
}

}  // namespace

void WaveletBasis::validate() const {
  if (lowpass.empty() || lowpass.size() != highpass.size()) {
    throw std::domain_error("WaveletBasis: inconsistent filter lengths");
  }
  double lo_sum = 0.0, hi_sum = 0.0;
  for (double v : lowpass) lo_sum += v;
  for (double v : highpass) hi_sum += v;
  if (std::abs(lo_sum - std::sqrt(2.0)) > 1e-12 || std::abs(hi_sum) > 1e-12) {
    throw std::domain_error("WaveletBasis: filter sums violate sqrt(2)/0 invariants");
  }
}

WaveletBasis WaveletBasis::db3() {
  const double r10 = std::sqrt(10.0);
  const double b = std::sqrt(5.0 + 2.0 * r10);
  // Scaling coefficients normalized to sum 2, then scaled to sum sqrt(2).
  const double c[6] = {
      (1.0 + r10 + b) / 16.0,       (5.0 + r10 + 3.0 * b) / 16.0,
      (10.0 - 2.0 * r10 + 2.0 * b) / 16.0, (10.0 - 2.0 * r10 - 2.0 * b) / 16.0,
      (5.0 + r10 - 3.0 * b) / 16.0, (1.0 + r10 - b) / 16.0};
  WaveletBasis basis;
  basis.name = "db3";
  basis.lowpass.resize(6);
  basis.highpass.resize(6);
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  for (int n = 0; n < 6; ++n) basis.lowpass[n] = c[n] * inv_r2;
  for (int n = 0; n < 6; ++n) {
    basis.highpass[n] = (n % 2 == 0 ? 1.0 : -1.0) * basis.lowpass[5 - n];
  }
  return basis;
}

void WaveletPipelineConfig::validate() const {
  basis.validate();
  if (levels < 1) throw std::domain_error("WaveletPipelineConfig: levels must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::domain_error("WaveletPipelineConfig: alpha must lie in [0, 1]");
  }
}

WaveletCoeffs dwt(std::span<const double> signal, const WaveletPipelineConfig& cfg) {
  cfg.validate();
  if (signal.size() < (std::size_t{1} << cfg.levels)) {
    throw std::domain_error("dwt: signal too short for requested level count");
  }
  const std::size_t pad = cfg.basis.length() - 1;

  WaveletCoeffs out;
  out.n_original = signal.size();
  std::vector<double> current(signal.begin(), signal.end());
  for (int j = 1; j <= cfg.levels; ++j) {
    out.level_input_len.push_back(current.size());
    const std::vector<double> ext = extend_symmetric(current, pad);
    out.details.push_back(analyze_band(ext, cfg.basis.highpass));
    current = analyze_band(ext, cfg.basis.lowpass);
  }
  out.approx = std::move(current);
  return out;
}

std::vector<double> idwt(const WaveletCoeffs& coeffs, const WaveletPipelineConfig& cfg) {
  cfg.validate();
  const int levels = coeffs.levels();
  if (levels < 1 || coeffs.level_input_len.size() != static_cast<std::size_t>(levels)) {
    throw std::domain_error("idwt: inconsistent coefficient structure");
  }
  if (coeffs.n_original != coeffs.level_input_len.front()) {
    throw std::domain_error("idwt: n_original does not match level chain");
  }
  const std::size_t pad = cfg.basis.length() - 1;

  std::vector<double> current = coeffs.approx;
  for (int j = levels; j >= 1; --j) {
    const std::size_t n = coeffs.level_input_len[static_cast<std::size_t>(j - 1)];
    const std::size_t m = n + 2 * pad;
    const std::size_t expect = band_size(m, cfg.basis.length());
    const auto& detail = coeffs.details[static_cast<std::size_t>(j - 1)];
    if (current.size() != expect || detail.size() != expect) {
      throw std::domain_error("idwt: band length inconsistent with level chain");
    }
    std::vector<double> y(m, 0.0);
    synthesize_band(current, cfg.basis.lowpass, y);
    synthesize_band(detail, cfg.basis.highpass, y);
    current.assign(y.begin() + static_cast<long>(pad),
                   y.begin() + static_cast<long>(pad + n));
  }
  return current;
}

double noise_sigma(std::span<const double> finest_detail) {
  if (finest_detail.empty()) {
    throw std::domain_error("noise_sigma: empty coefficient sequence");
  }
  std::vector<double> mag(finest_detail.size());
  std::transform(finest_detail.begin(), finest_detail.end(), mag.begin(),
                 [](double v) { return std::abs(v); });
  const std::size_t n = mag.size();
  const std::size_t mid = n / 2;
  std::nth_element(mag.begin(), mag.begin() + static_cast<long>(mid), mag.end());
  double median = mag[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(mag.begin(), mag.begin() + static_cast<long>(mid));
    median = 0.5 * (median + lower);
  }
  return median / 0.6745;
}

double threshold_level(int j, int levels, double sigma, std::size_t n,
                       const WaveletPipelineConfig& cfg) {
  if (j < 1 || j > levels || sigma < 0.0 || n < 2) {
    throw std::domain_error("threshold_level: argument out of range");
  }
  const ThresholdRule rule = (j == 1) ? cfg.finest_rule : cfg.coarser_rule;
  const double universal = sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
  switch (rule) {
    case ThresholdRule::DivSqrtLevel:
      return universal / std::sqrt(static_cast<double>(j));
    case ThresholdRule::DivLogLevel:
      return universal / std::log(static_cast<double>(j) + 1.0);
  }
  throw std::logic_error("threshold_level: unknown rule");
}

double shrink(double w, double t, double alpha) {
  if (t < 0.0) throw std::domain_error("shrink: negative threshold");
  if (w >= t) return w - alpha * t;
  if (w <= -t) return w + alpha * t;
  return 0.0;
}

std::vector<double> denoise(std::span<const double> noisy,
                            const WaveletPipelineConfig& cfg) {
  WaveletCoeffs coeffs = dwt(noisy, cfg);
  const double sigma = noise_sigma(coeffs.details.front());
  for (int j = 1; j <= coeffs.levels(); ++j) {
    const double t = threshold_level(j, coeffs.levels(), sigma, noisy.size(), cfg);
    for (double& w : coeffs.details[static_cast<std::size_t>(j - 1)]) {
      w = shrink(w, t, cfg.alpha);
    }
  }
  return idwt(coeffs, cfg);
}

}  // namespace mergesim
