#pragma once

// Synthetic piecewise-constant signals and the two performance metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "potts/core.hpp"

namespace potts {

struct SynthConfig {
  std::size_t n = 1000;
  double p = 0.01;
  double x_min = 0.0;
  double x_max = 1.0;
  double sigma = 1.0 / 6.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 2) throw DomainError("synth: n must be at least 2");
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("synth: p must lie in [0, 1)");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || x_min > x_max) {
      throw DomainError("synth: need finite x_min <= x_max");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("synth: sigma must be finite and non-negative");
  }
};

struct SynthData {
  Signal x_bar;
  Indicator r_bar;
  Signal y;
};

/// Draws the indicator, then one amplitude per segment, then the noise, all
/// from one generator seeded with cfg.seed.
inline SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Indicator r(cfg.n, 0);
  for (std::size_t i = 0; i + 1 < cfg.n; ++i) r[i] = unit(rng) < cfg.p ? 1 : 0;
  r.back() = 1;

  std::vector<double> x(cfg.n);
  std::uniform_real_distribution<double> amplitude(cfg.x_min, cfg.x_max);
  double level = cfg.x_min == cfg.x_max ? cfg.x_min : amplitude(rng);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    x[i] = level;
    if (r[i] && i + 1 < cfg.n) level = cfg.x_min == cfg.x_max ? cfg.x_min : amplitude(rng);
  }

  std::vector<double> y = x;
  if (cfg.sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.sigma);
    for (double& v : y) v += noise(rng);
  }
  return SynthData{Signal(std::move(x)), std::move(r), Signal(std::move(y))};
}

/// ||x_bar - x_hat|| / ||x_bar||. A ratio of norms, not of squared norms.
inline double relative_mse(std::span<const double> x_bar, std::span<const double> x_hat) {
  if (x_bar.size() != x_hat.size()) throw ShapeError("relative_mse: length mismatch");
  double truth = 0.0;
  for (double v : x_bar) truth += v * v;
  if (!(truth > 0.0)) throw DomainError("relative_mse: reference signal has zero norm");
  return std::sqrt(squared_distance(x_bar, x_hat) / truth);
}

inline double relative_mse(const Signal& x_bar, const Signal& x_hat) {
  return relative_mse(x_bar.values(), x_hat.values());
}

/// Odd-length, symmetric, unit-sum filter. A single weight of 1 is the identity.
class SmoothingKernel {
 public:
  explicit SmoothingKernel(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.size() % 2 == 0) throw DomainError("kernel length must be odd");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("kernel weights must be finite and non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("kernel weights must sum to 1");
    for (std::size_t k = 0; k < weights_.size() / 2; ++k) {
      if (weights_[k] != weights_[weights_.size() - 1 - k]) throw DomainError("kernel must be symmetric");
    }
  }

  static SmoothingKernel identity() { return SmoothingKernel({1.0}); }

  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t radius() const noexcept { return weights_.size() / 2; }
  bool is_identity() const noexcept { return weights_.size() == 1; }

  /// Same-length convolution with zero padding outside the sequence.
  std::vector<double> apply(std::span<const double> a) const {
    const std::size_t n = a.size();
    const std::size_t h = radius();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < weights_.size(); ++k) {
        if (i + k < h || i + k - h >= n) continue;
        s += weights_[k] * a[i + k - h];
      }
      out[i] = s;
    }
    return out;
  }

 private:
  std::vector<double> weights_;
};

/// exp(-k^2 / (2 sd^2)) on k = -radius..radius, normalized to unit sum.
inline SmoothingKernel gaussian_kernel(double sd = 0.5, std::size_t radius = 2) {
  if (!(sd > 0.0)) throw DomainError("kernel standard deviation must be positive");
  std::vector<double> w(2 * radius + 1);
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double k = static_cast<double>(j) - static_cast<double>(radius);
    w[j] = std::exp(-k * k / (2.0 * sd * sd));
    total += w[j];
  }
  for (double& v : w) v /= total;
  for (std::size_t j = 0; j < radius; ++j) w[w.size() - 1 - j] = w[j];
  return SmoothingKernel(std::move(w));
}

inline SmoothingKernel gaussian_kernel_default() { return gaussian_kernel(0.5, 2); }

/// 1 - sum min(a, b) / [sum_{a,b>0} (a + b)/2 + sum_{b=0} a + sum_{a=0} b]
/// on the smoothed sequences.
inline double jaccard_error(std::span<const double> r_true, std::span<const double> r_est,
                            const SmoothingKernel& kernel) {
  if (r_true.size() != r_est.size()) throw ShapeError("jaccard_error: length mismatch");
  for (std::size_t i = 0; i < r_true.size(); ++i) {
    if (!(r_true[i] >= 0.0) || !(r_est[i] >= 0.0)) throw DomainError("jaccard_error: entries must be non-negative");
  }
  const auto a = kernel.apply(r_true);
  const auto b = kernel.apply(r_est);
  double common = 0.0;
  double denom = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    common += std::min(a[i], b[i]);
    if (a[i] > 0.0 && b[i] > 0.0) {
      denom += 0.5 * (a[i] + b[i]);
    } else {
      denom += a[i] + b[i];
    }
  }
  if (!(denom > 0.0)) throw DomainError("jaccard_error: both sequences are identically zero");
  return (denom - common) / denom;
}

/// Jaccard error between two change indicators, dropping the terminal entry
/// (always 1 by convention) before smoothing.
inline double changepoint_jaccard(std::span<const std::uint8_t> r_true, std::span<const std::uint8_t> r_est,
                                  const SmoothingKernel& kernel = gaussian_kernel_default()) {
  if (r_true.size() != r_est.size()) throw ShapeError("changepoint_jaccard: length mismatch");
  if (r_true.empty()) throw DomainError("changepoint_jaccard: empty indicator");
  const std::size_t m = r_true.size() - 1;
  std::vector<double> a(r_true.begin(), r_true.begin() + static_cast<std::ptrdiff_t>(m));
  std::vector<double> b(r_est.begin(), r_est.begin() + static_cast<std::ptrdiff_t>(m));
  return jaccard_error(a, b, kernel);
}

/// (x_max - x_min) / (3 sigma)
inline double anr(double x_min, double x_max, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("anr: sigma must be positive");
  return (x_max - x_min) / (3.0 * sigma);
}

/// Noise level giving the requested ANR for an amplitude range.
inline double sigma_for_anr(double range, double target_anr) {
  if (!(target_anr > 0.0)) throw DomainError("ANR must be positive");
  return range / (3.0 * target_anr);
}

}  // namespace potts
