#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "potts/errors.hpp"

namespace potts {

/// A finite real sequence of length N >= 2: an observation y or a
/// reconstruction x.
class Signal {
 public:
  explicit Signal(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2) {
      throw DomainError("signal needs at least 2 samples, got " + std::to_string(samples_.size()));
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i])) {
        throw DomainError("signal sample " + std::to_string(i) + " is not finite");
      }
    }
  }
  Signal(std::initializer_list<double> samples) : Signal(std::vector<double>(samples)) {}

  std::size_t size() const noexcept { return samples_.size(); }
  double operator[](std::size_t i) const noexcept { return samples_[i]; }
  std::span<const double> values() const noexcept { return samples_; }
  const std::vector<double>& vector() const noexcept { return samples_; }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::vector<double> samples_;
};

/// Binary change indicator: r[i] == 1 marks sample i as the last one of its
/// segment. The last entry is always 1.
using Indicator = std::vector<std::uint8_t>;

/// Half-open, 0-based sample range [begin, end) of one segment.
struct SegmentRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const SegmentRange&, const SegmentRange&) = default;
};

/// The (r, mu) parametrization of a piecewise-constant signal.
struct Segmentation {
  Indicator indicator;
  std::vector<double> amplitudes;

  std::size_t size() const noexcept { return indicator.size(); }
  std::size_t segment_count() const noexcept { return amplitudes.size(); }
  std::size_t jump_count() const noexcept { return amplitudes.empty() ? 0 : amplitudes.size() - 1; }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

/// Prior hyperparameters: Beta(alpha0, alpha1) on the change probability and
/// Normal(mu0, sigma0_sq) on each segment amplitude.
struct Hyperparameters {
  double alpha0 = 1.0;
  double alpha1 = 1.0;
  double sigma0_sq = 1e4 / (2.0 * std::numbers::pi);
  double mu0 = 0.0;

  double log_two_pi_sigma0_sq() const { return std::log(2.0 * std::numbers::pi * sigma0_sq); }

  static Hyperparameters from_log_two_pi_sigma0_sq(double log_value) {
    Hyperparameters h;
    h.sigma0_sq = std::exp(log_value) / (2.0 * std::numbers::pi);
    return h;
  }

  void validate() const {
    if (!(alpha0 > 0.0) || !(alpha1 > 0.0)) throw DomainError("alpha0 and alpha1 must be positive");
    if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq)) throw DomainError("sigma0_sq must be positive and finite");
    if (!std::isfinite(mu0)) throw DomainError("mu0 must be finite");
  }
};

inline std::size_t count_segments(std::span<const std::uint8_t> r) {
  std::size_t k = 0;
  for (auto v : r) k += v;
  return k;
}

/// Contiguous ranges delimited by the indicator; range k ends at the k-th
/// index holding a 1.
inline std::vector<SegmentRange> segments_from_indicator(std::span<const std::uint8_t> r) {
  if (r.empty()) throw InvalidIndicatorError("empty indicator");
  std::vector<SegmentRange> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] > 1) throw DomainError("indicator entry " + std::to_string(i) + " is not binary");
    if (r[i] == 1) {
      out.push_back({begin, i + 1});
      begin = i + 1;
    }
  }
  if (r.back() != 1) throw InvalidIndicatorError("indicator must end with 1 (terminal convention)");
  return out;
}

inline Signal reconstruct_signal(const Segmentation& seg) {
  const auto ranges = segments_from_indicator(seg.indicator);
  if (ranges.size() != seg.amplitudes.size()) {
    throw ShapeError("segmentation has " + std::to_string(ranges.size()) + " segments but " +
                     std::to_string(seg.amplitudes.size()) + " amplitudes");
  }
  std::vector<double> x(seg.indicator.size());
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    for (std::size_t i = ranges[k].begin; i < ranges[k].end; ++i) x[i] = seg.amplitudes[k];
  }
  return Signal(std::move(x));
}

/// r_i = 1 iff i is last or x changes right after i. Exact comparison.
inline Indicator indicator_from_signal(std::span<const double> x) {
  Indicator r(x.size(), 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) r[i] = x[i + 1] != x[i] ? 1 : 0;
  if (!r.empty()) r.back() = 1;
  return r;
}

inline Indicator indicator_from_signal(const Signal& x) { return indicator_from_signal(x.values()); }

/// Recovers (r, mu) from a piecewise-constant signal.
inline Segmentation segmentation_from_signal(const Signal& x) {
  Segmentation seg;
  seg.indicator = indicator_from_signal(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (seg.indicator[i]) seg.amplitudes.push_back(x[i]);
  }
  return seg;
}

inline std::size_t jump_count(std::span<const double> x) {
  std::size_t j = 0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) j += x[i + 1] != x[i] ? 1 : 0;
  return j;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// 1/2 ||y - x||^2 + lambda * ||Lx||_0
inline double potts_objective(const Signal& y, const Signal& x, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
  const double fit = 0.5 * squared_distance(y.values(), x.values());
  return fit + lambda * static_cast<double>(jump_count(x.values()));
}

}  // namespace potts
