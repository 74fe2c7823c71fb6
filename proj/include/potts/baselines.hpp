#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "potts/core.hpp"
#include "potts/potts_dp.hpp"

namespace potts {

namespace detail {

inline double median_inplace(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace detail

/// Median absolute deviation of the first differences, rescaled to the
/// standard deviation of the sample noise (0.6745 for Gaussian MAD, sqrt 2
/// because a difference carries two noise samples).
inline double mad_sigma(const Signal& y) {
  if (y.size() < 3) throw DomainError("mad_sigma needs at least 3 samples");
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = y[i + 1] - y[i];
  const double med = detail::median_inplace(d);
  for (double& v : d) v = std::abs(v - med);
  return detail::median_inplace(d) / (0.6745 * std::numbers::sqrt2);
}

/// lambda = 0.25 sqrt(N) sigma^2
inline double heuristic_lambda(std::size_t n, double sigma_sq_hat) {
  return 0.25 * std::sqrt(static_cast<double>(n)) * sigma_sq_hat;
}

enum class CriterionKind { AIC, SIC, AICC, SICC };

inline std::string_view to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::AIC: return "aic";
    case CriterionKind::SIC: return "sic";
    case CriterionKind::AICC: return "aicc";
    case CriterionKind::SICC: return "sicc";
  }
  return "?";
}

/// N ln(RSS/N) plus the complexity term of `kind` for K segments.
/// The corrected variants scale the term by N / (N - K - 1).
inline double information_criterion(CriterionKind kind, double rss, std::size_t n, std::size_t k) {
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double fit = nd * std::log(rss / nd);
  const double correction = nd / (nd - kd - 1.0);
  switch (kind) {
    case CriterionKind::AIC: return fit + 2.0 * kd;
    case CriterionKind::SIC: return fit + kd * std::log(nd);
    case CriterionKind::AICC: return fit + 2.0 * kd * correction;
    case CriterionKind::SICC: return fit + kd * std::log(nd) * correction;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Index into `solutions` of the information-criterion choice among the
/// distinct segmentations on the path. Candidates with zero RSS or
/// K >= N - 1 are inadmissible; ties go to the smaller K, then the smaller
/// lambda.
inline std::size_t ic_select_index(const Signal& y, std::span<const PottsSolution> solutions, CriterionKind kind) {
  const std::size_t n = y.size();
  std::size_t best = solutions.size();
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<const PottsSolution*> seen;
  for (std::size_t j = 0; j < solutions.size(); ++j) {
    const auto& sol = solutions[j];
    const bool duplicate = std::any_of(seen.begin(), seen.end(), [&](const PottsSolution* other) {
      return other->segment_count() == sol.segment_count() && other->seg.indicator == sol.seg.indicator;
    });
    if (duplicate) continue;
    seen.push_back(&sol);

    const std::size_t k = sol.segment_count();
    const double rss = squared_distance(y.values(), sol.x_hat.values());
    if (!(rss > 0.0) || k + 1 >= n) continue;
    const double value = information_criterion(kind, rss, n, k);
    const bool better = value < best_value ||
                        (value == best_value && best < solutions.size() && k < solutions[best].segment_count());
    if (better) {
      best = j;
      best_value = value;
    }
  }
  if (best == solutions.size()) throw SelectionError("no admissible segmentation for " + std::string(to_string(kind)));
  return best;
}

inline PottsSolution ic_select(const Signal& y, std::span<const double> grid, CriterionKind kind) {
  const auto path = solve_path(y, grid);
  return path[ic_select_index(y, path, kind)];
}

}  // namespace potts
