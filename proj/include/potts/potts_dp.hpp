#pragma once

// Exact minimization of the l2-Potts functional
//
//     1/2 ||y - x||^2 + lambda * ||Lx||_0
//
// by dynamic programming over the start of the last segment. Two solvers are
// provided: `solve_reference` runs the full O(N^2) Bellman recursion, `solve`
// adds early termination of the inner scan and a saturation shortcut. Both
// evaluate every candidate with the same expression and break ties toward the
// shortest last segment, so they return identical segmentations.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "potts/core.hpp"

namespace potts {

/// Cumulative sums of (y - offset) and (y - offset)^2. The offset is the
/// global mean of y; centering keeps the interval errors well conditioned.
class PrefixMoments {
 public:
  explicit PrefixMoments(std::span<const double> y)
      : m1_(y.size() + 1, 0.0), m2_(y.size() + 1, 0.0), inv_len_(y.size() + 1, 0.0) {
    if (y.empty()) throw DomainError("prefix moments of an empty sequence");
    for (std::size_t len = 1; len <= y.size(); ++len) inv_len_[len] = 1.0 / static_cast<double>(len);
    double mean = 0.0;
    for (double v : y) mean += v;
    offset_ = mean / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double c = y[i] - offset_;
      m1_[i + 1] = m1_[i] + c;
      m2_[i + 1] = m2_[i] + c * c;
    }
  }

  std::size_t size() const noexcept { return m1_.size() - 1; }
  double offset() const noexcept { return offset_; }
  const std::vector<double>& m1() const noexcept { return m1_; }
  const std::vector<double>& m2() const noexcept { return m2_; }
  /// inv_len()[k] == 1.0 / k
  const std::vector<double>& inv_len() const noexcept { return inv_len_; }

  /// Centered sum over [begin, end).
  double sum(std::size_t begin, std::size_t end) const noexcept { return m1_[end] - m1_[begin]; }
  double sum_sq(std::size_t begin, std::size_t end) const noexcept { return m2_[end] - m2_[begin]; }

  /// Squared error of y[begin, end) about its mean, clamped at zero.
  double error(std::size_t begin, std::size_t end) const noexcept {
    const double s1 = m1_[end] - m1_[begin];
    const double e = (m2_[end] - m2_[begin]) - s1 * s1 * inv_len_[end - begin];
    return e > 0.0 ? e : 0.0;
  }

 private:
  std::vector<double> m1_;
  std::vector<double> m2_;
  std::vector<double> inv_len_;
  double offset_ = 0.0;
};

/// Sum of (y_i - mean)^2 over the half-open range [begin, end).
inline double interval_error(const PrefixMoments& moments, std::size_t begin, std::size_t end) {
  if (begin >= end || end > moments.size()) {
    throw BoundsError("interval [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside [0, " +
                      std::to_string(moments.size()) + ")");
  }
  return moments.error(begin, end);
}

struct PottsSolution {
  Signal x_hat;
  Segmentation seg;
  double lambda = 0.0;
  double objective = 0.0;

  std::size_t segment_count() const noexcept { return seg.segment_count(); }
  std::size_t jump_count() const noexcept { return seg.jump_count(); }
};

namespace detail {

inline void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and non-negative");
}

/// Builds the solution from `last_start[n]`, the start of the final segment
/// of the optimal partition of y[0, n).
inline PottsSolution assemble(const Signal& y, double lambda, std::span<const std::size_t> last_start) {
  const std::size_t n_total = y.size();
  Segmentation seg;
  seg.indicator.assign(n_total, 0);
  std::vector<SegmentRange> ranges;
  for (std::size_t end = n_total; end > 0;) {
    const std::size_t begin = last_start[end];
    ranges.push_back({begin, end});
    end = begin;
  }
  std::reverse(ranges.begin(), ranges.end());

  std::vector<double> x(n_total);
  seg.amplitudes.reserve(ranges.size());
  for (const auto& r : ranges) {
    double s = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) s += y[i];
    const double mean = s / static_cast<double>(r.size());
    for (std::size_t i = r.begin; i < r.end; ++i) x[i] = mean;
    seg.indicator[r.end - 1] = 1;
    seg.amplitudes.push_back(mean);
  }
  PottsSolution sol{Signal(std::move(x)), std::move(seg), lambda, 0.0};
  sol.objective = 0.5 * squared_distance(y.values(), sol.x_hat.values()) + lambda * static_cast<double>(sol.jump_count());
  return sol;
}

inline PottsSolution identity_solution(const Signal& y) {
  auto seg = segmentation_from_signal(y);
  return PottsSolution{y, std::move(seg), 0.0, 0.0};
}

inline PottsSolution single_segment(const Signal& y, double lambda) {
  std::vector<std::size_t> last_start(y.size() + 1, 0);
  return assemble(y, lambda, last_start);
}

}  // namespace detail

/// Full O(N^2) Bellman recursion
///   B(0) = -lambda,  B(n) = min_{b < n} B(b) + lambda + 1/2 err(b, n)
/// with ties resolved toward the largest b.
inline PottsSolution solve_reference(const Signal& y, const PrefixMoments& moments, double lambda) {
  detail::check_lambda(lambda);
  if (moments.size() != y.size()) throw ShapeError("moments do not match signal length");
  if (lambda == 0.0) return detail::identity_solution(y);

  const std::size_t n_total = y.size();
  std::vector<double> bellman(n_total + 1, 0.0);
  std::vector<std::size_t> last_start(n_total + 1, 0);
  bellman[0] = -lambda;
  for (std::size_t n = 1; n <= n_total; ++n) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const double v = bellman[b] + lambda + 0.5 * moments.error(b, n);
      if (v <= best) {
        best = v;
        arg = b;
      }
    }
    bellman[n] = best;
    last_start[n] = arg;
  }
  return detail::assemble(y, lambda, last_start);
}

inline PottsSolution solve_reference(const Signal& y, double lambda) {
  return solve_reference(y, PrefixMoments(y.values()), lambda);
}

/// Same minimizer as `solve_reference`, with two exact accelerations.
///
/// Saturation: every split costs at least lambda, so for lambda above
/// 1/2 err(0, N) the single segment is the unique minimizer.
///
/// Candidate pruning: write the cost of closing the last segment [t, n) at
/// level mu as C_t(mu) = B(t) + lambda + 1/2 sum (y_i - mu)^2. Later samples
/// add the same term to every C_t, so once C_t(mu) >= C_n(mu) = B(n) + lambda
/// start t can never beat start n at that mu. Each start keeps the interval of
/// levels on which it is still below every younger start, and is dropped when
/// that interval is empty. The first test at every step is the plain
/// B(t) + 1/2 err(t, n) > B(n) bound. Margins above the rounding error of the
/// compared sums keep dropped starts from ever being a (tied) argmin of the
/// reference recursion.
inline PottsSolution solve(const Signal& y, const PrefixMoments& moments, double lambda) {
  detail::check_lambda(lambda);
  if (moments.size() != y.size()) throw ShapeError("moments do not match signal length");
  if (lambda == 0.0) return detail::identity_solution(y);

  const std::size_t n_total = y.size();
  if (lambda > 0.5 * moments.error(0, n_total)) return detail::single_segment(y, lambda);

  constexpr double margin_rel = 64.0 * std::numeric_limits<double>::epsilon();
  const double margin = margin_rel * (moments.m2().back() + lambda);
  const auto& m1 = moments.m1();
  const auto& m2 = moments.m2();

  // Live starts, stored column-wise so the candidate loop vectorizes.
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t cap = n_total + 1;
  const auto index_buf = std::make_unique_for_overwrite<std::size_t[]>(2 * cap);
  const auto real_buf = std::make_unique_for_overwrite<double[]>(6 * cap);
  std::size_t* const last_start = index_buf.get();
  std::size_t* const start = last_start + cap;
  double* const base = real_buf.get();
  double* const c1 = base + cap;
  double* const c2 = c1 + cap;
  double* const lo = c2 + cap;
  double* const hi = lo + cap;
  double* const value = hi + cap;
  // base holds B(t) + lambda so candidate values round exactly as in the
  // reference recursion.
  start[0] = 0;
  base[0] = 0.0;
  c1[0] = m1[0];
  c2[0] = m2[0];
  lo[0] = -inf;
  hi[0] = inf;
  std::size_t live = 1;
  const double* inv = moments.inv_len().data();
  for (std::size_t n = 1; n <= n_total; ++n) {
    const double s1n = m1[n];
    const double s2n = m2[n];
    for (std::size_t idx = 0; idx < live; ++idx) {
      const double s1 = s1n - c1[idx];
      const double e = (s2n - c2[idx]) - s1 * s1 * inv[n - start[idx]];
      value[idx] = base[idx] + 0.5 * (e > 0.0 ? e : 0.0);
    }
    std::size_t arg = 0;
    for (std::size_t idx = 1; idx < live; ++idx) {
      if (value[idx] <= value[arg]) arg = idx;
    }
    const double best = value[arg];
    const double entry = best + lambda;
    last_start[n] = start[arg];

    std::size_t kept = 0;
    for (std::size_t idx = 0; idx < live; ++idx) {
      const double slack = entry + margin - value[idx];
      if (!(slack >= 0.0)) continue;
      const double w = inv[n - start[idx]];
      const double mean = (s1n - c1[idx]) * w;
      const double radius = std::sqrt(2.0 * slack * w);
      const double tol = margin_rel * (std::abs(mean) + radius);
      const double l = std::max(lo[idx], mean - radius - tol);
      const double h = std::min(hi[idx], mean + radius + tol);
      if (l > h) continue;
      start[kept] = start[idx];
      base[kept] = base[idx];
      c1[kept] = c1[idx];
      c2[kept] = c2[idx];
      lo[kept] = l;
      hi[kept] = h;
      ++kept;
    }
    start[kept] = n;
    base[kept] = entry;
    c1[kept] = s1n;
    c2[kept] = s2n;
    lo[kept] = -inf;
    hi[kept] = inf;
    live = kept + 1;
  }
  return detail::assemble(y, lambda, std::span<const std::size_t>(last_start, cap));
}

inline PottsSolution solve(const Signal& y, double lambda) { return solve(y, PrefixMoments(y.values()), lambda); }

inline void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw DomainError("empty lambda grid");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!(grid[j] > 0.0) || !std::isfinite(grid[j])) throw DomainError("lambda grid values must be positive and finite");
    if (j > 0 && !(grid[j] > grid[j - 1])) throw DomainError("lambda grid must be strictly increasing");
  }
}

enum class PathMode {
  /// Run the solver at every grid point.
  exhaustive,
  /// Solve only where the jump count can change. The optimal value
  /// Q(lambda) = min_x 1/2 ||y - x||^2 + lambda ||Lx||_0 is a concave minimum of
  /// lines, one per segmentation, with slope equal to its jump count. If the
  /// solutions at two grid points share a jump count they lie on the same line,
  /// which is then optimal on the whole interval, so the points in between are
  /// filled without solving. Otherwise the next solve is placed where the two
  /// lines intersect.
  bracketed,
};

namespace detail {

inline PottsSolution with_lambda(const Signal& y, const PottsSolution& src, double lambda) {
  PottsSolution sol = src;
  sol.lambda = lambda;
  sol.objective = 0.5 * squared_distance(y.values(), sol.x_hat.values()) + lambda * static_cast<double>(sol.jump_count());
  return sol;
}

inline std::vector<PottsSolution> solve_path_bracketed(const Signal& y, const PrefixMoments& moments,
                                                       std::span<const double> grid) {
  const std::size_t last = grid.size() - 1;
  std::vector<std::optional<PottsSolution>> slots(grid.size());
  std::vector<double> half_rss(grid.size(), 0.0);
  auto solve_at = [&](std::size_t j) {
    slots[j] = solve(y, moments, grid[j]);
    half_rss[j] = 0.5 * squared_distance(y.values(), slots[j]->x_hat.values());
  };
  solve_at(0);
  if (last > 0) solve_at(last);

  std::vector<std::pair<std::size_t, std::size_t>> pending;
  if (last > 1) pending.emplace_back(0, last);
  while (!pending.empty()) {
    const auto [lo, hi] = pending.back();
    pending.pop_back();
    if (hi - lo < 2) continue;
    const std::size_t jumps_lo = slots[lo]->jump_count();
    const std::size_t jumps_hi = slots[hi]->jump_count();
    if (jumps_lo == jumps_hi) {
      for (std::size_t j = lo + 1; j < hi; ++j) slots[j] = with_lambda(y, *slots[lo], grid[j]);
      continue;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    if (jumps_lo > jumps_hi) {
      const double crossing = (half_rss[hi] - half_rss[lo]) / static_cast<double>(jumps_lo - jumps_hi);
      const auto first = grid.begin() + static_cast<std::ptrdiff_t>(lo + 1);
      const auto stop = grid.begin() + static_cast<std::ptrdiff_t>(hi);
      const auto above = std::upper_bound(first, stop, crossing);
      const std::size_t at = static_cast<std::size_t>(above - grid.begin());
      mid = std::clamp<std::size_t>(at == lo + 1 ? at : at - 1, lo + 1, hi - 1);
    }
    solve_at(mid);
    pending.emplace_back(lo, mid);
    pending.emplace_back(mid, hi);
  }

  std::vector<PottsSolution> out;
  out.reserve(grid.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace detail

/// Potts solutions for every grid value, ordered by grid index. `workers`
/// threads share the work in exhaustive mode; bracketed mode is sequential.
inline std::vector<PottsSolution> solve_path(const Signal& y, std::span<const double> grid, unsigned workers = 1,
                                             PathMode mode = PathMode::bracketed) {
  validate_grid(grid);
  const PrefixMoments moments(y.values());
  if (mode == PathMode::bracketed) return detail::solve_path_bracketed(y, moments, grid);

  std::vector<std::optional<PottsSolution>> slots(grid.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < grid.size(); j = next++) slots[j] = solve(y, moments, grid[j]);
  };
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(grid.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  std::vector<PottsSolution> out;
  out.reserve(grid.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace potts
