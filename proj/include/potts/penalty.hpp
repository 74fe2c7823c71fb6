#pragma once

// Bayesian-derived penalty on the nuisance parameters (lambda, sigma^2) and
// the automated lambda selection built on it.
//
// With lambda = sigma^2 (log((1-p)/p) + 1/2 log(2 pi sigma0^2)) the criterion
//
//   F(x, lambda, sigma^2) = ||y - x||^2 / (2 sigma^2)
//                           + (lambda / sigma^2) ||Lx||_0 + phi(lambda, sigma^2)
//
// reproduces the negative log joint posterior of the hierarchical model up
// to the amplitude-prior quadratic term.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "potts/core.hpp"
#include "potts/potts_dp.hpp"

namespace potts {

struct PenaltyContext {
  std::size_t n = 0;
  Hyperparameters hyper{};

  void validate() const {
    if (n < 2) throw DomainError("penalty context needs n >= 2");
    hyper.validate();
  }
};

/// log(1 + e^z) without overflow.
inline double log1p_exp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double phi(double lambda, double sigma_sq, const PenaltyContext& ctx) {
  if (!(lambda > 0.0)) throw DomainError("phi: lambda must be positive");
  if (!(sigma_sq > 0.0)) throw DomainError("phi: sigma^2 must be positive");
  ctx.validate();
  const double n = static_cast<double>(ctx.n);
  const double a0 = ctx.hyper.alpha0;
  const double a1 = ctx.hyper.alpha1;
  const double log_prior = ctx.hyper.log_two_pi_sigma0_sq();
  const double ratio = lambda / sigma_sq;
  return 0.5 * n * std::log(2.0 * std::numbers::pi * sigma_sq) + std::log(sigma_sq) - ratio * (n + a0 - 2.0) +
         0.5 * (n + a0 - 1.0) * log_prior + (n + a0 + a1 - 3.0) * log1p_exp(ratio - 0.5 * log_prior);
}

/// phi specialised to the uniform Beta(1, 1) prior on the change probability.
inline double phi_uniform_prior(double lambda, double sigma_sq, std::size_t n, double sigma0_sq) {
  if (!(lambda > 0.0) || !(sigma_sq > 0.0) || !(sigma0_sq > 0.0)) {
    throw DomainError("phi_uniform_prior: arguments must be positive");
  }
  const double nd = static_cast<double>(n);
  const double log_prior = std::log(2.0 * std::numbers::pi * sigma0_sq);
  const double ratio = lambda / sigma_sq;
  return std::log(sigma_sq) + 0.5 * nd * (std::log(2.0 * std::numbers::pi * sigma_sq) + log_prior) +
         (nd - 1.0) * (log1p_exp(ratio - 0.5 * log_prior) - ratio);
}

namespace detail {

inline double criterion_from_fit(double rss, std::size_t jumps, double lambda, double sigma_sq,
                                 const PenaltyContext& ctx) {
  if (sigma_sq == 0.0) return std::numeric_limits<double>::infinity();
  if (!(sigma_sq > 0.0)) throw DomainError("full_criterion: sigma^2 must be non-negative");
  return rss / (2.0 * sigma_sq) + lambda / sigma_sq * static_cast<double>(jumps) + phi(lambda, sigma_sq, ctx);
}

}  // namespace detail

/// F(x, lambda, sigma^2). Returns +infinity for sigma^2 == 0 (degenerate fit).
inline double full_criterion(const Signal& y, const Signal& x, double lambda, double sigma_sq,
                             const PenaltyContext& ctx) {
  if (y.size() != x.size()) throw ShapeError("full_criterion: length mismatch");
  return detail::criterion_from_fit(squared_distance(y.values(), x.values()), jump_count(x.values()), lambda,
                                    sigma_sq, ctx);
}

/// ||y - x_hat||^2 / (N - 1)
inline double residual_variance(const Signal& y, const Signal& x_hat) {
  return squared_distance(y.values(), x_hat.values()) / static_cast<double>(y.size() - 1);
}

/// `count` values equispaced in log10 between `lo` and `hi`, endpoints exact.
inline std::vector<double> lambda_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) throw DomainError("lambda_grid: need 0 < lo < hi");
  if (count < 2) throw DomainError("lambda_grid: need at least 2 points");
  std::vector<double> grid(count);
  const double a = std::log10(lo);
  const double step = (std::log10(hi) - a) / static_cast<double>(count - 1);
  for (std::size_t j = 0; j < count; ++j) grid[j] = std::pow(10.0, a + step * static_cast<double>(j));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

struct GridSpec {
  double lo = 1e-5;
  double hi = 1e5;
  std::size_t count = 500;

  std::vector<double> values() const { return lambda_grid(lo, hi, count); }
};

/// Change probability implied by lambda: p = 1 / (1 + exp(lambda/sigma^2 - 1/2 log(2 pi sigma0^2))).
inline double prob_from_lambda(double lambda, double sigma_sq, double sigma0_sq) {
  const double z = lambda / sigma_sq - 0.5 * std::log(2.0 * std::numbers::pi * sigma0_sq);
  return 1.0 / (1.0 + std::exp(z));
}

inline double lambda_from_prob(double p, double sigma_sq, double sigma0_sq) {
  return sigma_sq * (std::log((1.0 - p) / p) + 0.5 * std::log(2.0 * std::numbers::pi * sigma0_sq));
}

struct PathEntry {
  double lambda = 0.0;
  PottsSolution solution;
  double sigma_hat_sq = 0.0;
  double f_value = std::numeric_limits<double>::infinity();

  bool degenerate() const noexcept { return !std::isfinite(f_value); }
};

struct Selection {
  std::vector<PathEntry> path;
  std::size_t chosen = 0;

  const PathEntry& best() const { return path[chosen]; }
};

/// Criterion value of each path solution; +infinity where the residual variance vanishes.
inline std::vector<double> criterion_along_path(const Signal& y, std::span<const PottsSolution> solutions,
                                                const PenaltyContext& ctx) {
  std::vector<double> f(solutions.size());
  for (std::size_t j = 0; j < solutions.size(); ++j) {
    const auto& sol = solutions[j];
    const double rss = squared_distance(y.values(), sol.x_hat.values());
    const double s2 = rss / static_cast<double>(y.size() - 1);
    f[j] = detail::criterion_from_fit(rss, jump_count(sol.x_hat.values()), sol.lambda, s2, ctx);
  }
  return f;
}

/// First index of the minimal finite value (grid is increasing, so ties go
/// to the smaller lambda).
inline std::size_t argmin_finite(std::span<const double> f) {
  std::size_t arg = f.size();
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (std::isfinite(f[j]) && (arg == f.size() || f[j] < f[arg])) arg = j;
  }
  if (arg == f.size()) throw DegenerateSelectionError();
  return arg;
}

inline Selection select_from_path(const Signal& y, std::vector<PottsSolution> solutions, const PenaltyContext& ctx) {
  ctx.validate();
  Selection sel;
  sel.path.reserve(solutions.size());
  std::vector<double> f(solutions.size());
  for (std::size_t j = 0; j < solutions.size(); ++j) {
    const double rss = squared_distance(y.values(), solutions[j].x_hat.values());
    const double s2 = rss / static_cast<double>(y.size() - 1);
    const double lambda = solutions[j].lambda;
    f[j] = detail::criterion_from_fit(rss, jump_count(solutions[j].x_hat.values()), lambda, s2, ctx);
    sel.path.push_back(PathEntry{lambda, std::move(solutions[j]), s2, f[j]});
  }
  sel.chosen = argmin_finite(f);
  return sel;
}

/// Solve the Potts problem on every grid value and keep the one minimising F.
inline Selection auto_select(const Signal& y, std::span<const double> grid, const PenaltyContext& ctx,
                             unsigned workers = 1) {
  if (ctx.n != y.size()) throw ShapeError("penalty context n does not match the signal length");
  return select_from_path(y, solve_path(y, grid, workers), ctx);
}

inline Selection auto_select(const Signal& y, std::span<const double> grid, const Hyperparameters& hyper = {},
                             unsigned workers = 1) {
  return auto_select(y, grid, PenaltyContext{y.size(), hyper}, workers);
}

}  // namespace potts
