#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "potts/gibbs.hpp"
#include "potts/penalty.hpp"

using namespace potts;

namespace {

// Penalty written out independently in long double.
long double phi_oracle(long double lambda, long double s2, long double n, long double a0, long double a1,
                       long double s02) {
  const long double pi = std::numbers::pi_v<long double>;
  const long double big_l = std::log(2.0L * pi * s02);
  const long double z = lambda / s2 - big_l / 2.0L;
  return n / 2.0L * std::log(2.0L * pi * s2) + std::log(s2) - lambda / s2 * (n + a0 - 2.0L) +
         (n + a0 - 1.0L) / 2.0L * big_l + (n + a0 + a1 - 3.0L) * std::log1p(std::exp(z));
}

PenaltyContext context(std::size_t n, double a0 = 1.0, double a1 = 1.0, double s02 = 1e4 / (2.0 * std::numbers::pi)) {
  Hyperparameters h;
  h.alpha0 = a0;
  h.alpha1 = a1;
  h.sigma0_sq = s02;
  return PenaltyContext{n, h};
}

}  // namespace

TEST(Phi, SmallLambdaLimitValue) {
  // N = 2, alpha0 = alpha1 = 1, 2 pi sigma0^2 = e^2, sigma^2 = 1, lambda -> 0+.
  // Reference from a 40-digit mpmath evaluation: log(2 pi) + 2 + log(1 + e^-1).
  const auto ctx = context(2, 1.0, 1.0, std::exp(2.0) / (2.0 * std::numbers::pi));
  EXPECT_NEAR(phi(1e-300, 1.0, ctx), 4.151138753927568, 1e-13);
  EXPECT_NEAR(static_cast<double>(phi_oracle(0.0L, 1.0L, 2.0L, 1.0L, 1.0L, std::exp(2.0L) / (2.0L * std::numbers::pi_v<long double>))),
              4.151138753927568, 1e-13);
}

TEST(Phi, MatchesIndependentFormula) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double lambda = std::pow(10.0, -4.0 + 7.0 * u(rng));
    const double s2 = std::pow(10.0, -3.0 + 4.0 * u(rng));
    const std::size_t n = 2 + rng() % 5000;
    const double a0 = 0.5 + 3.0 * u(rng), a1 = 0.5 + 3.0 * u(rng);
    const double s02 = std::pow(10.0, -2.0 + 6.0 * u(rng));
    const double got = phi(lambda, s2, context(n, a0, a1, s02));
    const double want = static_cast<double>(phi_oracle(lambda, s2, static_cast<long double>(n), a0, a1, s02));
    EXPECT_NEAR(got, want, 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST(Phi, UniformPriorFormAgrees) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double lambda = std::pow(10.0, -4.0 + 7.0 * u(rng));
    const double s2 = std::pow(10.0, -3.0 + 4.0 * u(rng));
    const std::size_t n = 2 + rng() % 5000;
    const double s02 = std::pow(10.0, -2.0 + 6.0 * u(rng));
    const double a = phi(lambda, s2, context(n, 1.0, 1.0, s02));
    const double b = phi_uniform_prior(lambda, s2, n, s02);
    // Both forms sum terms of size n * lambda / s2 that cancel.
    const double scale = static_cast<double>(n) * (lambda / s2 + std::abs(std::log(s2)) + std::abs(std::log(s02)) + 4.0);
    EXPECT_NEAR(a, b, 1e-14 * scale);
  }
}

TEST(Phi, LargeLambdaSlope) {
  const double s2 = 0.7;
  for (double a1 : {1.0, 3.0}) {
    const auto ctx = context(50, 1.0, a1, 10.0);
    const double lambda = 200.0;
    const double h = 1e-3;
    const double slope = (phi(lambda + h, s2, ctx) - phi(lambda - h, s2, ctx)) / (2.0 * h);
    EXPECT_NEAR(slope, (a1 - 1.0) / s2, 1e-6);
  }
}

TEST(Phi, DomainErrors) {
  const auto ctx = context(10);
  EXPECT_THROW(phi(0.0, 1.0, ctx), DomainError);
  EXPECT_THROW(phi(1.0, 0.0, ctx), DomainError);
  EXPECT_THROW(phi(1.0, 1.0, context(10, 1.0, 1.0, -1.0)), DomainError);
  EXPECT_THROW(phi_uniform_prior(1.0, 1.0, 10, 0.0), DomainError);
}

TEST(FullCriterion, Examples) {
  const Signal y({1.0, 2.0, 3.0, 4.0});
  const auto ctx = context(4);
  EXPECT_DOUBLE_EQ(full_criterion(y, y, 0.3, 0.5, ctx), 3.0 * 0.3 / 0.5 + phi(0.3, 0.5, ctx));
  const Signal flat({5.0, 5.0, 5.0, 5.0});
  EXPECT_DOUBLE_EQ(full_criterion(flat, flat, 0.3, 0.5, ctx), phi(0.3, 0.5, ctx));

  const Signal x({1.5, 1.5, 3.5, 3.5});
  const double s2 = 0.8;
  const double lambda = 0.4;
  const double delta = full_criterion(y, x, 2.0 * lambda, s2, ctx) - full_criterion(y, x, lambda, s2, ctx);
  EXPECT_NEAR(delta, lambda / s2 * 1.0 + phi(2.0 * lambda, s2, ctx) - phi(lambda, s2, ctx), 1e-12);
  EXPECT_EQ(full_criterion(y, y, 0.3, 0.0, ctx), std::numeric_limits<double>::infinity());
}

TEST(ResidualVariance, Examples) {
  const Signal y({1.0, -1.0, 0.0});
  EXPECT_DOUBLE_EQ(residual_variance(y, y), 0.0);
  EXPECT_DOUBLE_EQ(residual_variance(y, Signal({0.0, 0.0, 0.0})), 1.0);
  const double c = 0.3;
  const Signal z({c, c, c, c, c});
  EXPECT_NEAR(residual_variance(z, Signal({0, 0, 0, 0, 0})), c * c * 5.0 / 4.0, 1e-15);
}

TEST(LambdaGrid, Examples) {
  const auto g = lambda_grid(1e-5, 1e5, 500);
  ASSERT_EQ(g.size(), 500u);
  EXPECT_EQ(g.front(), 1e-5);
  EXPECT_EQ(g.back(), 1e5);
  for (std::size_t j = 1; j < g.size(); ++j) EXPECT_GT(g[j], g[j - 1]);
  const auto three = lambda_grid(1, 100, 3);
  EXPECT_NEAR(three[1], 10.0, 1e-12);
  const auto five = lambda_grid(1e-2, 1e2, 5);
  const std::vector<double> want{1e-2, 1e-1, 1, 1e1, 1e2};
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(five[j], want[j], 1e-12 * want[j]);
  EXPECT_THROW(lambda_grid(0.0, 1.0, 3), DomainError);
  EXPECT_THROW(lambda_grid(2.0, 1.0, 3), DomainError);
  EXPECT_THROW(lambda_grid(1.0, 2.0, 1), DomainError);
}

TEST(ProbLambda, Conversions) {
  const double s02 = 3.0;
  const double half_l = 0.5 * std::log(2.0 * std::numbers::pi * s02);
  EXPECT_NEAR(prob_from_lambda(0.7 * half_l, 0.7, s02), 0.5, 1e-15);
  EXPECT_NEAR(prob_from_lambda(0.7 * (half_l + std::log(99.0)), 0.7, s02), 0.01, 1e-14);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double s2 = 0.01 + u(rng);
    const double lambda = s2 * (half_l + 5.0 * u(rng));
    const double back = lambda_from_prob(prob_from_lambda(lambda, s2, s02), s2, s02);
    EXPECT_NEAR(back, lambda, 1e-9);
  }
}

// The penalized criterion plus the amplitude-prior quadratic reproduces the
// negative log posterior for every configuration.
TEST(PosteriorIdentity, NegLogPosteriorMatchesCriterion) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    Hyperparameters h;
    h.alpha0 = 0.5 + 4.0 * u(rng);
    h.alpha1 = 0.5 + 4.0 * u(rng);
    h.sigma0_sq = 0.5 + 50.0 * u(rng);
    h.mu0 = -2.0 + 4.0 * u(rng);
    GibbsState s;
    s.r.assign(n, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) s.r[i] = u(rng) < 0.3 ? 1 : 0;
    s.r.back() = 1;
    for (std::size_t k = 0; k < count_segments(s.r); ++k) s.mu.push_back(-3.0 + 6.0 * u(rng));
    s.sigma_sq = 0.05 + 2.0 * u(rng);
    s.p = 0.01 + 0.45 * u(rng);
    std::vector<double> yv(n);
    for (auto& v : yv) v = -4.0 + 8.0 * u(rng);
    const Signal y(yv);
    const Signal x = reconstruct_signal(s.segmentation());

    const double lambda = lambda_from_prob(s.p, s.sigma_sq, h.sigma0_sq);
    ASSERT_GT(lambda, 0.0);
    double quad = 0.0;
    for (double m : s.mu) quad += (m - h.mu0) * (m - h.mu0);
    quad /= 2.0 * h.sigma0_sq;
    const double f = full_criterion(y, x, lambda, s.sigma_sq, PenaltyContext{n, h});
    const double gap = neg_log_posterior(s, y, h) - f - quad;
    EXPECT_NEAR(gap, 0.0, 1e-9) << "trial " << trial;
  }
}

TEST(AutoSelect, ChosenIsMinimumOfFinite) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 0.2);
  std::vector<double> v(200);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i < 80 ? 0.0 : (i < 150 ? 1.0 : 0.4)) + g(rng);
  const Signal y(v);
  const auto sel = auto_select(y, GridSpec{}.values());
  ASSERT_EQ(sel.path.size(), 500u);
  for (const auto& e : sel.path) {
    if (!e.degenerate()) {
      EXPECT_GE(e.f_value, sel.best().f_value);
    }
  }
  EXPECT_EQ(sel.best().lambda, sel.path[sel.chosen].solution.lambda);
  EXPECT_EQ(sel.best().solution.segment_count(), 3u);
}

TEST(AutoSelect, MatchesBruteForceSelection) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> v(10);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i < 5 ? 0.0 : 2.0) + g(rng);
    const auto grid = lambda_grid(1e-3, 1e2, 25);
    const auto ctx = context(v.size());
    const auto sel = auto_select(Signal(v), grid, ctx);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto bf = oracle::potts_brute_force(v, grid[j]);
      double rss = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) rss += (v[i] - bf.x[i]) * (v[i] - bf.x[i]);
      const double s2 = rss / static_cast<double>(v.size() - 1);
      if (!(s2 > 0.0)) continue;
      std::size_t jumps = 0;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) jumps += bf.indicator[i];
      const double f = rss / (2.0 * s2) + grid[j] / s2 * static_cast<double>(jumps) +
                       static_cast<double>(phi_oracle(grid[j], s2, 10.0L, 1.0L, 1.0L, ctx.hyper.sigma0_sq));
      if (f < best) {
        best = f;
        arg = j;
      }
    }
    EXPECT_EQ(sel.chosen, arg) << "trial " << trial;
    EXPECT_NEAR(sel.best().f_value, best, 1e-9 * std::abs(best));
  }
}

TEST(AutoSelect, ConstantSignalIsDegenerate) {
  const Signal y(std::vector<double>(30, 1.5));
  try {
    (void)auto_select(y, GridSpec{}.values());
    FAIL() << "expected DegenerateSelectionError";
  } catch (const DegenerateSelectionError& e) {
    EXPECT_EQ(std::string(e.what()), "degenerate MAP: zero residual variance on all grid points");
  }
}

TEST(AutoSelect, TwoSegmentsLowNoise) {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> g(0.0, 0.01);
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i < 50 ? 0.0 : 10.0) + g(rng);
  const auto sel = auto_select(Signal(v), GridSpec{}.values());
  EXPECT_EQ(sel.best().solution.segment_count(), 2u);
  EXPECT_EQ(sel.best().solution.seg.indicator[49], 1);
}

TEST(AutoSelect, IgnoresMu0) {
  std::mt19937_64 rng(18);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> v(150);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 50 < 25 ? 0.0 : 1.0) + g(rng);
  Hyperparameters a, b;
  b.mu0 = 123.0;
  const auto grid = GridSpec{}.values();
  EXPECT_EQ(auto_select(Signal(v), grid, a).chosen, auto_select(Signal(v), grid, b).chosen);
}

TEST(AutoSelect, ShapeMismatch) {
  const Signal y({0.0, 1.0, 0.5});
  EXPECT_THROW(auto_select(y, GridSpec{}.values(), PenaltyContext{4, {}}), ShapeError);
}
