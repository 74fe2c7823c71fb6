#pragma once

// Partially collapsed Gibbs sampler for the hierarchical change-point model
//
//   y_i | r, mu, sigma^2  ~ N(mu_k, sigma^2)          i in R_k
//   r_i | p               ~ Bernoulli(p)              i < N,  r_N = 1
//   mu_k                  ~ N(mu0, sigma0^2)
//   sigma^2               ~ Jeffreys 1/sigma^2
//   p                     ~ Beta(alpha1, alpha0)      (alpha1 counts changes)
//
// Indicator sites are drawn with the amplitudes integrated out; amplitudes
// touched by a toggle are redrawn right away so (r, mu) stays consistent.
// One sweep visits sites 1..N-1, then all amplitudes, then sigma^2, then p.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "potts/baselines.hpp"
#include "potts/core.hpp"
#include "potts/potts_dp.hpp"

namespace potts {

using Rng = std::mt19937_64;

struct GibbsState {
  Indicator r;
  std::vector<double> mu;
  double sigma_sq = 1.0;
  double p = 0.5;

  Segmentation segmentation() const { return Segmentation{r, mu}; }

  void validate() const {
    const auto ranges = segments_from_indicator(r);
    if (ranges.size() != mu.size()) throw ShapeError("gibbs state: amplitude count does not match segments");
    if (!(sigma_sq > 0.0)) throw DomainError("gibbs state: sigma^2 must be positive");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("gibbs state: p must lie in (0, 1)");
  }
};

struct GibbsChain {
  std::vector<GibbsState> samples;
  std::vector<double> scores;  // negative log posterior of each sample
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::size_t degenerate_scale_count = 0;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Inverse-gamma prior IG(shape, scale) on sigma^2. shape = scale = 0 is the
/// Jeffreys prior used by the model; proper priors exist for calibration
/// tests that need to simulate from the prior.
struct NoisePrior {
  double shape = 0.0;
  double scale = 0.0;
};

/// log of  prod_i N(y_i; mu, sigma^2) N(mu; mu0, sigma0^2)  integrated over mu.
inline double marginal_segment_loglik(double sum_y, double sum_y_sq, std::size_t n, double sigma_sq, double mu0,
                                      double sigma0_sq) {
  if (n == 0) throw DomainError("marginal_segment_loglik: empty segment");
  if (!(sigma_sq > 0.0) || !(sigma0_sq > 0.0)) throw DomainError("marginal_segment_loglik: variances must be positive");
  const double nd = static_cast<double>(n);
  const double sz = sum_y - nd * mu0;
  const double szz = std::max(sum_y_sq - 2.0 * mu0 * sum_y + nd * mu0 * mu0, 0.0);
  return -0.5 * nd * std::log(2.0 * std::numbers::pi * sigma_sq) - 0.5 * std::log1p(nd * sigma0_sq / sigma_sq) -
         0.5 * (szz - sz * sz / (nd + sigma_sq / sigma0_sq)) / sigma_sq;
}

/// Observation-dependent pieces shared by the conditional samplers.
class PosteriorModel {
 public:
  PosteriorModel(const Signal& y, const Hyperparameters& hyper, NoisePrior noise = {})
      : y_(y), moments_(y.values()), hyper_(hyper), noise_(noise) {
    hyper_.validate();
    if (noise_.shape < 0.0 || noise_.scale < 0.0) throw DomainError("noise prior parameters must be non-negative");
  }

  const Signal& y() const noexcept { return y_; }
  const PrefixMoments& moments() const noexcept { return moments_; }
  const Hyperparameters& hyper() const noexcept { return hyper_; }
  const NoisePrior& noise() const noexcept { return noise_; }
  std::size_t size() const noexcept { return y_.size(); }

  double segment_loglik(std::size_t begin, std::size_t end, double sigma_sq) const {
    return marginal_segment_loglik(moments_.sum(begin, end), moments_.sum_sq(begin, end), end - begin, sigma_sq,
                                   hyper_.mu0 - moments_.offset(), hyper_.sigma0_sq);
  }

  /// Draw from the conditional of the amplitude of y[begin, end).
  double draw_amplitude(std::size_t begin, std::size_t end, double sigma_sq, Rng& rng) const {
    const double nd = static_cast<double>(end - begin);
    const double v = 1.0 / (nd / sigma_sq + 1.0 / hyper_.sigma0_sq);
    const double m = v * (moments_.sum(begin, end) / sigma_sq + (hyper_.mu0 - moments_.offset()) / hyper_.sigma0_sq);
    std::normal_distribution<double> normal(m, std::sqrt(v));
    return normal(rng) + moments_.offset();
  }

 private:
  Signal y_;
  PrefixMoments moments_;
  Hyperparameters hyper_;
  NoisePrior noise_;
};

namespace detail {

/// Site `site` splits [begin, end) into [begin, site + 1) and [site + 1, end).
/// `k` is the amplitude index of the left (or merged) segment.
inline void update_site(GibbsState& s, const PosteriorModel& model, std::size_t begin, std::size_t site,
                        std::size_t end, std::size_t k, Rng& rng) {
  const double log_odds = std::log(s.p) - std::log1p(-s.p) + model.segment_loglik(begin, site + 1, s.sigma_sq) +
                          model.segment_loglik(site + 1, end, s.sigma_sq) - model.segment_loglik(begin, end, s.sigma_sq);
  const double q = 1.0 / (1.0 + std::exp(-log_odds));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::uint8_t split = unit(rng) < q ? 1 : 0;
  if (split == s.r[site]) return;
  s.r[site] = split;
  const auto at = s.mu.begin() + static_cast<std::ptrdiff_t>(k);
  if (split) {
    *at = model.draw_amplitude(begin, site + 1, s.sigma_sq, rng);
    s.mu.insert(at + 1, model.draw_amplitude(site + 1, end, s.sigma_sq, rng));
  } else {
    *at = model.draw_amplitude(begin, end, s.sigma_sq, rng);
    s.mu.erase(at + 1);
  }
}

inline double gamma_draw(double shape, Rng& rng) {
  std::gamma_distribution<double> gamma(shape, 1.0);
  return gamma(rng);
}

}  // namespace detail

/// Redraws r at `site` (0-based, site < N - 1) from its conditional with the
/// amplitudes of the affected segments integrated out.
inline void sample_indicator_site(GibbsState& s, const PosteriorModel& model, std::size_t site, Rng& rng) {
  const std::size_t n = model.size();
  if (site + 1 >= n) throw DomainError("sample_indicator_site: the terminal site is fixed");
  if (s.r.size() != n) throw ShapeError("sample_indicator_site: indicator length mismatch");
  std::size_t begin = site;
  while (begin > 0 && s.r[begin - 1] == 0) --begin;
  std::size_t k = 0;
  for (std::size_t i = 0; i < begin; ++i) k += s.r[i];
  std::size_t end = site + 1;
  while (s.r[end] == 0) ++end;
  detail::update_site(s, model, begin, site, end + 1, k, rng);
}

/// One pass over sites 0..N-2 in order.
inline void sweep_indicators(GibbsState& s, const PosteriorModel& model, Rng& rng) {
  const std::size_t n = model.size();
  // next_end[j]: one past the first index >= j holding a 1. Updates at site i
  // never change next_end[j] for j > i.
  std::vector<std::size_t> next_end(n);
  next_end[n - 1] = n;
  for (std::size_t j = n - 1; j-- > 0;) next_end[j] = s.r[j] ? j + 1 : next_end[j + 1];

  std::size_t begin = 0;
  std::size_t k = 0;
  for (std::size_t site = 0; site + 1 < n; ++site) {
    detail::update_site(s, model, begin, site, next_end[site + 1], k, rng);
    if (s.r[site]) {
      begin = site + 1;
      ++k;
    }
  }
}

inline void sample_amplitudes(GibbsState& s, const PosteriorModel& model, Rng& rng) {
  const auto ranges = segments_from_indicator(s.r);
  s.mu.resize(ranges.size());
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    s.mu[k] = model.draw_amplitude(ranges[k].begin, ranges[k].end, s.sigma_sq, rng);
  }
}

/// sigma^2 ~ IG(N/2 + a, SSE/2 + b). Returns true when the scale had to be
/// floored at 1e-300 (zero residual).
inline bool sample_noise_variance(GibbsState& s, const PosteriorModel& model, Rng& rng) {
  const auto& mom = model.moments();
  const auto ranges = segments_from_indicator(s.r);
  double sse = 0.0;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const double d = s.mu[k] - mom.offset();
    const auto [b, e] = ranges[k];
    sse += mom.sum_sq(b, e) - 2.0 * d * mom.sum(b, e) + static_cast<double>(e - b) * d * d;
  }
  const double shape = 0.5 * static_cast<double>(model.size()) + model.noise().shape;
  double scale = 0.5 * std::max(sse, 0.0) + model.noise().scale;
  constexpr double min_scale = 1e-300;
  const bool floored = scale < min_scale;
  if (floored) scale = min_scale;
  s.sigma_sq = scale / detail::gamma_draw(shape, rng);
  return floored;
}

/// p ~ Beta(alpha1 + K - 1, alpha0 + N - K).
inline void sample_change_prob(GibbsState& s, const Hyperparameters& hyper, Rng& rng) {
  const double n = static_cast<double>(s.r.size());
  const double k = static_cast<double>(count_segments(s.r));
  const double x = detail::gamma_draw(hyper.alpha1 + k - 1.0, rng);
  const double z = detail::gamma_draw(hyper.alpha0 + n - k, rng);
  constexpr double tiny = std::numeric_limits<double>::min();
  s.p = std::clamp(x / (x + z), tiny, 1.0 - std::numeric_limits<double>::epsilon());
}

/// One full sweep. Returns true when the noise-variance scale was floored.
inline bool gibbs_sweep(GibbsState& s, const PosteriorModel& model, Rng& rng) {
  sweep_indicators(s, model, rng);
  sample_amplitudes(s, model, rng);
  const bool floored = sample_noise_variance(s, model, rng);
  sample_change_prob(s, model.hyper(), rng);
  return floored;
}

/// Negative log joint posterior (up to the Beta normalizer), term by term.
inline double neg_log_posterior(const GibbsState& s, const Signal& y, const Hyperparameters& hyper) {
  if (!(s.p > 0.0 && s.p < 1.0)) throw DomainError("neg_log_posterior: p must lie in (0, 1)");
  if (!(s.sigma_sq > 0.0)) throw DomainError("neg_log_posterior: sigma^2 must be positive");
  if (s.r.size() != y.size()) throw ShapeError("neg_log_posterior: indicator length mismatch");
  const Signal x = reconstruct_signal(s.segmentation());
  const double n = static_cast<double>(y.size());
  const double k = static_cast<double>(s.mu.size());
  const double log_prior = hyper.log_two_pi_sigma0_sq();
  double amp = 0.0;
  for (double m : s.mu) amp += (m - hyper.mu0) * (m - hyper.mu0);

  return squared_distance(y.values(), x.values()) / (2.0 * s.sigma_sq) +
         (k - 1.0) * (std::log((1.0 - s.p) / s.p) + 0.5 * log_prior) +
         0.5 * n * std::log(2.0 * std::numbers::pi * s.sigma_sq) - (n - 1.0) * std::log1p(-s.p) +
         std::log(s.sigma_sq) - (hyper.alpha1 - 1.0) * std::log(s.p) - (hyper.alpha0 - 1.0) * std::log1p(-s.p) +
         amp / (2.0 * hyper.sigma0_sq) + 0.5 * log_prior;
}

inline double empirical_mean(const Signal& y) {
  double s = 0.0;
  for (double v : y) s += v;
  return s / static_cast<double>(y.size());
}

/// Unbiased sample variance.
inline double empirical_variance(const Signal& y) {
  const double m = empirical_mean(y);
  double s = 0.0;
  for (double v : y) s += (v - m) * (v - m);
  return s / static_cast<double>(y.size() - 1);
}

/// Starting point: Potts solution at the heuristic lambda with a MAD noise
/// estimate, its segment means, residual variance and change rate.
inline GibbsState initial_state(const Signal& y) {
  const std::size_t n = y.size();
  double sigma_hat = n >= 3 ? mad_sigma(y) : 0.0;
  if (!(sigma_hat > 0.0)) sigma_hat = std::sqrt(empirical_variance(y));
  const auto sol = solve(y, heuristic_lambda(n, sigma_hat * sigma_hat));

  GibbsState s;
  s.r = sol.seg.indicator;
  s.mu = sol.seg.amplitudes;
  s.sigma_sq = squared_distance(y.values(), sol.x_hat.values()) / static_cast<double>(n - 1);
  if (!(s.sigma_sq > 0.0)) s.sigma_sq = empirical_variance(y) > 0.0 ? empirical_variance(y) : 1.0;
  const double nd = static_cast<double>(n);
  s.p = std::clamp(static_cast<double>(s.mu.size()) / nd, 1.0 / nd, 1.0 - 1.0 / nd);
  return s;
}

/// Runs `t_mc` sweeps from `initial_state(y)`; the first half is burn-in.
inline GibbsChain run_chain(const Signal& y, const Hyperparameters& hyper, std::size_t t_mc, std::uint64_t seed,
                            NoisePrior noise = {}) {
  if (t_mc < 2) throw DomainError("run_chain: need at least 2 iterations");
  const PosteriorModel model(y, hyper, noise);
  Rng rng(seed);
  GibbsState state = initial_state(y);

  GibbsChain chain;
  chain.seed = seed;
  chain.burn_in = t_mc / 2;
  chain.samples.reserve(t_mc);
  chain.scores.reserve(t_mc);
  for (std::size_t t = 0; t < t_mc; ++t) {
    if (gibbs_sweep(state, model, rng)) ++chain.degenerate_scale_count;
    const double score = neg_log_posterior(state, y, hyper);
    if (!std::isfinite(score)) throw SamplerError("non-finite posterior score at sweep " + std::to_string(t));
    chain.samples.push_back(state);
    chain.scores.push_back(score);
  }
  return chain;
}

struct Estimates {
  Signal x_map;
  Signal x_mmse;
  std::size_t map_index = 0;
};

/// MAP: best-scoring post-burn-in sample. MMSE: average reconstruction over
/// the post-burn-in samples.
inline Estimates estimators(const GibbsChain& chain) {
  if (chain.samples.empty()) throw DomainError("estimators: empty chain");
  const std::size_t first = std::min(chain.burn_in, chain.samples.size() - 1);
  std::size_t best = first;
  for (std::size_t t = first; t < chain.samples.size(); ++t) {
    if (chain.scores[t] < chain.scores[best]) best = t;
  }
  const std::size_t n = chain.samples[first].r.size();
  std::vector<double> mean(n, 0.0);
  for (std::size_t t = first; t < chain.samples.size(); ++t) {
    const auto& s = chain.samples[t];
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] += s.mu[k];
      k += s.r[i];
    }
  }
  const double count = static_cast<double>(chain.samples.size() - first);
  for (double& v : mean) v /= count;
  return Estimates{reconstruct_signal(chain.samples[best].segmentation()), Signal(std::move(mean)), best};
}

}  // namespace potts
