// Minimal library walk-through: simulate, denoise with automatic lambda,
// score against the truth, then compare with the Gibbs sampler.

#include <cstdio>

#include "potts/potts.hpp"

int main() {
  potts::SynthConfig cfg;
  cfg.n = 500;
  cfg.p = 0.01;
  cfg.sigma = potts::sigma_for_anr(1.0, 2.0);
  cfg.seed = 2024;
  const auto data = potts::generate(cfg);

  const auto grid = potts::GridSpec{}.values();
  const auto sel = potts::auto_select(data.y, grid);
  const auto& best = sel.best();
  std::printf("auto:  lambda=%.4g  sigma^2=%.4g  K=%zu  mse=%.4f  jaccard=%.4f\n", best.lambda, best.sigma_hat_sq,
              best.solution.segment_count(), potts::relative_mse(data.x_bar, best.solution.x_hat),
              potts::changepoint_jaccard(data.r_bar, best.solution.seg.indicator));

  potts::Hyperparameters h;
  h.mu0 = potts::empirical_mean(data.y);
  h.sigma0_sq = potts::empirical_variance(data.y);
  const auto chain = potts::run_chain(data.y, h, 1000, 7);
  const auto est = potts::estimators(chain);
  std::printf("mcmc:  K_map=%zu  mse_mmse=%.4f  mse_map=%.4f\n", chain.samples[est.map_index].mu.size(),
              potts::relative_mse(data.x_bar, est.x_mmse), potts::relative_mse(data.x_bar, est.x_map));
  std::printf("truth: K=%zu\n", potts::count_segments(data.r_bar));
}
