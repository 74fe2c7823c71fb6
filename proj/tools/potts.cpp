// potts: command-line front end.
//
//   potts denoise    --input y.csv [--auto | --lambda L] [--grid lo:hi:count] [--out xhat.csv]
//   potts synth      --n 1000 --p 0.01 --range 0,1 --sigma 0.1667 --seed 7 [--out-dir DIR]
//   potts mcmc       --input y.csv [--tmc 1000] [--seed S] [--out-dir DIR]
//   potts experiment CONFIG.json [--out results.csv] [--no-timing]
//   potts metrics    --truth xbar.csv --estimate xhat.csv | --truth-r rbar.csv --estimate-r rhat.csv
//
// Exit codes: 0 ok, 2 input or configuration error, 3 degenerate selection,
// 4 sampler failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "potts/config.hpp"
#include "potts/potts.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kDegenerate = 3;
constexpr int kSamplerFailure = 4;

struct HyperFlags {
  std::optional<double> alpha0, alpha1, sigma0_sq, log_two_pi_sigma0_sq, mu0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--alpha0", alpha0, "Beta prior weight on 'no change'");
    cmd.add_option("--alpha1", alpha1, "Beta prior weight on 'change'");
    auto* s = cmd.add_option("--sigma0-sq", sigma0_sq, "amplitude prior variance");
    cmd.add_option("--log-two-pi-sigma0-sq", log_two_pi_sigma0_sq, "amplitude prior as log(2 pi sigma0^2)")->excludes(s);
    cmd.add_option("--mu0", mu0, "amplitude prior mean");
  }

  potts::Hyperparameters apply(potts::Hyperparameters h) const {
    if (alpha0) h.alpha0 = *alpha0;
    if (alpha1) h.alpha1 = *alpha1;
    if (sigma0_sq) h.sigma0_sq = *sigma0_sq;
    if (log_two_pi_sigma0_sq) {
      h.sigma0_sq = potts::Hyperparameters::from_log_two_pi_sigma0_sq(*log_two_pi_sigma0_sq).sigma0_sq;
    }
    if (mu0) h.mu0 = *mu0;
    h.validate();
    return h;
  }
};

potts::GridSpec parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 3) throw potts::InputError("--grid expects lo:hi:count");
  potts::GridSpec g;
  try {
    std::size_t used = 0;
    g.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    g.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    const long count = std::stol(parts[2], &used);
    if (used != parts[2].size() || count < 2) throw std::invalid_argument(parts[2]);
    g.count = static_cast<std::size_t>(count);
  } catch (const std::logic_error&) {
    throw potts::InputError("--grid: cannot parse '" + text + "'");
  }
  return g;
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw potts::InputError("cannot create directory " + dir + ": " + ec.message());
  return p;
}

struct DenoiseArgs {
  std::string input;
  bool automatic = false;
  std::optional<double> lambda;
  std::string grid = "1e-5:1e5:500";
  std::string out;
  std::string summary;
  HyperFlags hyper;
};

int run_denoise(const DenoiseArgs& a) {
  const auto y = potts::read_signal(a.input);
  std::ostringstream report;
  potts::Signal x_hat = y;
  if (a.lambda) {
    const auto sol = potts::solve(y, *a.lambda);
    const double s2 = potts::residual_variance(y, sol.x_hat);
    report << "mode=fixed\nlambda=" << potts::format_real(sol.lambda) << "\nsigma_sq_hat=" << potts::format_real(s2)
           << "\nk_hat=" << sol.segment_count() << "\nobjective=" << potts::format_real(sol.objective) << '\n';
    x_hat = sol.x_hat;
  } else {
    const auto grid = parse_grid(a.grid).values();
    const auto hyper = a.hyper.apply({});
    const auto sel = potts::auto_select(y, grid, hyper);
    const auto& best = sel.best();
    report << "mode=auto\nlambda=" << potts::format_real(best.lambda)
           << "\nsigma_sq_hat=" << potts::format_real(best.sigma_hat_sq) << "\nk_hat=" << best.solution.segment_count()
           << "\nF=" << potts::format_real(best.f_value) << "\ngrid_index=" << sel.chosen << '\n';
    x_hat = best.solution.x_hat;
  }
  std::cout << report.str();
  if (!a.out.empty()) potts::write_values(a.out, x_hat.values());
  if (!a.summary.empty()) {
    std::ofstream s(a.summary);
    if (!(s << report.str())) throw potts::InputError("cannot write " + a.summary);
  }
  return kOk;
}

struct SynthArgs {
  std::size_t n = 1000;
  double p = 0.01;
  std::vector<double> range{0.0, 1.0};
  double sigma = 1.0 / 6.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_synth(const SynthArgs& a) {
  if (a.range.size() != 2) throw potts::InputError("--range expects lo,hi");
  potts::SynthConfig cfg;
  cfg.n = a.n;
  cfg.p = a.p;
  cfg.x_min = a.range[0];
  cfg.x_max = a.range[1];
  cfg.sigma = a.sigma;
  cfg.seed = a.seed;
  const auto data = potts::generate(cfg);
  const auto dir = prepare_dir(a.out_dir);
  potts::write_values((dir / "y.csv").string(), data.y.values());
  potts::write_values((dir / "xbar.csv").string(), data.x_bar.values());
  potts::write_indicator((dir / "rbar.csv").string(), data.r_bar);
  std::cout << "n=" << cfg.n << "\nsegments=" << potts::count_segments(data.r_bar) << "\nseed=" << cfg.seed << '\n';
  return kOk;
}

struct McmcArgs {
  std::string input;
  std::size_t t_mc = 1000;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  HyperFlags hyper;
};

int run_mcmc(const McmcArgs& a) {
  const auto y = potts::read_signal(a.input);
  potts::Hyperparameters defaults;
  defaults.mu0 = potts::empirical_mean(y);
  defaults.sigma0_sq = potts::empirical_variance(y);
  if (!(defaults.sigma0_sq > 0.0) && !a.hyper.sigma0_sq && !a.hyper.log_two_pi_sigma0_sq) {
    throw potts::InputError("constant input: empirical variance is zero, pass --sigma0-sq");
  }
  const auto hyper = a.hyper.apply(defaults);
  potts::GibbsChain chain;
  try {
    chain = potts::run_chain(y, hyper, a.t_mc, a.seed);
  } catch (const potts::SamplerError&) {
    throw;
  } catch (const std::exception& e) {
    throw potts::SamplerError(e.what());
  }
  const auto est = potts::estimators(chain);

  const auto dir = prepare_dir(a.out_dir);
  potts::write_values((dir / "x_map.csv").string(), est.x_map.values());
  potts::write_values((dir / "x_mmse.csv").string(), est.x_mmse.values());

  double sigma_sq = 0.0, p = 0.0;
  for (std::size_t t = chain.burn_in; t < chain.size(); ++t) {
    sigma_sq += chain.samples[t].sigma_sq;
    p += chain.samples[t].p;
  }
  const double kept = static_cast<double>(chain.size() - chain.burn_in);
  nlohmann::json summary = {
      {"t_mc", a.t_mc},
      {"burn_in", chain.burn_in},
      {"kept", chain.size() - chain.burn_in},
      {"seed", a.seed},
      {"map_index", est.map_index},
      {"k_map", chain.samples[est.map_index].mu.size()},
      {"score_map", chain.scores[est.map_index]},
      {"sigma_sq_mean", sigma_sq / kept},
      {"p_mean", p / kept},
      {"degenerate_scale_count", chain.degenerate_scale_count},
      {"hyper", {{"alpha0", hyper.alpha0}, {"alpha1", hyper.alpha1}, {"sigma0_sq", hyper.sigma0_sq}, {"mu0", hyper.mu0}}},
  };
  std::ofstream s(dir / "summary.json");
  s << summary.dump(2) << '\n';
  if (!s) throw potts::InputError("cannot write summary.json");
  std::cout << summary.dump(2) << '\n';
  return kOk;
}

struct ExperimentArgs {
  std::string config;
  std::string out;
  bool no_timing = false;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  auto cfg = potts::load_config(a.config);
  cfg.timing = !a.no_timing;
  const auto result = potts::run_experiment(cfg);
  if (a.out.empty()) {
    potts::write_rows_csv(std::cout, result.rows);
  } else {
    std::ofstream out(a.out);
    potts::write_rows_csv(out, result.rows);
    if (!out) throw potts::InputError("cannot write " + a.out);
    std::ofstream err(a.out + ".errors.csv");
    potts::write_errors_csv(err, result.errors);
    if (!err) throw potts::InputError("cannot write " + a.out + ".errors.csv");
  }
  if (!result.errors.empty()) {
    std::cerr << result.errors.size() << " method runs failed";
    if (!a.out.empty()) std::cerr << ", see " << a.out << ".errors.csv";
    std::cerr << '\n';
  }
  return kOk;
}

struct MetricsArgs {
  std::string truth, estimate, truth_r, estimate_r;
  std::string kernel = "gaussian";
};

int run_metrics(const MetricsArgs& a) {
  if (a.truth.empty() && a.estimate.empty() && a.truth_r.empty() && a.estimate_r.empty()) {
    throw potts::InputError("give --truth/--estimate and/or --truth-r/--estimate-r");
  }
  if (a.truth.empty() != a.estimate.empty()) throw potts::InputError("--truth and --estimate go together");
  if (a.truth_r.empty() != a.estimate_r.empty()) throw potts::InputError("--truth-r and --estimate-r go together");
  if (!a.truth.empty()) {
    const auto x_bar = potts::read_signal(a.truth);
    const auto x_hat = potts::read_signal(a.estimate);
    if (x_bar.size() != x_hat.size()) throw potts::InputError("signals differ in length");
    std::cout << "mse=" << potts::format_real(potts::relative_mse(x_bar, x_hat)) << '\n';
  }
  if (!a.truth_r.empty()) {
    const auto r_bar = potts::read_indicator(a.truth_r);
    const auto r_hat = potts::read_indicator(a.estimate_r);
    if (r_bar.size() != r_hat.size()) throw potts::InputError("indicators differ in length");
    const auto kernel = a.kernel == "identity" ? potts::SmoothingKernel::identity() : potts::gaussian_kernel_default();
    std::cout << "jaccard=" << potts::format_real(potts::changepoint_jaccard(r_bar, r_hat, kernel)) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-constant denoising with automatic Potts parameter selection"};
  app.require_subcommand(1, 1);

  DenoiseArgs den;
  auto* denoise = app.add_subcommand("denoise", "denoise a signal");
  denoise->add_option("--input", den.input, "signal file")->required();
  auto* auto_flag = denoise->add_flag("--auto", den.automatic, "select lambda automatically (default)");
  denoise->add_option("--lambda", den.lambda, "solve at this lambda only")->excludes(auto_flag);
  denoise->add_option("--grid", den.grid, "lambda grid lo:hi:count, log-spaced")->capture_default_str();
  denoise->add_option("--out", den.out, "write the denoised signal here");
  denoise->add_option("--summary", den.summary, "write the summary here as well");
  den.hyper.add_to(*denoise);

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "generate a synthetic piecewise-constant signal");
  synth->add_option("--n", syn.n, "length")->capture_default_str();
  synth->add_option("--p", syn.p, "change probability")->capture_default_str();
  synth->add_option("--range", syn.range, "amplitude range lo,hi")->delimiter(',')->expected(2);
  synth->add_option("--sigma", syn.sigma, "noise standard deviation")->capture_default_str();
  synth->add_option("--seed", syn.seed, "seed")->capture_default_str();
  synth->add_option("--out-dir", syn.out_dir, "output directory")->capture_default_str();

  McmcArgs mc;
  auto* mcmc = app.add_subcommand("mcmc", "run the Gibbs sampler");
  mcmc->add_option("--input", mc.input, "signal file")->required();
  mcmc->add_option("--tmc", mc.t_mc, "number of sweeps")->capture_default_str();
  mcmc->add_option("--seed", mc.seed, "seed")->capture_default_str();
  mcmc->add_option("--out-dir", mc.out_dir, "output directory")->capture_default_str();
  mc.hyper.add_to(*mcmc);

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "run a Monte Carlo sweep from a JSON config");
  experiment->add_option("config", ex.config, "config file")->required();
  experiment->add_option("--out", ex.out, "results CSV (stdout if absent)");
  experiment->add_flag("--no-timing", ex.no_timing, "write 0 for seconds (byte-reproducible output)");

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "relative MSE and Jaccard error between two files");
  metrics->add_option("--truth", met.truth, "reference signal");
  metrics->add_option("--estimate", met.estimate, "estimated signal");
  metrics->add_option("--truth-r", met.truth_r, "reference change indicator");
  metrics->add_option("--estimate-r", met.estimate_r, "estimated change indicator");
  metrics->add_option("--kernel", met.kernel, "gaussian or identity")
      ->check(CLI::IsMember({"gaussian", "identity"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*denoise) return run_denoise(den);
    if (*synth) return run_synth(syn);
    if (*mcmc) return run_mcmc(mc);
    if (*experiment) return run_experiment_cmd(ex);
    if (*metrics) return run_metrics(met);
  } catch (const potts::DegenerateSelectionError& e) {
    std::cerr << e.what() << '\n';
    return kDegenerate;
  } catch (const potts::SamplerError& e) {
    std::cerr << "sampler failure: " << e.what() << '\n';
    return kSamplerFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
