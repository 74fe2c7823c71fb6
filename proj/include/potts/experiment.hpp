#pragma once

// Monte Carlo harness: synthetic data per (axis value, realization), every
// requested method run on it, one record per method.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "potts/baselines.hpp"
#include "potts/core.hpp"
#include "potts/evalkit.hpp"
#include "potts/gibbs.hpp"
#include "potts/io.hpp"
#include "potts/penalty.hpp"
#include "potts/potts_dp.hpp"

namespace potts {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SweepAxis { anr, sigma, p, sigma0_sq };

enum class Method { automatic, mcmc, sicc, aic, sic, aicc, heuristic, oracle_mse, oracle_jaccard };

inline constexpr std::string_view kCsvHeader = "method,axis,axis_value,seed,lambda_hat,mse,jaccard,k_hat,seconds";

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::anr: return "anr";
    case SweepAxis::sigma: return "sigma";
    case SweepAxis::p: return "p";
    case SweepAxis::sigma0_sq: return "sigma0_sq";
  }
  return "?";
}

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::automatic: return "auto";
    case Method::mcmc: return "mcmc";
    case Method::sicc: return "sicc";
    case Method::aic: return "aic";
    case Method::sic: return "sic";
    case Method::aicc: return "aicc";
    case Method::heuristic: return "heuristic";
    case Method::oracle_mse: return "oracle_mse";
    case Method::oracle_jaccard: return "oracle_jaccard";
  }
  return "?";
}

inline SweepAxis parse_axis(std::string_view s) {
  for (auto a : {SweepAxis::anr, SweepAxis::sigma, SweepAxis::p, SweepAxis::sigma0_sq}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown sweep axis '" + std::string(s) + "'");
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::automatic, Method::mcmc, Method::sicc, Method::aic, Method::sic, Method::aicc,
                 Method::heuristic, Method::oracle_mse, Method::oracle_jaccard}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

struct ExperimentConfig {
  SweepAxis axis = SweepAxis::anr;
  std::vector<double> axis_values{2.0};
  std::size_t n = 1000;
  double p = 0.01;
  double x_min = 0.0;
  double x_max = 1.0;
  // Exactly one of these fixes the noise level unless the axis does. With
  // the sigma axis and `anr` set, the amplitude range is scaled instead.
  std::optional<double> sigma;
  std::optional<double> anr;
  Hyperparameters hyper{};
  GridSpec grid{};
  std::size_t realizations = 50;
  std::uint64_t base_seed = 1;
  std::vector<Method> methods{Method::automatic};
  std::size_t t_mc = 1000;
  bool timing = true;

  void validate() const {
    if (axis_values.empty()) throw ConfigError("axis values must not be empty");
    if (methods.empty()) throw ConfigError("method list must not be empty");
    if (realizations < 1) throw ConfigError("realizations must be at least 1");
    if (n < 3) throw ConfigError("n must be at least 3");
    if (sigma && anr) throw ConfigError("give either sigma or anr, not both");
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("p must lie in [0, 1)");
    if (!(x_max > x_min)) throw ConfigError("range must satisfy lo < hi");
    if (t_mc < 2) throw ConfigError("t_mc must be at least 2");
    if (sigma && !(*sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
    if (anr && !(*anr > 0.0)) throw ConfigError("anr must be positive");
    if (axis == SweepAxis::sigma && sigma) throw ConfigError("sigma is the sweep axis; drop the fixed value");
    if (axis == SweepAxis::anr && anr) throw ConfigError("anr is the sweep axis; drop the fixed value");
    for (double v : axis_values) {
      const bool ok = axis == SweepAxis::p ? (v >= 0.0 && v < 1.0) : (axis == SweepAxis::sigma ? v >= 0.0 : v > 0.0);
      if (!ok || !std::isfinite(v)) throw ConfigError("axis value out of range: " + format_real(v));
    }
    try {
      hyper.validate();
      (void)grid.values();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
};

/// Data and prior settings of one axis value.
struct PointSetup {
  SynthConfig synth;
  Hyperparameters hyper;
};

inline PointSetup point_setup(const ExperimentConfig& cfg, double axis_value) {
  PointSetup s;
  s.synth.n = cfg.n;
  s.synth.p = cfg.p;
  s.synth.x_min = cfg.x_min;
  s.synth.x_max = cfg.x_max;
  s.hyper = cfg.hyper;
  const double range = cfg.x_max - cfg.x_min;
  const double fixed_anr = cfg.anr.value_or(2.0);
  s.synth.sigma = cfg.sigma ? *cfg.sigma : sigma_for_anr(range, fixed_anr);
  switch (cfg.axis) {
    case SweepAxis::anr: s.synth.sigma = sigma_for_anr(range, axis_value); break;
    case SweepAxis::sigma:
      s.synth.sigma = axis_value;
      if (cfg.anr) s.synth.x_max = cfg.x_min + 3.0 * *cfg.anr * axis_value;
      break;
    case SweepAxis::p: s.synth.p = axis_value; break;
    case SweepAxis::sigma0_sq: s.hyper.sigma0_sq = axis_value; break;
  }
  return s;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Data seed of realization `counter`: splitmix64(base ^ splitmix64(counter)).
/// The counter is the realization index, so every axis value sees the same
/// underlying draws.
inline std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t counter) {
  return splitmix64(base_seed ^ splitmix64(counter));
}

/// Sampler seed derived from a data seed.
inline std::uint64_t chain_seed(std::uint64_t data_seed) { return splitmix64(data_seed ^ 0x6D636D63ULL); }

/// Grid indices minimizing a metric: the first and last index attaining the
/// minimum.
struct OracleChoice {
  std::size_t first = 0;
  std::size_t last = 0;
  double value = std::numeric_limits<double>::infinity();
};

inline OracleChoice oracle_choice(std::span<const double> metric) {
  OracleChoice c;
  bool found = false;
  for (std::size_t j = 0; j < metric.size(); ++j) {
    if (!std::isfinite(metric[j])) continue;
    if (!found || metric[j] < c.value) {
      c = OracleChoice{j, j, metric[j]};
      found = true;
    } else if (metric[j] == c.value) {
      c.last = j;
    }
  }
  if (!found) throw SelectionError("oracle: no finite metric value on the path");
  return c;
}

inline std::vector<double> mse_along_path(const Signal& x_bar, std::span<const PottsSolution> path) {
  std::vector<double> out(path.size());
  for (std::size_t j = 0; j < path.size(); ++j) out[j] = relative_mse(x_bar, path[j].x_hat);
  return out;
}

/// Jaccard error of each path solution; NaN where it is undefined (no true
/// and no estimated change).
inline std::vector<double> jaccard_along_path(std::span<const std::uint8_t> r_bar,
                                              std::span<const PottsSolution> path,
                                              const SmoothingKernel& kernel = gaussian_kernel_default()) {
  std::vector<double> out(path.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (j > 0 && path[j].seg.indicator == path[j - 1].seg.indicator) {
      out[j] = out[j - 1];
      continue;
    }
    try {
      out[j] = changepoint_jaccard(r_bar, path[j].seg.indicator, kernel);
    } catch (const DomainError&) {
    }
  }
  return out;
}

struct RunRecord {
  Method method = Method::automatic;
  SweepAxis axis = SweepAxis::anr;
  double axis_value = 0.0;
  std::size_t axis_index = 0;
  std::size_t realization = 0;
  std::uint64_t seed = 0;
  std::optional<double> lambda_hat;
  double mse = 0.0;
  double jaccard = 0.0;
  std::size_t k_hat = 0;
  double seconds = 0.0;
};

struct ErrorRecord {
  Method method = Method::automatic;
  SweepAxis axis = SweepAxis::anr;
  double axis_value = 0.0;
  std::size_t axis_index = 0;
  std::size_t realization = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct ExperimentResult {
  std::vector<RunRecord> rows;
  std::vector<ErrorRecord> errors;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline bool is_path_method(Method m) {
  return m != Method::mcmc && m != Method::heuristic;
}

inline std::optional<CriterionKind> criterion_of(Method m) {
  switch (m) {
    case Method::aic: return CriterionKind::AIC;
    case Method::sic: return CriterionKind::SIC;
    case Method::aicc: return CriterionKind::AICC;
    case Method::sicc: return CriterionKind::SICC;
    default: return std::nullopt;
  }
}

}  // namespace detail

/// All methods of `cfg` on realization `rep` of axis value `axis_index`.
inline ExperimentResult run_realization(const ExperimentConfig& cfg, std::size_t axis_index, std::size_t rep) {
  using detail::Clock;
  const double axis_value = cfg.axis_values.at(axis_index);
  const PointSetup setup = point_setup(cfg, axis_value);
  SynthConfig synth = setup.synth;
  synth.seed = realization_seed(cfg.base_seed, rep);
  const SynthData data = generate(synth);
  const auto grid = cfg.grid.values();
  const auto kernel = gaussian_kernel_default();

  ExperimentResult out;
  auto base_record = [&](Method m) {
    RunRecord r;
    r.method = m;
    r.axis = cfg.axis;
    r.axis_value = axis_value;
    r.axis_index = axis_index;
    r.realization = rep;
    r.seed = synth.seed;
    return r;
  };
  auto fail = [&](Method m, const std::string& msg) {
    out.errors.push_back(ErrorRecord{m, cfg.axis, axis_value, axis_index, rep, synth.seed, msg});
  };
  auto finish = [&](RunRecord r, const Signal& x_hat, const Indicator& r_hat, double seconds) {
    r.mse = relative_mse(data.x_bar, x_hat);
    r.jaccard = changepoint_jaccard(data.r_bar, r_hat, kernel);
    r.k_hat = count_segments(r_hat);
    r.seconds = cfg.timing ? seconds : 0.0;
    out.rows.push_back(r);
  };

  const bool need_path = std::any_of(cfg.methods.begin(), cfg.methods.end(), detail::is_path_method);
  std::vector<PottsSolution> path;
  double path_seconds = 0.0;
  if (need_path) {
    const auto t0 = Clock::now();
    path = solve_path(data.y, grid);
    path_seconds = detail::seconds_since(t0);
  }
  std::optional<std::vector<double>> mse_path;
  std::optional<std::vector<double>> jac_path;

  for (const Method m : cfg.methods) {
    try {
      RunRecord rec = base_record(m);
      if (m == Method::automatic) {
        const auto t0 = Clock::now();
        const PenaltyContext ctx{data.y.size(), setup.hyper};
        const auto f = criterion_along_path(data.y, path, ctx);
        const std::size_t j = argmin_finite(f);
        const double dt = path_seconds + detail::seconds_since(t0);
        rec.lambda_hat = path[j].lambda;
        finish(rec, path[j].x_hat, path[j].seg.indicator, dt);
      } else if (const auto kind = detail::criterion_of(m)) {
        const auto t0 = Clock::now();
        const std::size_t j = ic_select_index(data.y, path, *kind);
        const double dt = path_seconds + detail::seconds_since(t0);
        rec.lambda_hat = path[j].lambda;
        finish(rec, path[j].x_hat, path[j].seg.indicator, dt);
      } else if (m == Method::oracle_mse || m == Method::oracle_jaccard) {
        const auto t0 = Clock::now();
        std::optional<std::vector<double>>& cache = m == Method::oracle_mse ? mse_path : jac_path;
        if (!cache) {
          cache = m == Method::oracle_mse ? mse_along_path(data.x_bar, path)
                                          : jaccard_along_path(data.r_bar, path, kernel);
        }
        const std::size_t j = oracle_choice(*cache).first;
        const double dt = path_seconds + detail::seconds_since(t0);
        rec.lambda_hat = path[j].lambda;
        finish(rec, path[j].x_hat, path[j].seg.indicator, dt);
      } else if (m == Method::heuristic) {
        const auto t0 = Clock::now();
        const double s = mad_sigma(data.y);
        const double lambda = heuristic_lambda(data.y.size(), s * s);
        const auto sol = solve(data.y, lambda);
        const double dt = detail::seconds_since(t0);
        rec.lambda_hat = lambda;
        finish(rec, sol.x_hat, sol.seg.indicator, dt);
      } else if (m == Method::mcmc) {
        const auto t0 = Clock::now();
        Hyperparameters h = setup.hyper;
        h.mu0 = empirical_mean(data.y);
        h.sigma0_sq = empirical_variance(data.y);
        const auto chain = run_chain(data.y, h, cfg.t_mc, chain_seed(synth.seed));
        const auto est = estimators(chain);
        const double dt = detail::seconds_since(t0);
        // MSE from the posterior-mean signal, change points from the MAP sample.
        rec.mse = relative_mse(data.x_bar, est.x_mmse);
        const auto& r_map = chain.samples[est.map_index].r;
        rec.jaccard = changepoint_jaccard(data.r_bar, r_map, kernel);
        rec.k_hat = count_segments(r_map);
        rec.seconds = cfg.timing ? dt : 0.0;
        out.rows.push_back(rec);
      }
    } catch (const std::exception& e) {
      fail(m, e.what());
    }
  }
  return out;
}

/// Worker count: hardware concurrency, capped by POTTS_THREADS when set.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("POTTS_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

inline std::size_t method_rank(const ExperimentConfig& cfg, Method m) {
  return static_cast<std::size_t>(std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin());
}

/// Runs every (axis value, realization) pair on `workers` threads. Rows come
/// back sorted by axis index, realization, then method order in the config.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned workers = worker_count()) {
  cfg.validate();
  const std::size_t jobs = cfg.axis_values.size() * cfg.realizations;
  std::vector<ExperimentResult> parts(jobs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      parts[j] = run_realization(cfg, j / cfg.realizations, j % cfg.realizations);
    }
  };
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::min<std::size_t>(jobs, 1024)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  ExperimentResult all;
  for (auto& part : parts) {
    all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
    all.errors.insert(all.errors.end(), part.errors.begin(), part.errors.end());
  }
  auto key = [&](const auto& r) { return std::tuple(r.axis_index, r.realization, method_rank(cfg, r.method)); };
  std::stable_sort(all.rows.begin(), all.rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  std::stable_sort(all.errors.begin(), all.errors.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return all;
}

inline void write_rows_csv(std::ostream& out, std::span<const RunRecord> rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.axis) << ',' << format_real(r.axis_value) << ',' << r.seed << ','
        << (r.lambda_hat ? format_real(*r.lambda_hat) : std::string()) << ',' << format_real(r.mse) << ','
        << format_real(r.jaccard) << ',' << r.k_hat << ',' << format_real(r.seconds) << '\n';
  }
}

inline std::string csv_quote(std::string_view s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  q += '"';
  return q;
}

inline void write_errors_csv(std::ostream& out, std::span<const ErrorRecord> errors) {
  out << "method,axis,axis_value,seed,error\n";
  for (const auto& e : errors) {
    out << to_string(e.method) << ',' << to_string(e.axis) << ',' << format_real(e.axis_value) << ',' << e.seed << ','
        << csv_quote(e.message) << '\n';
  }
}

}  // namespace potts
