#pragma once

// JSON experiment configuration. Unknown keys are rejected.
//
// {
//   "axis": "anr" | "sigma" | "p" | "sigma0_sq",
//   "values": [ ... ],
//   "n": 1000, "p": 0.01, "range": [0, 1],
//   "sigma": 0.1667  or  "anr": 2,
//   "hyper": {"alpha0": 1, "alpha1": 1, "sigma0_sq": 1591.5, "mu0": 0},
//   "grid": {"lo": 1e-5, "hi": 1e5, "count": 500},
//   "realizations": 50, "base_seed": 1, "t_mc": 1000,
//   "methods": ["auto", "sicc", ...]
// }

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "potts/experiment.hpp"

namespace potts {

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, std::string_view where,
                           std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

template <class T>
T get_as(const nlohmann::json& obj, const char* key) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
void read_if(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = get_as<T>(obj, key);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown(j, "config",
                         {"axis", "values", "n", "p", "range", "sigma", "anr", "hyper", "grid", "realizations",
                          "base_seed", "t_mc", "methods"});
  ExperimentConfig cfg;
  if (!j.contains("axis") || !j.contains("values")) throw ConfigError("config needs 'axis' and 'values'");
  cfg.axis = parse_axis(detail::get_as<std::string>(j, "axis"));
  cfg.axis_values = detail::get_as<std::vector<double>>(j, "values");
  detail::read_if(j, "n", cfg.n);
  detail::read_if(j, "p", cfg.p);
  if (j.contains("range")) {
    const auto range = detail::get_as<std::vector<double>>(j, "range");
    if (range.size() != 2) throw ConfigError("'range' must be [lo, hi]");
    cfg.x_min = range[0];
    cfg.x_max = range[1];
  }
  if (j.contains("sigma")) cfg.sigma = detail::get_as<double>(j, "sigma");
  if (j.contains("anr")) cfg.anr = detail::get_as<double>(j, "anr");
  if (j.contains("hyper")) {
    const auto& h = j.at("hyper");
    detail::reject_unknown(h, "hyper", {"alpha0", "alpha1", "sigma0_sq", "mu0"});
    detail::read_if(h, "alpha0", cfg.hyper.alpha0);
    detail::read_if(h, "alpha1", cfg.hyper.alpha1);
    detail::read_if(h, "sigma0_sq", cfg.hyper.sigma0_sq);
    detail::read_if(h, "mu0", cfg.hyper.mu0);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::reject_unknown(g, "grid", {"lo", "hi", "count"});
    detail::read_if(g, "lo", cfg.grid.lo);
    detail::read_if(g, "hi", cfg.grid.hi);
    detail::read_if(g, "count", cfg.grid.count);
  }
  detail::read_if(j, "realizations", cfg.realizations);
  detail::read_if(j, "base_seed", cfg.base_seed);
  detail::read_if(j, "t_mc", cfg.t_mc);
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : detail::get_as<std::vector<std::string>>(j, "methods")) {
      cfg.methods.push_back(parse_method(name));
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(std::string_view(text));
}

}  // namespace potts
