#pragma once

// Plain-text signal files: one real per line, `#` starts a comment, blank
// lines are skipped. A single-column CSV with a non-numeric header line is
// accepted too.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "potts/core.hpp"

namespace potts {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool parse_real(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace detail

/// Shortest decimal that reads back to the same double.
inline std::string format_real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_real: conversion failed");
  return std::string(buf, ptr);
}

inline std::vector<double> parse_values(std::istream& in, const std::string& source) {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    if (text.find(',') != std::string_view::npos) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected a single column");
    }
    double v = 0.0;
    if (!detail::parse_real(text, v)) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw InputError(source + ":" + std::to_string(line_no) + ": not a number: '" + std::string(text) + "'");
    }
    header_allowed = false;
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return parse_values(in, path);
}

inline Signal read_signal(const std::string& path) {
  auto values = read_values(path);
  try {
    return Signal(std::move(values));
  } catch (const DomainError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_values(const std::string& path, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  for (double v : values) out << format_real(v) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

inline void write_indicator(const std::string& path, std::span<const std::uint8_t> r) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  for (auto v : r) out << static_cast<int>(v) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

/// Reads a 0/1 column, e.g. a file written by write_indicator.
inline Indicator read_indicator(const std::string& path) {
  const auto values = read_values(path);
  Indicator r;
  r.reserve(values.size());
  for (double v : values) {
    if (v != 0.0 && v != 1.0) throw InputError(path + ": indicator entries must be 0 or 1");
    r.push_back(v == 1.0 ? 1 : 0);
  }
  return r;
}

}  // namespace potts
