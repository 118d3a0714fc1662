#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "evret/errors.hpp"
#include "evret/numeric.hpp"
#include "evret/similarity.hpp"
#include "evret/transport.hpp"

namespace evret {

struct PipelineConfig {
  double tau = 0.1;    // evidence temperature
  double beta = 0.3;   // threshold floor/ceiling
  double gamma = 0.2;  // calibration mixing weight
  BranchWeights weights;
  OTConfig ot;
  double margin = 0.2;  // triplet margin; no reference value, placeholder default
  double lambda_c = 0.02, lambda_f = 0.02;
  double diversity_delta = 0.15, diversity_scale = 32.0;
  int stage = 1;
  std::uint64_t seed = 42;
  int threads = 1;

  void validate() const {
    if (!(tau > 0.0)) throw config_error("config: tau must be > 0");
    if (!(beta > 0.0 && beta < 1.0)) throw config_error("config: beta must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw config_error("config: gamma must lie in [0, 1]");
    weights.validate();
    ot.validate();
    if (!(margin >= 0.0)) throw config_error("config: margin must be >= 0");
    if (!(lambda_c >= 0.0 && lambda_f >= 0.0))
      throw config_error("config: lambda_c/lambda_f must be >= 0");
    if (!(diversity_delta > 0.0)) throw config_error("config: diversity_delta must be > 0");
    if (!(diversity_scale > 0.0)) throw config_error("config: diversity_scale must be > 0");
    if (stage != 1 && stage != 2) throw config_error("config: stage must be 1 or 2");
    if (threads < 1) throw config_error("config: threads must be >= 1");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double config_double(std::string_view v, int line) {
  double out;
  if (!parse_double(v, out))
    throw config_error("config line " + std::to_string(line) + ": expected a number, got '" +
                       std::string(v) + "'");
  return out;
}

inline std::uint64_t config_u64(std::string_view v, int line) {
  std::uint64_t out;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw config_error("config line " + std::to_string(line) +
                       ": expected an unsigned integer, got '" + std::string(v) + "'");
  return out;
}

inline int config_int(std::string_view v, int line) {
  int out;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw config_error("config line " + std::to_string(line) + ": expected an integer, got '" +
                       std::string(v) + "'");
  return out;
}

}  // namespace detail

// key = value lines, optional [section] headers (section becomes a dotted key
// prefix), # comments. Unknown keys are rejected so typos surface instead of
// silently running on defaults.
inline PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("config line " + std::to_string(line_no) + ": unterminated section");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = std::string(detail::trim(line.substr(0, eq)));
    std::string_view val = detail::trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;

    if (key == "tau") cfg.tau = detail::config_double(val, line_no);
    else if (key == "beta") cfg.beta = detail::config_double(val, line_no);
    else if (key == "gamma") cfg.gamma = detail::config_double(val, line_no);
    else if (key == "alpha_f") cfg.weights.alpha_f = detail::config_double(val, line_no);
    else if (key == "alpha_c") cfg.weights.alpha_c = detail::config_double(val, line_no);
    else if (key == "stage") cfg.stage = detail::config_int(val, line_no);
    else if (key == "seed") cfg.seed = detail::config_u64(val, line_no);
    else if (key == "threads") cfg.threads = detail::config_int(val, line_no);
    else if (key == "ot.epsilon") cfg.ot.epsilon = detail::config_double(val, line_no);
    else if (key == "ot.max_iterations") cfg.ot.max_iterations = detail::config_int(val, line_no);
    else if (key == "ot.marginal_tolerance")
      cfg.ot.marginal_tolerance = detail::config_double(val, line_no);
    else if (key == "ot.dustbin_percentile")
      cfg.ot.dustbin_percentile = detail::config_double(val, line_no);
    else if (key == "ot.dustbin_capacity")
      cfg.ot.dustbin_capacity = detail::config_double(val, line_no);
    else if (key == "loss.margin") cfg.margin = detail::config_double(val, line_no);
    else if (key == "loss.lambda_c") cfg.lambda_c = detail::config_double(val, line_no);
    else if (key == "loss.lambda_f") cfg.lambda_f = detail::config_double(val, line_no);
    else if (key == "loss.diversity_delta")
      cfg.diversity_delta = detail::config_double(val, line_no);
    else if (key == "loss.diversity_scale")
      cfg.diversity_scale = detail::config_double(val, line_no);
    else
      throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key +
                         "'");
  }
  cfg.validate();
  return cfg;
}

inline std::string emit_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "tau = " << double_to_string(cfg.tau) << "\n"
      << "beta = " << double_to_string(cfg.beta) << "\n"
      << "gamma = " << double_to_string(cfg.gamma) << "\n"
      << "alpha_f = " << double_to_string(cfg.weights.alpha_f) << "\n"
      << "alpha_c = " << double_to_string(cfg.weights.alpha_c) << "\n"
      << "stage = " << cfg.stage << "\n"
      << "seed = " << cfg.seed << "\n"
      << "threads = " << cfg.threads << "\n\n[ot]\n"
      << "epsilon = " << double_to_string(cfg.ot.epsilon) << "\n"
      << "max_iterations = " << cfg.ot.max_iterations << "\n"
      << "marginal_tolerance = " << double_to_string(cfg.ot.marginal_tolerance) << "\n"
      << "dustbin_percentile = " << double_to_string(cfg.ot.dustbin_percentile) << "\n";
  if (cfg.ot.dustbin_capacity)
    out << "dustbin_capacity = " << double_to_string(*cfg.ot.dustbin_capacity) << "\n";
  out << "\n[loss]\n"
      << "margin = " << double_to_string(cfg.margin) << "\n"
      << "lambda_c = " << double_to_string(cfg.lambda_c) << "\n"
      << "lambda_f = " << double_to_string(cfg.lambda_f) << "\n"
      << "diversity_delta = " << double_to_string(cfg.diversity_delta) << "\n"
      << "diversity_scale = " << double_to_string(cfg.diversity_scale) << "\n";
  return out.str();
}

}  // namespace evret
