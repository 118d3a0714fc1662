#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "evret/errors.hpp"

namespace evret {

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_finite(std::span<const double> xs, const char* what) {
  if (!all_finite(xs))
    throw input_error(std::string(what) + ": non-finite value");
}

// Neumaier's compensated summation. Error stays O(eps) in the result
// independent of length, which is what keeps the 1e-12 normalization
// guarantees honest at large K.
inline double neumaier_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// log(sum_i exp(x_i)), tolerant of -inf entries (empty mass). All -inf -> -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline std::vector<double> softmax(std::span<const double> xs) {
  if (xs.empty()) throw input_error("softmax: empty input");
  require_finite(xs, "softmax");
  double m = *std::max_element(xs.begin(), xs.end());
  std::vector<double> out(xs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = std::exp(xs[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

// Nearest-rank (inclusive, lower) percentile: sort ascending and take the
// element at rank ceil(p/100 * n), 1-based. p must lie in (0, 100).
inline double nearest_rank_lower_percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw input_error("percentile: empty input");
  if (!(pct > 0.0 && pct < 100.0)) throw config_error("percentile: must lie in (0, 100)");
  std::sort(values.begin(), values.end());
  auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::max<std::size_t>(rank, 1);
  rank = std::min<std::size_t>(rank, values.size());
  return values[rank - 1];
}

// Lower median: sorted[(n-1)/2].
inline double lower_median(std::vector<double> values) {
  if (values.empty()) throw input_error("median: empty input");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

// Shortest decimal representation that round-trips exactly; the basis of
// byte-stable file formats.
inline std::string double_to_string(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

}  // namespace evret
