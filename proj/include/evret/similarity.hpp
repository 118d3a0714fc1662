#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evret/errors.hpp"
#include "evret/matrix.hpp"
#include "evret/numeric.hpp"

namespace evret {

enum class EmbeddingRole { Frame, Clip, Query };

struct EmbeddingSet {
  Matrix vectors;  // one embedding per row
  EmbeddingRole role = EmbeddingRole::Frame;
};

struct BranchWeights {
  double alpha_f = 0.5;
  double alpha_c = 0.5;

  void validate() const {
    if (!(alpha_f >= 0.0 && alpha_c >= 0.0) || std::abs(alpha_f + alpha_c - 1.0) > 1e-12)
      throw config_error("weights: alpha_f + alpha_c must equal 1, both nonnegative");
  }
};

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw input_error("cosine: dimension mismatch");
  if (a.empty()) throw input_error("cosine: empty vectors");
  require_finite(a, "cosine lhs");
  require_finite(b, "cosine rhs");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < 1e-12 || nb < 1e-12) throw input_error("cosine: zero-norm vector");
  return dot / (na * nb);
}

// Branch score for one query against an embedding bank: the best cosine
// match, s = max_k cos(q, v_k).
inline double branch_similarity(std::span<const double> query, const EmbeddingSet& bank) {
  if (bank.vectors.rows() == 0) throw input_error("branch similarity: empty bank");
  double best = -2.0;
  for (std::size_t k = 0; k < bank.vectors.rows(); ++k)
    best = std::max(best, cosine_similarity(query, bank.vectors.row(k)));
  return best;
}

inline double overall_similarity(double s_f, double s_c, const BranchWeights& w) {
  w.validate();
  return w.alpha_f * s_f + w.alpha_c * s_c;
}

// Locality kernel for attention masking: M(i,j) = (1/2pi) exp(-(j-i)^2 / sigma^2).
// Symmetric Toeplitz, peaks on the diagonal.
inline Matrix gaussian_mask(std::size_t n, double sigma) {
  if (n < 1) throw input_error("mask: n must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw config_error("mask: sigma must be > 0");
  constexpr double inv_two_pi = 0.15915494309189535;
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d = static_cast<double>(j) - static_cast<double>(i);
      m(i, j) = inv_two_pi * std::exp(-(d * d) / (sigma * sigma));
    }
  return m;
}

}  // namespace evret
