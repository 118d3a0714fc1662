#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evret/errors.hpp"
#include "evret/numeric.hpp"

namespace evret {

// Digamma for x > 0. Upward recurrence psi(x) = psi(x+1) - 1/x shifts the
// argument to >= 6, where the asymptotic expansion
//   psi(x) ~ ln x - 1/(2x) - sum_n B_{2n} / (2n x^{2n})
// truncated after the x^{-14} term carries absolute error below 1e-13.
// Accuracy target across [1e-3, 1e6]: |error| <= 1e-10.
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw input_error("digamma: requires finite x > 0, got " + std::to_string(x));
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  // Coefficients B_{2n}/(2n): 1/12, -1/120, 1/252, -1/240, 1/132, -691/32760, 1/12.
  double series = inv2 * (1.0 / 12.0 +
                  inv2 * (-1.0 / 120.0 +
                  inv2 * (1.0 / 252.0 +
                  inv2 * (-1.0 / 240.0 +
                  inv2 * (1.0 / 132.0 +
                  inv2 * (-691.0 / 32760.0 +
                  inv2 * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

struct DirichletParams {
  std::vector<double> alpha;  // each >= 1
  double strength = 0.0;      // sum of alpha
};

struct SubjectiveOpinion {
  std::vector<double> belief;  // nonnegative, sums with uncertainty to 1
  double uncertainty = 0.0;    // in (0, 1]
};

// Per-candidate evidence from raw similarity scores: e = exp(tanh(s / tau)).
// The squashing bounds every entry inside (1/e, e) regardless of score scale,
// so a single extreme score cannot exhaust the belief budget on its own.
inline std::vector<double> similarities_to_evidence(std::span<const double> scores,
                                                    double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw config_error("evidence: tau must be finite and > 0");
  if (scores.empty()) throw input_error("evidence: empty score vector");
  require_finite(scores, "evidence scores");
  std::vector<double> e(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k)
    e[k] = std::exp(std::tanh(scores[k] / tau));
  return e;
}

inline DirichletParams dirichlet_from_evidence(std::span<const double> evidence) {
  if (evidence.empty()) throw input_error("dirichlet: empty evidence");
  DirichletParams d;
  d.alpha.resize(evidence.size());
  for (std::size_t k = 0; k < evidence.size(); ++k) {
    if (!(evidence[k] >= 0.0) || !std::isfinite(evidence[k]))
      throw input_error("dirichlet: evidence must be finite and nonnegative");
    d.alpha[k] = evidence[k] + 1.0;
  }
  d.strength = neumaier_sum(d.alpha);
  return d;
}

inline DirichletParams dirichlet_from_alpha(std::vector<double> alpha) {
  if (alpha.empty()) throw input_error("dirichlet: empty alpha");
  for (double a : alpha)
    if (!(a >= 1.0) || !std::isfinite(a))
      throw input_error("dirichlet: alpha entries must be finite and >= 1");
  DirichletParams d;
  d.strength = neumaier_sum(alpha);
  d.alpha = std::move(alpha);
  return d;
}

// b_k = (alpha_k - 1) / S, u = K / S. By construction u + sum_k b_k = 1.
inline SubjectiveOpinion opinion_from_dirichlet(const DirichletParams& d) {
  SubjectiveOpinion o;
  o.belief.resize(d.alpha.size());
  auto K = static_cast<double>(d.alpha.size());
  for (std::size_t k = 0; k < d.alpha.size(); ++k)
    o.belief[k] = (d.alpha[k] - 1.0) / d.strength;
  o.uncertainty = K / d.strength;
  return o;
}

struct EvidentialState {
  DirichletParams dirichlet;
  SubjectiveOpinion opinion;
};

inline EvidentialState evidence_to_opinion(std::span<const double> evidence) {
  EvidentialState st;
  st.dirichlet = dirichlet_from_evidence(evidence);
  st.opinion = opinion_from_dirichlet(st.dirichlet);
  return st;
}

// Rectified similarity at the annotated candidate: c = max(0, s[label]).
inline double label_consistency(std::span<const double> scores, std::size_t label) {
  if (label >= scores.size())
    throw input_error("consistency: label out of range");
  require_finite(scores, "consistency scores");
  return std::max(0.0, scores[label]);
}

// Expected Shannon entropy of a categorical draw under the Dirichlet:
//   xi = sum_k (alpha_k / S) * (psi(S + 1) - psi(alpha_k + 1)).
// Lies in [0, ln K]; maximal for symmetric alpha as S grows.
inline double aleatoric_uncertainty(const DirichletParams& d) {
  double psiS1 = digamma(d.strength + 1.0);
  std::vector<double> terms(d.alpha.size());
  for (std::size_t k = 0; k < d.alpha.size(); ++k)
    terms[k] = d.alpha[k] / d.strength * (psiS1 - digamma(d.alpha[k] + 1.0));
  return neumaier_sum(terms);
}

}  // namespace evret
