#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evret/errors.hpp"
#include "evret/evidence.hpp"
#include "evret/identification.hpp"
#include "evret/matrix.hpp"
#include "evret/numeric.hpp"
#include "evret/similarity.hpp"
#include "evret/transport.hpp"

namespace evret {

// Soften labels only where the query was judged polysemous: those keep
// (1-gamma) of the annotation and split gamma between the two branches'
// softmaxed score rows. Precise and under-determined rows pass through
// untouched (bit-identical).
inline Matrix calibrate_labels(const PartitionSet& partition, const Matrix& labels,
                               const Matrix& s_f, const Matrix& s_c, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw config_error("calibrate: gamma must lie in [0, 1]");
  const std::size_t n = labels.rows(), K = labels.cols();
  if (partition.category.size() != n || s_f.rows() != n || s_c.rows() != n ||
      s_f.cols() != K || s_c.cols() != K)
    throw input_error("calibrate: shape mismatch");
  Matrix out = labels;
  for (std::size_t i = 0; i < n; ++i) {
    if (partition.category[i] != QueryCategory::Polysemous) continue;
    auto sf = softmax(s_f.row(i));
    auto sc = softmax(s_c.row(i));
    for (std::size_t j = 0; j < K; ++j)
      out(i, j) = (1.0 - gamma) * labels(i, j) + gamma / 2.0 * (sf[j] + sc[j]);
  }
  return out;
}

// Expected squared error between the target row and a categorical probability
// drawn from Dir(alpha); closes to mean + variance terms:
//   L = sum_j (y_j - alpha_j/S)^2 + alpha_j (S - alpha_j) / (S^2 (S + 1)).
inline double evidential_loss(const DirichletParams& d, std::span<const double> y_hat) {
  const std::size_t K = d.alpha.size();
  if (y_hat.size() != K) throw input_error("evidential loss: label dimension mismatch");
  require_finite(y_hat, "evidential loss label");
  if (std::abs(neumaier_sum(y_hat) - 1.0) > 1e-9)
    throw input_error("evidential loss: label row must sum to 1");
  const double S = d.strength;
  std::vector<double> terms(K);
  for (std::size_t j = 0; j < K; ++j) {
    double mean = d.alpha[j] / S;
    double resid = y_hat[j] - mean;
    terms[j] = resid * resid + d.alpha[j] * (S - d.alpha[j]) / (S * S * (S + 1.0));
  }
  return neumaier_sum(terms);
}

// Analytic d L / d alpha_k. With m = alpha/S, A = sum_j alpha_j^2, D = S^3 + S^2:
//   mean part:     -(2/S) [ (y_k - m_k) - sum_j (y_j - m_j) m_j ]
//   variance part:  (2S - 2 alpha_k)/D - (3S^2 + 2S)(S^2 - A)/D^2
inline std::vector<double> evidential_loss_grad(const DirichletParams& d,
                                                std::span<const double> y_hat) {
  const std::size_t K = d.alpha.size();
  if (y_hat.size() != K) throw input_error("evidential grad: label dimension mismatch");
  const double S = d.strength;
  double cross = 0.0, sum_sq = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    double m = d.alpha[j] / S;
    cross += (y_hat[j] - m) * m;
    sum_sq += d.alpha[j] * d.alpha[j];
  }
  const double D = S * S * S + S * S;
  const double var_common = (3.0 * S * S + 2.0 * S) * (S * S - sum_sq) / (D * D);
  std::vector<double> grad(K);
  for (std::size_t k = 0; k < K; ++k) {
    double m = d.alpha[k] / S;
    grad[k] = -(2.0 / S) * ((y_hat[k] - m) - cross) +
              (2.0 * S - 2.0 * d.alpha[k]) / D - var_common;
  }
  return grad;
}

struct InterLoss {
  double value = 0.0;
  std::vector<double> per_query;  // sum of the three per-branch losses, per query
};

// Inter-video objective: evidential loss on the frame, clip and fused
// parameters against the (possibly calibrated) label row, mean over queries.
inline InterLoss inter_loss(std::span<const DirichletParams> alpha_f,
                            std::span<const DirichletParams> alpha_c,
                            std::span<const DirichletParams> alpha_o,
                            const Matrix& y_hat) {
  const std::size_t n = alpha_f.size();
  if (alpha_c.size() != n || alpha_o.size() != n || y_hat.rows() != n)
    throw input_error("inter loss: per-query sizes disagree");
  InterLoss out;
  out.per_query.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = y_hat.row(i);
    out.per_query[i] = evidential_loss(alpha_f[i], row) + evidential_loss(alpha_c[i], row) +
                       evidential_loss(alpha_o[i], row);
  }
  if (n > 0) out.value = neumaier_sum(out.per_query) / static_cast<double>(n);
  return out;
}

struct IntraLoss {
  double value = 0.0;
  std::size_t included = 0;
  bool all_excluded = false;
};

// Intra-video objective: each included query's clip-similarity column becomes
// an M_c-way evidential prediction scored against its transport-plan label.
inline IntraLoss intra_loss(const Matrix& clip_query, const PlanLabels& labels, double tau) {
  if (labels.distributions.rows() != clip_query.rows() ||
      labels.distributions.cols() != clip_query.cols() ||
      labels.included.size() != clip_query.cols())
    throw input_error("intra loss: plan/similarity shape mismatch");
  IntraLoss out;
  std::vector<double> vals;
  for (std::size_t j = 0; j < clip_query.cols(); ++j) {
    if (!labels.included[j]) continue;
    auto d = dirichlet_from_evidence(similarities_to_evidence(clip_query.col(j), tau));
    vals.push_back(evidential_loss(d, labels.distributions.col(j)));
  }
  out.included = vals.size();
  if (vals.empty()) {
    out.all_excluded = true;
    return out;
  }
  out.value = neumaier_sum(vals) / static_cast<double>(vals.size());
  return out;
}

struct TripletTerm {
  double positive = 0.0;                // s(T, V)
  std::optional<double> negative_text;  // s(T-, V), hardest in-batch
  std::optional<double> negative_video; // s(T, V-), hardest in-batch
};

inline double triplet_loss(std::span<const TripletTerm> terms, double margin) {
  if (terms.empty()) throw input_error("triplet: empty batch");
  if (!(margin >= 0.0)) throw config_error("triplet: margin must be >= 0");
  double acc = 0.0;
  for (const auto& t : terms) {
    if (t.negative_text) acc += std::max(0.0, margin + *t.negative_text - t.positive);
    if (t.negative_video) acc += std::max(0.0, margin + *t.negative_video - t.positive);
  }
  return acc / static_cast<double>(terms.size());
}

struct InfoNceTerm {
  double positive = 0.0;
  std::vector<double> negative_texts;   // s(T_i-, V) over in-batch negative texts
  std::vector<double> negative_videos;  // s(T, V_i-) over in-batch negative videos
};

// Ratio form over raw similarities (no exponentials); requires a positive
// numerator and denominators, which cosine-like nonnegative scores provide.
inline double infonce_loss(std::span<const InfoNceTerm> terms) {
  if (terms.empty()) throw input_error("infonce: empty batch");
  double acc = 0.0;
  for (const auto& t : terms) {
    double dt = t.positive + neumaier_sum(t.negative_texts);
    double dv = t.positive + neumaier_sum(t.negative_videos);
    if (!(t.positive > 0.0) || !(dt > 0.0) || !(dv > 0.0))
      throw input_error("infonce: requires positive similarities");
    acc += std::log(t.positive / dt) + std::log(t.positive / dv);
  }
  return -acc / static_cast<double>(terms.size());
}

namespace detail {
inline double softplus(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
}  // namespace detail

// Penalize near-duplicate queries aimed at the same video:
//   (1/n) sum_{i<j, same video} log(1 + exp(scale * (cos(q_i, q_j) + delta))).
inline double diversity_loss(const Matrix& descriptors, std::span<const std::size_t> video_of,
                             double delta, double scale) {
  if (descriptors.rows() != video_of.size())
    throw input_error("diversity: descriptor/video counts disagree");
  if (!(delta > 0.0) || !(scale > 0.0))
    throw config_error("diversity: delta and scale must be > 0");
  const std::size_t n = descriptors.rows();
  if (n < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (video_of[i] != video_of[j]) continue;
      double cs = cosine_similarity(descriptors.row(i), descriptors.row(j));
      acc += detail::softplus(scale * (cs + delta));
    }
  return acc / static_cast<double>(n);
}

struct LossReport {
  int stage = 1;
  double l_sim = 0.0, l_div = 0.0, l_inter = 0.0, l_intra = 0.0;
  double l_base = 0.0, l_agg = 0.0;
  std::vector<double> inter_per_query;
  std::size_t intra_included = 0;
  bool intra_all_excluded = false;
};

// Two-stage schedule: stage 1 trains on the base and inter-video terms with
// raw labels and no intra-video term; stage 2 adds calibration and l_intra.
inline LossReport aggregate_loss(int stage, double l_sim, double l_div,
                                 const InterLoss& inter, const IntraLoss& intra) {
  if (stage != 1 && stage != 2) throw config_error("aggregate: stage must be 1 or 2");
  LossReport r;
  r.stage = stage;
  r.l_sim = l_sim;
  r.l_div = l_div;
  r.l_inter = inter.value;
  r.inter_per_query = inter.per_query;
  r.l_intra = stage == 2 ? intra.value : 0.0;
  r.intra_included = stage == 2 ? intra.included : 0;
  r.intra_all_excluded = stage == 2 && intra.all_excluded;
  r.l_base = l_sim + l_div;
  r.l_agg = r.l_base + r.l_inter + r.l_intra;
  return r;
}

}  // namespace evret
