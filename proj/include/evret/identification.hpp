#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "evret/errors.hpp"
#include "evret/matrix.hpp"
#include "evret/numeric.hpp"

namespace evret {

// Ordered by how much doubt the category carries; fusion takes the max.
enum class QueryCategory { Precise = 0, Polysemous = 1, UnderDetermined = 2 };

inline const char* to_string(QueryCategory c) {
  switch (c) {
    case QueryCategory::Precise: return "precise";
    case QueryCategory::Polysemous: return "polysemous";
    case QueryCategory::UnderDetermined: return "under_determined";
  }
  return "?";
}

struct Thresholds {
  double epistemic = 0.0;    // queries above it are under-determined
  double consistency = 0.0;  // queries below it (and not under-determined) are polysemous
};

struct PartitionSet {
  std::vector<QueryCategory> category;  // one per query

  std::vector<std::size_t> members(QueryCategory c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < category.size(); ++i)
      if (category[i] == c) out.push_back(i);
    return out;
  }
};

// Queries whose annotated candidate is the strict argmax of their score row.
// Ties disqualify: a shared maximum is not a confident hit.
inline std::vector<std::size_t> true_positive_set(const Matrix& sims,
                                                  const std::vector<std::size_t>& labels) {
  if (sims.rows() != labels.size())
    throw input_error("true positives: labels/rows mismatch");
  std::vector<std::size_t> tp;
  for (std::size_t i = 0; i < sims.rows(); ++i) {
    auto row = sims.row(i);
    if (labels[i] >= row.size()) throw input_error("true positives: label out of range");
    double best = row[labels[i]];
    bool strict = true;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j != labels[i] && row[j] >= best) {
        strict = false;
        break;
      }
    }
    if (strict) tp.push_back(i);
  }
  return tp;
}

// Data-driven cutoffs anchored at the worst true positive: the largest
// epistemic uncertainty and the smallest label consistency seen among
// confidently-correct queries, clamped by the floor/ceiling beta. With no
// true positives the clamps alone decide.
inline Thresholds adaptive_thresholds(std::span<const double> u,
                                      std::span<const double> c,
                                      const std::vector<std::size_t>& true_positives,
                                      double beta = 0.3) {
  if (u.size() != c.size()) throw input_error("thresholds: u/c size mismatch");
  if (!(beta > 0.0 && beta < 1.0)) throw config_error("thresholds: beta must lie in (0, 1)");
  require_finite(u, "epistemic uncertainty");
  require_finite(c, "label consistency");
  Thresholds t{1.0 - beta, beta};
  if (!true_positives.empty()) {
    double u_tp = 0.0;
    double c_tp = std::numeric_limits<double>::infinity();
    for (std::size_t q : true_positives) {
      if (q >= u.size()) throw input_error("thresholds: true-positive index out of range");
      u_tp = std::max(u_tp, u[q]);
      c_tp = std::min(c_tp, c[q]);
    }
    t.epistemic = std::min(u_tp, 1.0 - beta);
    t.consistency = std::max(beta, c_tp);
  }
  return t;
}

// First pass: epistemic uncertainty above the cutoff means under-determined;
// otherwise label consistency separates provisionally-precise from polysemous.
inline PartitionSet initial_partition(std::span<const double> u,
                                      std::span<const double> c,
                                      const Thresholds& t) {
  if (u.size() != c.size()) throw input_error("partition: u/c size mismatch");
  PartitionSet p;
  p.category.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > t.epistemic)
      p.category[i] = QueryCategory::UnderDetermined;
    else if (c[i] >= t.consistency)
      p.category[i] = QueryCategory::Precise;
    else
      p.category[i] = QueryCategory::Polysemous;
  }
  return p;
}

// Second pass over the provisionally-precise set: only queries whose
// aleatoric dispersion is strictly below the set's lower median stay precise;
// median ties are demoted. Leaves at most ceil(n/2) precise out of n.
inline PartitionSet refine_partition(const PartitionSet& initial,
                                     std::span<const double> xi) {
  if (initial.category.size() != xi.size())
    throw input_error("refine: xi size mismatch");
  require_finite(xi, "aleatoric dispersion");
  PartitionSet out = initial;
  std::vector<double> pool;
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (initial.category[i] == QueryCategory::Precise) pool.push_back(xi[i]);
  if (pool.empty()) return out;
  double med = lower_median(std::move(pool));
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (initial.category[i] == QueryCategory::Precise && !(xi[i] < med))
      out.category[i] = QueryCategory::Polysemous;
  return out;
}

// Fused verdict takes the more doubtful of the two branch verdicts.
inline QueryCategory udpf_fuse(QueryCategory f, QueryCategory c) {
  return static_cast<int>(f) >= static_cast<int>(c) ? f : c;
}

inline PartitionSet udpf_fuse(const PartitionSet& f, const PartitionSet& c) {
  if (f.category.size() != c.category.size())
    throw input_error("fuse: partition size mismatch");
  PartitionSet out;
  out.category.resize(f.category.size());
  for (std::size_t i = 0; i < f.category.size(); ++i)
    out.category[i] = udpf_fuse(f.category[i], c.category[i]);
  return out;
}

}  // namespace evret
