#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evret/errors.hpp"
#include "evret/evidence.hpp"
#include "evret/numeric.hpp"

namespace evret {

namespace detail {

inline void check_opinion(const SubjectiveOpinion& o, const char* side) {
  if (o.belief.empty())
    throw input_error(std::string("combine: empty opinion (") + side + ")");
  for (double b : o.belief)
    if (!(b >= 0.0) || !std::isfinite(b))
      throw input_error(std::string("combine: negative or non-finite belief (") + side + ")");
  if (!(o.uncertainty >= 0.0) || !std::isfinite(o.uncertainty))
    throw input_error(std::string("combine: bad uncertainty (") + side + ")");
}

}  // namespace detail

// Mass the two opinions place on incompatible candidates:
//   delta = (sum_i b^f_i)(sum_j b^c_j) - sum_k b^f_k b^c_k.
inline double conflict_mass(const SubjectiveOpinion& f, const SubjectiveOpinion& c) {
  detail::check_opinion(f, "first");
  detail::check_opinion(c, "second");
  if (f.belief.size() != c.belief.size())
    throw input_error("conflict: dimension mismatch");
  double agree = 0.0;
  for (std::size_t k = 0; k < f.belief.size(); ++k) agree += f.belief[k] * c.belief[k];
  double delta = neumaier_sum(f.belief) * neumaier_sum(c.belief) - agree;
  return std::max(0.0, delta);
}

// Reduced combination rule:
//   b^o_k = (b^f_k b^c_k + b^f_k u^c + b^c_k u^f) / (1 - delta)
//   u^o   = u^f u^c / (1 - delta)
// Total conflict (delta -> 1) has no defined combination; raised as its own
// error type so callers can distinguish it from ordinary numeric failure.
inline SubjectiveOpinion combine_opinions(const SubjectiveOpinion& f,
                                          const SubjectiveOpinion& c) {
  double delta = conflict_mass(f, c);
  if (delta >= 1.0 - 1e-12)
    throw total_conflict_error("combine: opinions are in total conflict (delta = " +
                               std::to_string(delta) + ")");
  double norm = 1.0 - delta;
  SubjectiveOpinion out;
  out.belief.resize(f.belief.size());
  for (std::size_t k = 0; k < f.belief.size(); ++k)
    out.belief[k] =
        (f.belief[k] * c.belief[k] + f.belief[k] * c.uncertainty + c.belief[k] * f.uncertainty) /
        norm;
  out.uncertainty = f.uncertainty * c.uncertainty / norm;
  return out;
}

// Invert b = (alpha - 1)/S, u = K/S: S = K/u, alpha_k = b_k * S + 1.
// Requires u > 0; a zero-uncertainty opinion corresponds to infinite evidence.
inline DirichletParams opinion_to_dirichlet(const SubjectiveOpinion& o) {
  detail::check_opinion(o, "opinion");
  if (!(o.uncertainty > 0.0))
    throw degenerate_opinion_error("opinion: zero uncertainty has no finite Dirichlet");
  auto K = static_cast<double>(o.belief.size());
  double S = K / o.uncertainty;
  std::vector<double> alpha(o.belief.size());
  for (std::size_t k = 0; k < o.belief.size(); ++k) alpha[k] = o.belief[k] * S + 1.0;
  return dirichlet_from_alpha(std::move(alpha));
}

inline SubjectiveOpinion vacuous_opinion(std::size_t K) {
  if (K == 0) throw input_error("opinion: K must be positive");
  SubjectiveOpinion o;
  o.belief.assign(K, 0.0);
  o.uncertainty = 1.0;
  return o;
}

}  // namespace evret
