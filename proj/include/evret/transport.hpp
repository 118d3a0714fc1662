#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "evret/errors.hpp"
#include "evret/matrix.hpp"
#include "evret/numeric.hpp"

namespace evret {

struct OTConfig {
  double epsilon = 0.05;
  int max_iterations = 500;
  double marginal_tolerance = 1e-6;        // L1 on both marginals
  double dustbin_percentile = 30.0;        // payoff percentile used as the dustbin score
  std::optional<double> dustbin_capacity;  // column-marginal mass on the dustbin;
                                           // default: uniform share 1/(M_q + 1)

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw config_error("ot: epsilon must be finite and > 0");
    if (max_iterations < 1) throw config_error("ot: max_iterations must be >= 1");
    if (!(marginal_tolerance > 0.0)) throw config_error("ot: marginal_tolerance must be > 0");
    if (!(dustbin_percentile > 0.0 && dustbin_percentile < 100.0))
      throw config_error("ot: dustbin_percentile must lie in (0, 100)");
    if (dustbin_capacity && !(*dustbin_capacity > 0.0 && *dustbin_capacity < 1.0))
      throw config_error("ot: dustbin_capacity must lie in (0, 1)");
  }
};

struct TransportPlan {
  Matrix plan;
  std::vector<double> row_marginal, col_marginal;  // mu, nu as solved against
  std::vector<double> row_potential, col_potential;
  bool converged = false;
  int iterations = 0;
  double row_residual = 0.0, col_residual = 0.0;
};

// Entropy-regularized transport, maximization form:
//   max <Q, S> + eps * H(Q)   s.t.   Q 1 = mu, Q^T 1 = nu
// solved by Sinkhorn scaling on the potentials, entirely in log space:
//   f_i = eps ln mu_i - eps lse_j((S_ij + g_j)/eps)
//   g_j = eps ln nu_j - eps lse_i((S_ij + f_i)/eps)
// The exp/log round trips that overflow plain scaling at small eps never
// happen here; the largest intermediate is a shifted logsumexp.
// Convergence is checked after every full sweep on the realized plan's
// L1 marginal residuals.
inline TransportPlan sinkhorn(const Matrix& payoff, std::span<const double> mu,
                              std::span<const double> nu, const OTConfig& cfg) {
  cfg.validate();
  const std::size_t n = payoff.rows(), m = payoff.cols();
  if (n == 0 || m == 0) throw input_error("sinkhorn: empty payoff");
  if (mu.size() != n || nu.size() != m)
    throw input_error("sinkhorn: marginal dimensions do not match payoff");
  require_finite(payoff.flat(), "sinkhorn payoff");
  for (double v : mu)
    if (!(v >= 0.0) || !std::isfinite(v)) throw input_error("sinkhorn: mu must be nonnegative");
  for (double v : nu)
    if (!(v >= 0.0) || !std::isfinite(v)) throw input_error("sinkhorn: nu must be nonnegative");
  if (std::abs(neumaier_sum(mu) - 1.0) > 1e-9 || std::abs(neumaier_sum(nu) - 1.0) > 1e-9)
    throw input_error("sinkhorn: marginals must each sum to 1");

  const double eps = cfg.epsilon;
  std::vector<double> log_mu(n), log_nu(m);
  for (std::size_t i = 0; i < n; ++i) log_mu[i] = std::log(mu[i]);
  for (std::size_t j = 0; j < m; ++j) log_nu[j] = std::log(nu[j]);

  TransportPlan out;
  out.row_marginal.assign(mu.begin(), mu.end());
  out.col_marginal.assign(nu.begin(), nu.end());
  out.row_potential.assign(n, 0.0);
  out.col_potential.assign(m, 0.0);
  auto& f = out.row_potential;
  auto& g = out.col_potential;
  out.plan = Matrix(n, m);
  std::vector<double> scratch(std::max(n, m));

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      auto row = payoff.row(i);
      for (std::size_t j = 0; j < m; ++j) scratch[j] = (row[j] + g[j]) / eps;
      f[i] = eps * (log_mu[i] - log_sum_exp({scratch.data(), m}));
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) scratch[i] = (payoff(i, j) + f[i]) / eps;
      g[j] = eps * (log_nu[j] - log_sum_exp({scratch.data(), n}));
    }

    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        out.plan(i, j) = std::exp((payoff(i, j) + f[i] + g[j]) / eps);

    out.row_residual = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      out.row_residual += std::abs(neumaier_sum(out.plan.row(i)) - mu[i]);
    out.col_residual = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      out.col_residual += std::abs(neumaier_sum(out.plan.col(j)) - nu[j]);

    out.iterations = it;
    if (out.row_residual <= cfg.marginal_tolerance &&
        out.col_residual <= cfg.marginal_tolerance) {
      out.converged = true;
      break;
    }
  }
  if (!all_finite(out.plan.flat()))
    throw numerical_error("sinkhorn: non-finite plan");
  return out;
}

// Dual functional minimized blockwise by the scaling updates:
//   Phi(f, g) = eps * sum_ij exp((S_ij + f_i + g_j)/eps) - mu.f - nu.g
// Monotonically non-increasing along the iteration; exposed for diagnostics.
inline double sinkhorn_dual(const Matrix& payoff, std::span<const double> mu,
                            std::span<const double> nu, double eps,
                            std::span<const double> f, std::span<const double> g) {
  double mass = 0.0;
  for (std::size_t i = 0; i < payoff.rows(); ++i)
    for (std::size_t j = 0; j < payoff.cols(); ++j)
      mass += std::exp((payoff(i, j) + f[i] + g[j]) / eps);
  double lin = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > 0.0) lin += mu[i] * f[i];
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (nu[j] > 0.0) lin += nu[j] * g[j];
  return eps * mass - lin;
}

// Score assigned to the synthetic "none of the queries" column: the
// nearest-rank lower percentile of the raw payoff entries.
inline double dustbin_threshold(const Matrix& payoff, double percentile) {
  if (payoff.empty()) throw input_error("dustbin: empty payoff");
  std::vector<double> vals(payoff.flat().begin(), payoff.flat().end());
  return nearest_rank_lower_percentile(std::move(vals), percentile);
}

struct FlexiblePlan {
  Matrix plan;                  // rows clips, cols queries; dustbin column cropped away
  std::vector<double> dustbin;  // per-clip mass routed to the dustbin
  double dustbin_value = 0.0;
  double dustbin_mass = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Transport with an escape column. Clips carry uniform mass; a constant
// low-score column lets background clips shed their mass instead of forcing
// it onto the best of a bad set of queries.
inline FlexiblePlan flexible_ot(const Matrix& payoff, const OTConfig& cfg) {
  cfg.validate();
  const std::size_t n = payoff.rows(), m = payoff.cols();
  if (n == 0 || m == 0) throw input_error("flexible ot: empty payoff");
  require_finite(payoff.flat(), "flexible ot payoff");

  double z = dustbin_threshold(payoff, cfg.dustbin_percentile);
  Matrix aug(n, m + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) aug(i, j) = payoff(i, j);
    aug(i, m) = z;
  }

  std::vector<double> mu(n, 1.0 / static_cast<double>(n));
  double w = cfg.dustbin_capacity.value_or(1.0 / static_cast<double>(m + 1));
  std::vector<double> nu(m + 1, (1.0 - w) / static_cast<double>(m));
  nu[m] = w;

  TransportPlan full = sinkhorn(aug, mu, nu, cfg);

  FlexiblePlan out;
  out.plan = Matrix(n, m);
  out.dustbin.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out.plan(i, j) = full.plan(i, j);
    out.dustbin[i] = full.plan(i, m);
  }
  out.dustbin_value = z;
  out.dustbin_mass = neumaier_sum(out.dustbin);
  out.converged = full.converged;
  out.iterations = full.iterations;
  return out;
}

struct PlanLabels {
  Matrix distributions;        // columns renormalized to sum 1; excluded columns zeroed
  std::vector<bool> included;  // false where the query's surviving mass fell below the floor
};

// Turn cropped plan columns into per-query distributions over clips. Queries
// whose mass was almost entirely dustbinned carry no signal and are flagged
// out instead of being blown up by renormalization.
inline PlanLabels plan_as_labels(const Matrix& cropped, double mass_floor = 1e-9) {
  if (cropped.empty()) throw input_error("plan labels: empty plan");
  PlanLabels out;
  out.distributions = Matrix(cropped.rows(), cropped.cols());
  out.included.assign(cropped.cols(), false);
  for (std::size_t j = 0; j < cropped.cols(); ++j) {
    double total = neumaier_sum(cropped.col(j));
    if (total < mass_floor) continue;
    out.included[j] = true;
    for (std::size_t i = 0; i < cropped.rows(); ++i)
      out.distributions(i, j) = cropped(i, j) / total;
  }
  return out;
}

}  // namespace evret
