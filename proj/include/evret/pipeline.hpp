#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evret/aggregation.hpp"
#include "evret/config.hpp"
#include "evret/errors.hpp"
#include "evret/evidence.hpp"
#include "evret/identification.hpp"
#include "evret/losses.hpp"
#include "evret/matrix.hpp"
#include "evret/parallel.hpp"
#include "evret/synth.hpp"
#include "evret/transport.hpp"

namespace evret {

namespace detail {

// Rethrow module errors with the owning entity attached, preserving the type.
template <class Fn>
auto with_context(const std::string& ctx, Fn&& fn) {
  try {
    return fn();
  } catch (const degenerate_opinion_error& e) {
    throw degenerate_opinion_error(ctx + ": " + e.what());
  } catch (const total_conflict_error& e) {
    throw total_conflict_error(ctx + ": " + e.what());
  } catch (const input_error& e) {
    throw input_error(ctx + ": " + e.what());
  } catch (const numerical_error& e) {
    throw numerical_error(ctx + ": " + e.what());
  } catch (const config_error& e) {
    throw config_error(ctx + ": " + e.what());
  }
}

}  // namespace detail

struct BranchAnalysis {
  std::vector<double> epistemic, consistency, aleatoric;
  std::vector<SubjectiveOpinion> opinions;
  std::vector<DirichletParams> dirichlet;
  std::vector<std::size_t> true_positives;
  Thresholds thresholds;
  PartitionSet initial, refined;
};

// Per-query evidential quantities plus the identification passes for one
// similarity branch. Queries are independent, so the loop parallelizes into
// preallocated slots.
inline BranchAnalysis analyze_branch(const Matrix& sims, const std::vector<std::size_t>& labels,
                                     double tau, double beta, int threads) {
  BranchAnalysis a;
  const std::size_t n = sims.rows();
  a.epistemic.resize(n);
  a.consistency.resize(n);
  a.aleatoric.resize(n);
  a.opinions.resize(n);
  a.dirichlet.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    detail::with_context("query " + std::to_string(i), [&] {
      auto row = sims.row(i);
      auto state = evidence_to_opinion(similarities_to_evidence(row, tau));
      a.epistemic[i] = state.opinion.uncertainty;
      a.consistency[i] = label_consistency(row, labels[i]);
      a.aleatoric[i] = aleatoric_uncertainty(state.dirichlet);
      a.opinions[i] = std::move(state.opinion);
      a.dirichlet[i] = std::move(state.dirichlet);
    });
  });
  a.true_positives = true_positive_set(sims, labels);
  a.thresholds = adaptive_thresholds(a.epistemic, a.consistency, a.true_positives, beta);
  a.initial = initial_partition(a.epistemic, a.consistency, a.thresholds);
  a.refined = refine_partition(a.initial, a.aleatoric);
  return a;
}

struct TransportSummary {
  std::size_t video = 0;
  std::vector<std::size_t> query_ids;
  FlexiblePlan plan;
  PlanLabels labels;
  std::vector<std::size_t> excluded_queries;  // global ids of fully-dustbinned columns
  IntraLoss intra;
};

struct Report {
  int schema_version = 1;
  PipelineConfig config;
  std::size_t n_queries = 0, n_videos = 0;
  BranchAnalysis frame, clip;
  PartitionSet fused;
  std::vector<SubjectiveOpinion> fused_opinions;
  std::vector<DirichletParams> fused_dirichlet;
  std::vector<double> conflict;
  Matrix labels_used;  // one-hot at stage 1, calibrated at stage 2
  bool calibrated = false;
  std::vector<TransportSummary> transport;  // stage 2 only
  LossReport losses;
  std::vector<QueryCategory> planted_truth;
  std::optional<double> identification_accuracy;

  bool transport_converged() const {
    for (const auto& t : transport)
      if (!t.plan.converged) return false;
    return true;
  }
};

inline Report run_pipeline(const Instance& inst, const PipelineConfig& cfg) {
  cfg.validate();
  inst.validate();

  Report rep;
  rep.config = cfg;
  rep.n_queries = inst.n_queries();
  rep.n_videos = inst.n_videos();
  rep.planted_truth = inst.planted_truth;

  rep.frame = analyze_branch(inst.s_f, inst.labels, cfg.tau, cfg.beta, cfg.threads);
  rep.clip = analyze_branch(inst.s_c, inst.labels, cfg.tau, cfg.beta, cfg.threads);
  rep.fused = udpf_fuse(rep.frame.refined, rep.clip.refined);

  const std::size_t n = rep.n_queries;
  rep.fused_opinions.resize(n);
  rep.fused_dirichlet.resize(n);
  rep.conflict.resize(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    detail::with_context("query " + std::to_string(i), [&] {
      const auto& f = rep.frame.opinions[i];
      const auto& c = rep.clip.opinions[i];
      rep.conflict[i] = conflict_mass(f, c);
      rep.fused_opinions[i] = combine_opinions(f, c);
      rep.fused_dirichlet[i] = opinion_to_dirichlet(rep.fused_opinions[i]);
    });
  });

  Matrix one_hot = inst.one_hot_labels();
  if (cfg.stage == 2) {
    rep.labels_used =
        calibrate_labels(rep.fused, one_hot, inst.s_f, inst.s_c, cfg.gamma);
    rep.calibrated = true;
  } else {
    rep.labels_used = one_hot;
  }

  InterLoss inter =
      inter_loss(rep.frame.dirichlet, rep.clip.dirichlet, rep.fused_dirichlet, rep.labels_used);

  IntraLoss intra;
  if (cfg.stage == 2 && !inst.clip_query.empty()) {
    rep.transport.resize(inst.clip_query.size());
    parallel_for(inst.clip_query.size(), cfg.threads, [&](std::size_t b) {
      const auto& block = inst.clip_query[b];
      detail::with_context("video " + std::to_string(block.video), [&] {
        TransportSummary& ts = rep.transport[b];
        ts.video = block.video;
        ts.query_ids = block.query_ids;
        ts.plan = flexible_ot(block.sims, cfg.ot);
        ts.labels = plan_as_labels(ts.plan.plan);
        for (std::size_t j = 0; j < ts.labels.included.size(); ++j)
          if (!ts.labels.included[j]) ts.excluded_queries.push_back(block.query_ids[j]);
        ts.intra = intra_loss(block.sims, ts.labels, cfg.tau);
      });
    });
    std::vector<double> block_vals;
    for (const auto& ts : rep.transport) {
      intra.included += ts.intra.included;
      if (!ts.intra.all_excluded) block_vals.push_back(ts.intra.value);
    }
    if (block_vals.empty())
      intra.all_excluded = true;
    else
      intra.value = neumaier_sum(block_vals) / static_cast<double>(block_vals.size());
  }

  double l_sim = detail::with_context("similarity loss", [&] {
    auto branch_losses = [&](const Matrix& s) {
      std::vector<TripletTerm> trip(n);
      std::vector<InfoNceTerm> nce(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t li = inst.labels[i];
        trip[i].positive = s(i, li);
        nce[i].positive = s(i, li);
        for (std::size_t v = 0; v < rep.n_videos; ++v) {
          if (v == li) continue;
          double sv = s(i, v);
          nce[i].negative_videos.push_back(sv);
          if (!trip[i].negative_video || sv > *trip[i].negative_video)
            trip[i].negative_video = sv;
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (inst.labels[j] == li) continue;
          double sj = s(j, li);
          nce[i].negative_texts.push_back(sj);
          if (!trip[i].negative_text || sj > *trip[i].negative_text)
            trip[i].negative_text = sj;
        }
      }
      return std::pair(triplet_loss(trip, cfg.margin), infonce_loss(nce));
    };
    auto [trip_f, nce_f] = branch_losses(inst.s_f);
    auto [trip_c, nce_c] = branch_losses(inst.s_c);
    return trip_c + trip_f + cfg.lambda_c * nce_c + cfg.lambda_f * nce_f;
  });

  // Queries have no embeddings here; each query's fused similarity row serves
  // as its descriptor for the diversity penalty.
  double l_div = detail::with_context("diversity loss", [&] {
    Matrix desc(n, rep.n_videos);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t v = 0; v < rep.n_videos; ++v)
        desc(i, v) = cfg.weights.alpha_f * inst.s_f(i, v) + cfg.weights.alpha_c * inst.s_c(i, v);
    return diversity_loss(desc, inst.labels, cfg.diversity_delta, cfg.diversity_scale);
  });

  rep.losses = aggregate_loss(cfg.stage, l_sim, l_div, inter, intra);
  if (!std::isfinite(rep.losses.l_agg))
    throw numerical_error("pipeline: non-finite aggregate loss");

  if (!inst.planted_truth.empty()) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (rep.fused.category[i] == inst.planted_truth[i]) ++hits;
    rep.identification_accuracy = static_cast<double>(hits) / static_cast<double>(n);
  }
  return rep;
}

}  // namespace evret
