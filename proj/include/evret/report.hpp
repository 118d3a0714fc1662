#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "evret/errors.hpp"
#include "evret/pipeline.hpp"

namespace evret {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (double v : m.row(i)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ordered_json categories_to_json(const std::vector<QueryCategory>& cats) {
  ordered_json out = ordered_json::array();
  for (auto c : cats) out.push_back(to_string(c));
  return out;
}

inline ordered_json branch_to_json(const BranchAnalysis& b) {
  ordered_json j;
  j["thresholds"] = {{"epistemic", b.thresholds.epistemic},
                     {"consistency", b.thresholds.consistency}};
  j["true_positives"] = b.true_positives;
  j["epistemic"] = b.epistemic;
  j["consistency"] = b.consistency;
  j["aleatoric"] = b.aleatoric;
  j["category_initial"] = categories_to_json(b.initial.category);
  j["category"] = categories_to_json(b.refined.category);
  ordered_json belief = ordered_json::array(), alpha = ordered_json::array();
  for (const auto& o : b.opinions) belief.push_back(o.belief);
  for (const auto& d : b.dirichlet) alpha.push_back(d.alpha);
  j["belief"] = std::move(belief);
  j["alpha"] = std::move(alpha);
  return j;
}

inline ordered_json config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["tau"] = cfg.tau;
  j["beta"] = cfg.beta;
  j["gamma"] = cfg.gamma;
  j["alpha_f"] = cfg.weights.alpha_f;
  j["alpha_c"] = cfg.weights.alpha_c;
  j["stage"] = cfg.stage;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["ot"] = {{"epsilon", cfg.ot.epsilon},
             {"max_iterations", cfg.ot.max_iterations},
             {"marginal_tolerance", cfg.ot.marginal_tolerance},
             {"dustbin_percentile", cfg.ot.dustbin_percentile}};
  if (cfg.ot.dustbin_capacity)
    j["ot"]["dustbin_capacity"] = *cfg.ot.dustbin_capacity;
  j["loss"] = {{"margin", cfg.margin},
               {"lambda_c", cfg.lambda_c},
               {"lambda_f", cfg.lambda_f},
               {"diversity_delta", cfg.diversity_delta},
               {"diversity_scale", cfg.diversity_scale}};
  return j;
}

inline void assert_finite_json(const ordered_json& j, const std::string& path) {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>()))
      throw numerical_error("report: non-finite value at " + path);
  } else if (j.is_array()) {
    std::size_t i = 0;
    for (const auto& el : j) assert_finite_json(el, path + "[" + std::to_string(i++) + "]");
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) assert_finite_json(v, path + "." + k);
  }
}

}  // namespace detail

inline ordered_json report_to_json(const Report& rep) {
  ordered_json j;
  j["schema_version"] = rep.schema_version;
  j["config"] = detail::config_to_json(rep.config);

  j["instance"] = {{"n_queries", rep.n_queries},
                   {"n_videos", rep.n_videos},
                   {"n_clip_blocks", rep.transport.size()}};
  j["instance"]["planted_truth"] = rep.planted_truth.empty()
                                       ? ordered_json(nullptr)
                                       : detail::categories_to_json(rep.planted_truth);

  j["branches"] = {{"frame", detail::branch_to_json(rep.frame)},
                   {"clip", detail::branch_to_json(rep.clip)}};

  ordered_json fusion;
  fusion["category"] = detail::categories_to_json(rep.fused.category);
  fusion["conflict"] = rep.conflict;
  ordered_json funcert = ordered_json::array(), fbelief = ordered_json::array(),
               falpha = ordered_json::array();
  for (const auto& o : rep.fused_opinions) {
    funcert.push_back(o.uncertainty);
    fbelief.push_back(o.belief);
  }
  for (const auto& d : rep.fused_dirichlet) falpha.push_back(d.alpha);
  fusion["uncertainty"] = std::move(funcert);
  fusion["belief"] = std::move(fbelief);
  fusion["alpha"] = std::move(falpha);
  j["fusion"] = std::move(fusion);

  j["labels"] = {{"calibrated", rep.calibrated},
                 {"rows", detail::matrix_to_json(rep.labels_used)}};

  ordered_json transport = ordered_json::array();
  for (const auto& t : rep.transport) {
    ordered_json tj;
    tj["video"] = t.video;
    tj["query_ids"] = t.query_ids;
    tj["converged"] = t.plan.converged;
    tj["iterations"] = t.plan.iterations;
    tj["dustbin_value"] = t.plan.dustbin_value;
    tj["dustbin_mass"] = t.plan.dustbin_mass;
    tj["excluded_queries"] = t.excluded_queries;
    tj["included"] = t.labels.included;
    tj["plan"] = detail::matrix_to_json(t.plan.plan);
    tj["plan_labels"] = detail::matrix_to_json(t.labels.distributions);
    tj["intra_loss"] = t.intra.value;
    tj["intra_included"] = t.intra.included;
    transport.push_back(std::move(tj));
  }
  j["transport"] = std::move(transport);

  j["losses"] = {{"stage", rep.losses.stage},
                 {"l_sim", rep.losses.l_sim},
                 {"l_div", rep.losses.l_div},
                 {"l_inter", rep.losses.l_inter},
                 {"l_intra", rep.losses.l_intra},
                 {"l_base", rep.losses.l_base},
                 {"l_agg", rep.losses.l_agg},
                 {"inter_per_query", rep.losses.inter_per_query},
                 {"intra_included", rep.losses.intra_included},
                 {"intra_all_excluded", rep.losses.intra_all_excluded}};

  ordered_json eval;
  if (rep.identification_accuracy) {
    eval["identification_accuracy"] = *rep.identification_accuracy;
    ordered_json per;
    for (auto cat : {QueryCategory::Precise, QueryCategory::Polysemous,
                     QueryCategory::UnderDetermined}) {
      std::size_t total = 0, hit = 0;
      for (std::size_t i = 0; i < rep.planted_truth.size(); ++i) {
        if (rep.planted_truth[i] != cat) continue;
        ++total;
        if (rep.fused.category[i] == cat) ++hit;
      }
      per[to_string(cat)] =
          total == 0 ? ordered_json(nullptr)
                     : ordered_json(static_cast<double>(hit) / static_cast<double>(total));
    }
    eval["per_category_accuracy"] = std::move(per);
  } else {
    eval["identification_accuracy"] = nullptr;
  }
  j["evaluation"] = std::move(eval);

  detail::assert_finite_json(j, "report");
  return j;
}

inline std::string report_to_string(const Report& rep) {
  return report_to_json(rep).dump(2) + "\n";
}

namespace detail {

inline std::size_t count_category(const ordered_json& cats, const char* name) {
  std::size_t n = 0;
  for (const auto& c : cats)
    if (c.get<std::string>() == name) ++n;
  return n;
}

}  // namespace detail

// Human-readable tables from a report JSON (as produced by report_to_string).
inline std::string render_summary(const ordered_json& j) {
  std::ostringstream out;
  const auto& inst = j.at("instance");
  out << "instance: " << inst.at("n_queries").get<std::size_t>() << " queries x "
      << inst.at("n_videos").get<std::size_t>() << " videos, stage "
      << j.at("losses").at("stage").get<int>() << ", seed "
      << j.at("config").at("seed").get<std::uint64_t>() << "\n\n";

  out << std::left << std::setw(8) << "branch" << std::right << std::setw(6) << "tp"
      << std::setw(10) << "precise" << std::setw(12) << "polysemous" << std::setw(8) << "under"
      << std::setw(10) << "beta_u" << std::setw(10) << "beta_p" << "\n";
  for (const char* name : {"frame", "clip"}) {
    const auto& b = j.at("branches").at(name);
    const auto& cats = b.at("category");
    out << std::left << std::setw(8) << name << std::right << std::setw(6)
        << b.at("true_positives").size() << std::setw(10)
        << detail::count_category(cats, "precise") << std::setw(12)
        << detail::count_category(cats, "polysemous") << std::setw(8)
        << detail::count_category(cats, "under_determined") << std::setw(10) << std::setprecision(4)
        << b.at("thresholds").at("epistemic").get<double>() << std::setw(10)
        << b.at("thresholds").at("consistency").get<double>() << "\n";
  }
  const auto& fused = j.at("fusion").at("category");
  out << std::left << std::setw(8) << "fused" << std::right << std::setw(6) << "-" << std::setw(10)
      << detail::count_category(fused, "precise") << std::setw(12)
      << detail::count_category(fused, "polysemous") << std::setw(8)
      << detail::count_category(fused, "under_determined") << "\n\n";

  double conflict_mean = 0.0, conflict_max = 0.0;
  const auto& conflict = j.at("fusion").at("conflict");
  for (const auto& c : conflict) {
    conflict_mean += c.get<double>();
    conflict_max = std::max(conflict_max, c.get<double>());
  }
  if (!conflict.empty()) conflict_mean /= static_cast<double>(conflict.size());
  out << "conflict: mean " << std::setprecision(6) << conflict_mean << ", max " << conflict_max
      << "\n\n";

  const auto& l = j.at("losses");
  out << "losses:";
  for (const char* k : {"l_sim", "l_div", "l_inter", "l_intra", "l_base", "l_agg"})
    out << "  " << k << " = " << l.at(k).get<double>();
  out << "\n";

  const auto& transport = j.at("transport");
  if (!transport.empty()) {
    std::size_t converged = 0, excluded = 0;
    double dustbin = 0.0;
    for (const auto& t : transport) {
      if (t.at("converged").get<bool>()) ++converged;
      excluded += t.at("excluded_queries").size();
      dustbin += t.at("dustbin_mass").get<double>();
    }
    out << "\ntransport: " << transport.size() << " blocks, " << converged
        << " converged, total dustbin mass " << dustbin << ", excluded queries " << excluded
        << "\n";
  }

  const auto& eval = j.at("evaluation");
  if (!eval.at("identification_accuracy").is_null()) {
    out << "\nidentification accuracy vs planted truth: "
        << eval.at("identification_accuracy").get<double>();
    const auto& per = eval.at("per_category_accuracy");
    out << "  (";
    bool first = true;
    for (const auto& [k, v] : per.items()) {
      out << (first ? "" : ", ") << k << " ";
      if (v.is_null())
        out << "n/a";
      else
        out << v.get<double>();
      first = false;
    }
    out << ")\n";
  }
  return out.str();
}

// Per-query scalars for external plotting.
inline std::string plot_queries_csv(const ordered_json& j) {
  std::ostringstream out;
  out << "query,epistemic_f,consistency_f,aleatoric_f,category_f,"
         "epistemic_c,consistency_c,aleatoric_c,category_c,fused_category,conflict,"
         "fused_uncertainty\n";
  const auto& f = j.at("branches").at("frame");
  const auto& c = j.at("branches").at("clip");
  const auto& fu = j.at("fusion");
  std::size_t n = f.at("epistemic").size();
  for (std::size_t i = 0; i < n; ++i) {
    out << i << ',' << double_to_string(f.at("epistemic")[i].get<double>()) << ','
        << double_to_string(f.at("consistency")[i].get<double>()) << ','
        << double_to_string(f.at("aleatoric")[i].get<double>()) << ','
        << f.at("category")[i].get<std::string>() << ','
        << double_to_string(c.at("epistemic")[i].get<double>()) << ','
        << double_to_string(c.at("consistency")[i].get<double>()) << ','
        << double_to_string(c.at("aleatoric")[i].get<double>()) << ','
        << c.at("category")[i].get<std::string>() << ','
        << fu.at("category")[i].get<std::string>() << ','
        << double_to_string(fu.at("conflict")[i].get<double>()) << ','
        << double_to_string(fu.at("uncertainty")[i].get<double>()) << "\n";
  }
  return out.str();
}

// Per (video, query) transport mass for external plotting.
inline std::string plot_transport_csv(const ordered_json& j) {
  std::ostringstream out;
  out << "video,query,included,mass\n";
  for (const auto& t : j.at("transport")) {
    const auto& ids = t.at("query_ids");
    const auto& included = t.at("included");
    const auto& plan = t.at("plan");
    for (std::size_t col = 0; col < ids.size(); ++col) {
      double mass = 0.0;
      for (const auto& row : plan) mass += row[col].get<double>();
      out << t.at("video").get<std::size_t>() << ',' << ids[col].get<std::size_t>() << ','
          << (included[col].get<bool>() ? 1 : 0) << ',' << double_to_string(mass) << "\n";
    }
  }
  return out.str();
}

}  // namespace evret
