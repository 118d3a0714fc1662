#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "evret/evret.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> stage;
  std::string out;
};

evret::PipelineConfig load_config(const GlobalOpts& g) {
  evret::PipelineConfig cfg;
  if (!g.config_path.empty()) {
    std::string text;
    try {
      text = evret::read_file(g.config_path);
    } catch (const evret::input_error& e) {
      throw evret::config_error(e.what());
    }
    cfg = evret::parse_config(text);
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.stage) cfg.stage = *g.stage;
  cfg.validate();
  return cfg;
}

void emit(const GlobalOpts& g, const std::string& content) {
  if (g.out.empty())
    std::cout << content;
  else
    evret::write_file(g.out, content);
}

// identify/calibrate share the identification half of the pipeline and must
// not require loss-domain preconditions (e.g. positive similarities).
struct Identification {
  evret::BranchAnalysis frame, clip;
  evret::PartitionSet fused;
  std::vector<double> conflict;
  std::vector<evret::SubjectiveOpinion> fused_opinions;
};

Identification identify(const evret::Instance& inst, const evret::PipelineConfig& cfg) {
  Identification id;
  id.frame = evret::analyze_branch(inst.s_f, inst.labels, cfg.tau, cfg.beta, cfg.threads);
  id.clip = evret::analyze_branch(inst.s_c, inst.labels, cfg.tau, cfg.beta, cfg.threads);
  id.fused = evret::udpf_fuse(id.frame.refined, id.clip.refined);
  id.conflict.resize(inst.n_queries());
  id.fused_opinions.resize(inst.n_queries());
  for (std::size_t i = 0; i < inst.n_queries(); ++i) {
    id.conflict[i] = evret::conflict_mass(id.frame.opinions[i], id.clip.opinions[i]);
    id.fused_opinions[i] = evret::combine_opinions(id.frame.opinions[i], id.clip.opinions[i]);
  }
  return id;
}

int run(int argc, char** argv) {
  CLI::App app{"evidential partially-relevant retrieval toolkit"};
  app.set_version_flag("--version", "evret 0.1.0");
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "key = value config file");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--stage", g.stage, "override the config stage (1 or 2)");
  app.add_option("--out", g.out, "output path (default: stdout; synth requires a directory)");

  // let --config/--seed/--stage/--out appear after the subcommand name too
  auto* synth = app.add_subcommand("synth", "generate a synthetic instance directory");
  synth->fallthrough();
  std::size_t n_queries = 60, n_videos = 30, n_clips = 8;
  std::vector<double> mix;
  synth->add_option("--queries", n_queries, "number of queries");
  synth->add_option("--videos", n_videos, "number of candidate videos");
  synth->add_option("--clips", n_clips, "clips per annotated video");
  synth->add_option("--mix", mix, "archetype fractions: precise,polysemous,under_determined")
      ->delimiter(',')
      ->expected(3);

  std::string in_path;
  auto* identify_cmd = app.add_subcommand("identify", "per-branch analysis and fused categories");
  identify_cmd->fallthrough();
  identify_cmd->add_option("--in", in_path, "instance directory")->required();
  auto* calibrate_cmd = app.add_subcommand("calibrate", "emit calibrated label rows as CSV");
  calibrate_cmd->fallthrough();
  calibrate_cmd->add_option("--in", in_path, "instance directory")->required();
  auto* transport_cmd =
      app.add_subcommand("transport", "flexible transport plan for one clip-query CSV");
  transport_cmd->fallthrough();
  transport_cmd->add_option("--in", in_path, "clip-query similarity CSV")->required();
  bool strict = false;
  transport_cmd->add_flag("--strict", strict, "exit 2 if the solver did not converge");
  auto* pipeline_cmd = app.add_subcommand("pipeline", "full two-branch pipeline, JSON report");
  pipeline_cmd->fallthrough();
  pipeline_cmd->add_option("--in", in_path, "instance directory")->required();
  pipeline_cmd->add_flag("--strict", strict, "exit 2 if any transport solve did not converge");
  auto* report_cmd = app.add_subcommand("report", "render summary tables from a report JSON");
  report_cmd->fallthrough();
  report_cmd->add_option("--in", in_path, "report JSON file")->required();
  std::string csv_dir;
  report_cmd->add_option("--csv-dir", csv_dir, "also write plot data CSVs here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  evret::PipelineConfig cfg = load_config(g);

  if (synth->parsed()) {
    if (g.out.empty()) throw evret::config_error("synth: --out directory is required");
    evret::ArchetypeMix am;
    if (!mix.empty()) am = {mix[0], mix[1], mix[2]};
    auto inst = evret::synth_generate(n_queries, n_videos, n_clips, am, cfg.seed);
    evret::write_instance(g.out, inst);
    std::cout << "wrote instance: " << inst.n_queries() << " queries x " << inst.n_videos()
              << " videos, " << inst.clip_query.size() << " clip blocks -> " << g.out << "\n";
    return 0;
  }

  if (identify_cmd->parsed()) {
    auto inst = evret::read_instance(in_path);
    auto id = identify(inst, cfg);
    evret::ordered_json j;
    j["schema_version"] = 1;
    j["instance"] = {{"n_queries", inst.n_queries()}, {"n_videos", inst.n_videos()}};
    j["branches"] = {{"frame", evret::detail::branch_to_json(id.frame)},
                     {"clip", evret::detail::branch_to_json(id.clip)}};
    j["fusion"] = {{"category", evret::detail::categories_to_json(id.fused.category)},
                   {"conflict", id.conflict}};
    if (!inst.planted_truth.empty()) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < inst.n_queries(); ++i)
        if (id.fused.category[i] == inst.planted_truth[i]) ++hits;
      j["identification_accuracy"] =
          static_cast<double>(hits) / static_cast<double>(inst.n_queries());
    }
    evret::detail::assert_finite_json(j, "identify");
    emit(g, j.dump(2) + "\n");
    return 0;
  }

  if (calibrate_cmd->parsed()) {
    auto inst = evret::read_instance(in_path);
    auto id = identify(inst, cfg);
    auto rows =
        evret::calibrate_labels(id.fused, inst.one_hot_labels(), inst.s_f, inst.s_c, cfg.gamma);
    emit(g, evret::write_csv(rows, evret::indexed_columns("v", rows.cols())));
    return 0;
  }

  if (transport_cmd->parsed()) {
    auto csv = evret::read_csv(evret::read_file(in_path),
                               std::filesystem::path(in_path).filename().string());
    auto plan = evret::flexible_ot(csv.values, cfg.ot);
    auto labels = evret::plan_as_labels(plan.plan);
    evret::ordered_json j;
    j["schema_version"] = 1;
    j["columns"] = csv.columns;
    j["converged"] = plan.converged;
    j["iterations"] = plan.iterations;
    j["dustbin_value"] = plan.dustbin_value;
    j["dustbin_mass"] = plan.dustbin_mass;
    j["included"] = labels.included;
    j["plan"] = evret::detail::matrix_to_json(plan.plan);
    j["plan_labels"] = evret::detail::matrix_to_json(labels.distributions);
    evret::detail::assert_finite_json(j, "transport");
    emit(g, j.dump(2) + "\n");
    if (strict && !plan.converged)
      throw evret::numerical_error("transport did not converge within " +
                                   std::to_string(cfg.ot.max_iterations) + " iterations");
    return 0;
  }

  if (pipeline_cmd->parsed()) {
    auto inst = evret::read_instance(in_path);
    auto rep = evret::run_pipeline(inst, cfg);
    emit(g, evret::report_to_string(rep));
    if (strict && !rep.transport_converged())
      throw evret::numerical_error("one or more transport solves did not converge");
    return 0;
  }

  if (report_cmd->parsed()) {
    evret::ordered_json j;
    try {
      j = evret::ordered_json::parse(evret::read_file(in_path));
    } catch (const nlohmann::json::exception& e) {
      throw evret::input_error(in_path + ": " + e.what());
    }
    std::cout << evret::render_summary(j);
    if (!csv_dir.empty()) {
      evret::write_file(std::filesystem::path(csv_dir) / "queries.csv",
                        evret::plot_queries_csv(j));
      evret::write_file(std::filesystem::path(csv_dir) / "transport.csv",
                        evret::plot_transport_csv(j));
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const evret::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const evret::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const evret::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
