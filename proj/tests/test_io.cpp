#include "catch_amalgamated.hpp"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <string>

#include "evret/io.hpp"
#include "evret/report.hpp"
#include "evret/rng.hpp"

using namespace evret;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const char* tag) {
    path = std::filesystem::temp_directory_path() /
           (std::string("evret_test_") + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("file round trip and open failures") {
  TempDir tmp("file");
  auto p = tmp.path / "nested" / "a.txt";
  write_file(p, "hello\n");
  CHECK(read_file(p) == "hello\n");
  CHECK_THROWS_AS(read_file(tmp.path / "missing.txt"), input_error);
}

TEST_CASE("csv round trip is byte stable and value exact") {
  Rng rng(31);
  Matrix m(7, 4);
  for (auto& v : m.flat()) v = rng.uniform(-10.0, 10.0);
  m(0, 0) = 0.1;          // classic shortest-repr case
  m(1, 1) = 1.0 / 3.0;
  m(2, 2) = -0.0;
  m(3, 3) = 1e-300;

  auto cols = indexed_columns("v", 4);
  std::string text = write_csv(m, cols);
  auto parsed = read_csv(text, "round.csv");
  CHECK(parsed.columns == cols);
  REQUIRE(parsed.values.rows() == m.rows());
  REQUIRE(parsed.values.cols() == m.cols());
  CHECK(parsed.values == m);
  CHECK(write_csv(parsed.values, parsed.columns) == text);

  CHECK_THROWS_AS(write_csv(m, indexed_columns("v", 3)), input_error);
}

TEST_CASE("csv parse errors name the file and 1-based row") {
  try {
    read_csv("a,b\n1,2\n3\n", "short.csv");
    FAIL("expected input_error");
  } catch (const input_error& e) {
    CHECK_THAT(e.what(), ContainsSubstring("short.csv row 2"));
  }
  try {
    read_csv("a,b\n1,oops\n", "bad.csv");
    FAIL("expected input_error");
  } catch (const input_error& e) {
    CHECK_THAT(e.what(), ContainsSubstring("bad.csv row 1"));
    CHECK_THAT(e.what(), ContainsSubstring("oops"));
  }
  CHECK_THROWS_AS(read_csv("", "empty.csv"), input_error);
  CHECK_THROWS_AS(read_csv("a,,c\n1,2,3\n", "noname.csv"), input_error);
}

TEST_CASE("instance directory round trip") {
  TempDir tmp("inst");
  auto inst = synth_generate(30, 9, 5, ArchetypeMix{}, 314);
  write_instance(tmp.path, inst);

  CHECK(std::filesystem::exists(tmp.path / "frame_sim.csv"));
  CHECK(std::filesystem::exists(tmp.path / "clip_sim.csv"));
  CHECK(std::filesystem::exists(tmp.path / "labels.csv"));
  CHECK(std::filesystem::exists(tmp.path / "planted_truth.csv"));

  auto back = read_instance(tmp.path);
  CHECK(back.s_f == inst.s_f);
  CHECK(back.s_c == inst.s_c);
  CHECK(back.labels == inst.labels);
  CHECK(back.planted_truth == inst.planted_truth);
  REQUIRE(back.clip_query.size() == inst.clip_query.size());
  for (std::size_t i = 0; i < back.clip_query.size(); ++i) {
    CHECK(back.clip_query[i].video == inst.clip_query[i].video);
    CHECK(back.clip_query[i].query_ids == inst.clip_query[i].query_ids);
    CHECK(back.clip_query[i].sims == inst.clip_query[i].sims);
  }

  // a second write of the re-read instance reproduces the files byte for byte
  TempDir tmp2("inst2");
  write_instance(tmp2.path, back);
  CHECK(read_file(tmp2.path / "frame_sim.csv") == read_file(tmp.path / "frame_sim.csv"));
  CHECK(read_file(tmp2.path / "labels.csv") == read_file(tmp.path / "labels.csv"));
}

TEST_CASE("instance readers validate headers and contents") {
  TempDir tmp("badinst");
  auto inst = synth_generate(6, 3, 4, ArchetypeMix{}, 2);
  write_instance(tmp.path, inst);

  write_file(tmp.path / "labels.csv", "wrong\n0\n");
  CHECK_THROWS_AS(read_instance(tmp.path), input_error);
  write_file(tmp.path / "labels.csv", "label\n0\nnope\n");
  try {
    read_instance(tmp.path);
    FAIL("expected input_error");
  } catch (const input_error& e) {
    CHECK_THAT(e.what(), ContainsSubstring("labels.csv row 2"));
  }

  // restore labels, corrupt planted truth
  write_instance(tmp.path, inst);
  write_file(tmp.path / "planted_truth.csv", "category\nmystery\n");
  CHECK_THROWS_AS(read_instance(tmp.path), input_error);

  write_instance(tmp.path, inst);
  write_file(tmp.path / "clip_query_0.csv", "x1\n0.5\n");
  CHECK_THROWS_AS(read_instance(tmp.path), input_error);
}

TEST_CASE("report serializes to parseable JSON with the documented sections") {
  auto inst = synth_generate(12, 5, 4, ArchetypeMix{}, 61);
  PipelineConfig cfg;
  cfg.stage = 2;
  auto rep = run_pipeline(inst, cfg);

  std::string text = report_to_string(rep);
  auto j = ordered_json::parse(text);
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("config").at("tau").get<double>() == cfg.tau);
  CHECK(j.at("instance").at("n_queries").get<std::size_t>() == 12);
  CHECK(j.at("instance").at("n_videos").get<std::size_t>() == 5);
  CHECK(j.at("branches").at("frame").at("epistemic").size() == 12);
  CHECK(j.at("branches").at("clip").at("category").size() == 12);
  CHECK(j.at("fusion").at("category").size() == 12);
  CHECK(j.at("labels").at("calibrated").get<bool>());
  CHECK(j.at("losses").at("stage").get<int>() == 2);
  CHECK(j.at("transport").size() == rep.transport.size());
  CHECK_FALSE(j.at("evaluation").at("identification_accuracy").is_null());

  // stage 1: no calibration, no transport
  PipelineConfig cfg1;
  auto rep1 = run_pipeline(inst, cfg1);
  auto j1 = ordered_json::parse(report_to_string(rep1));
  CHECK_FALSE(j1.at("labels").at("calibrated").get<bool>());
  CHECK(j1.at("transport").empty());
  CHECK(j1.at("losses").at("l_intra").get<double>() == 0.0);
}

TEST_CASE("report serialization rejects non-finite values") {
  auto inst = synth_generate(6, 3, 4, ArchetypeMix{}, 15);
  auto rep = run_pipeline(inst, PipelineConfig{});
  rep.conflict[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(report_to_json(rep), numerical_error);
}

TEST_CASE("summary and plot exports cover every query") {
  auto inst = synth_generate(9, 4, 4, ArchetypeMix{}, 33);
  PipelineConfig cfg;
  cfg.stage = 2;
  auto j = report_to_json(run_pipeline(inst, cfg));

  std::string summary = render_summary(j);
  CHECK_THAT(summary, ContainsSubstring("9 queries x 4 videos"));
  CHECK_THAT(summary, ContainsSubstring("losses:"));
  CHECK_THAT(summary, ContainsSubstring("identification accuracy"));

  std::string queries = plot_queries_csv(j);
  CHECK(std::count(queries.begin(), queries.end(), '\n') == 10);  // header + 9 rows
  CHECK_THAT(queries, ContainsSubstring("query,epistemic_f"));

  std::string transport = plot_transport_csv(j);
  std::size_t expected_rows = 0;
  for (const auto& t : j.at("transport")) expected_rows += t.at("query_ids").size();
  CHECK(std::count(transport.begin(), transport.end(), '\n') ==
        static_cast<long>(expected_rows + 1));
}
