#include "catch_amalgamated.hpp"

#include <string>

#include "evret/config.hpp"

using namespace evret;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("defaults validate and survive an emit/parse round trip") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.tau == 0.1);
  CHECK(cfg.beta == 0.3);
  CHECK(cfg.gamma == 0.2);
  CHECK(cfg.weights.alpha_f == 0.5);
  CHECK(cfg.ot.epsilon == 0.05);
  CHECK(cfg.ot.max_iterations == 500);
  CHECK(cfg.stage == 1);
  CHECK(cfg.seed == 42);
  CHECK(cfg.threads == 1);
  CHECK_FALSE(cfg.ot.dustbin_capacity.has_value());

  std::string text = emit_config(cfg);
  PipelineConfig parsed = parse_config(text);
  CHECK(emit_config(parsed) == text);
}

TEST_CASE("parse handles sections, comments, and whitespace") {
  std::string text =
      "# pipeline settings\n"
      "tau = 0.2   # inline comment\n"
      "beta=0.25\n"
      "  gamma = 0.5\n"
      "seed = 123456789\n"
      "stage = 2\n"
      "threads = 4\n"
      "\n"
      "[ot]\n"
      "epsilon = 0.01\n"
      "max_iterations = 900\n"
      "dustbin_capacity = 0.125\n"
      "\n"
      "[loss]\n"
      "margin = 0.3\n"
      "lambda_c = 0.05\n";
  auto cfg = parse_config(text);
  CHECK(cfg.tau == 0.2);
  CHECK(cfg.beta == 0.25);
  CHECK(cfg.gamma == 0.5);
  CHECK(cfg.seed == 123456789u);
  CHECK(cfg.stage == 2);
  CHECK(cfg.threads == 4);
  CHECK(cfg.ot.epsilon == 0.01);
  CHECK(cfg.ot.max_iterations == 900);
  REQUIRE(cfg.ot.dustbin_capacity.has_value());
  CHECK(*cfg.ot.dustbin_capacity == 0.125);
  CHECK(cfg.margin == 0.3);
  CHECK(cfg.lambda_c == 0.05);
  CHECK(cfg.lambda_f == 0.02);  // untouched default

  // dotted keys work without section headers too
  auto dotted = parse_config("ot.epsilon = 0.5\nloss.margin = 0.1\n");
  CHECK(dotted.ot.epsilon == 0.5);
  CHECK(dotted.margin == 0.1);
}

TEST_CASE("round trip preserves every field byte for byte") {
  PipelineConfig cfg;
  cfg.tau = 0.07;
  cfg.beta = 0.31;
  cfg.gamma = 0.9;
  cfg.weights = {0.25, 0.75};
  cfg.ot.epsilon = 0.125;
  cfg.ot.max_iterations = 77;
  cfg.ot.marginal_tolerance = 1e-8;
  cfg.ot.dustbin_percentile = 12.5;
  cfg.ot.dustbin_capacity = 0.03;
  cfg.margin = 0.45;
  cfg.lambda_c = 0.1;
  cfg.lambda_f = 0.2;
  cfg.diversity_delta = 0.05;
  cfg.diversity_scale = 16.0;
  cfg.stage = 2;
  cfg.seed = 0xdeadbeefcafe;
  cfg.threads = 8;

  std::string once = emit_config(cfg);
  std::string twice = emit_config(parse_config(once));
  CHECK(once == twice);
}

TEST_CASE("parse errors carry the offending line number") {
  try {
    parse_config("tau = 0.1\nbogus_key = 3\n");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK_THAT(e.what(), ContainsSubstring("line 2"));
    CHECK_THAT(e.what(), ContainsSubstring("bogus_key"));
  }

  try {
    parse_config("\n\ntau = not_a_number\n");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK_THAT(e.what(), ContainsSubstring("line 3"));
  }

  CHECK_THROWS_AS(parse_config("tau 0.1\n"), config_error);
  CHECK_THROWS_AS(parse_config("[ot\nepsilon = 0.1\n"), config_error);
  CHECK_THROWS_AS(parse_config("stage = 1.5\n"), config_error);
  CHECK_THROWS_AS(parse_config("seed = -1\n"), config_error);
}

TEST_CASE("validation rejects out-of-range fields") {
  auto broken = [](auto&& mutate) {
    PipelineConfig cfg;
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_AS(broken([](auto& c) { c.tau = 0.0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.beta = 1.0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.gamma = -0.1; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.weights.alpha_f = 0.9; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.ot.epsilon = 0.0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.ot.max_iterations = 0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.ot.marginal_tolerance = 0.0; }).validate(),
                  config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.ot.dustbin_percentile = 101.0; }).validate(),
                  config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.ot.dustbin_capacity = 1.0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.margin = -1.0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.lambda_c = -0.1; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.diversity_delta = 0.0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.diversity_scale = 0.0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.stage = 0; }).validate(), config_error);
  CHECK_THROWS_AS(broken([](auto& c) { c.threads = 0; }).validate(), config_error);
  CHECK_THROWS_AS(parse_config("tau = -3\n"), config_error);
}
