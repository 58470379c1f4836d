#include <doctest.h>

#include <json.hpp>

#include "resrl/config.hpp"

using namespace resrl;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "experiment": {"kind": "sample_efficiency", "seeds": [0, 1], "out_dir": "out"},
    "physics": {},
    "env": {},
    "controller": {},
    "agent": {},
    "train": {}
  })");
}

}  // namespace

TEST_CASE("defaults survive a minimal document") {
  const ExperimentConfig cfg = parse_config(minimal_doc());
  CHECK(cfg.kind == "sample_efficiency");
  CHECK(cfg.seeds.size() == 2);
  CHECK(cfg.env.a_max == 0.005);
  CHECK(cfg.env.horizon == 200);
  CHECK(cfg.agent.gamma == 0.99);
  CHECK(cfg.agent.batch_size == 128);
  CHECK(cfg.controller.k_p == 0.5);
  CHECK(cfg.controller.a_max == cfg.env.a_max);
  CHECK(cfg.train.eval_period == 1000);
}

TEST_CASE("unknown keys are hard errors at every level") {
  for (const char* patch : {
           R"({"physics": {"blck_width": 0.04}})",
           R"({"env": {"amax": 1}})",
           R"({"env": {"reward": {"lamda": 1}}})",
           R"({"agent": {"polyak": 0.005}})",
           R"({"train": {"steps": 10}})",
           R"({"controller": {"kp": 1}})",
           R"({"experiment": {"kindd": "x"}})",
           R"({"extra_section": {}})",
       }) {
    json doc = merge_overrides(minimal_doc(), json::parse(patch));
    CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
  }
}

TEST_CASE("field values flow through") {
  json doc = minimal_doc();
  doc["physics"]["gap_width"] = 0.05;
  doc["env"]["rotation_range"] = 0.2;
  doc["env"]["rotation_mode"] = "discrete3";
  doc["env"]["reward"] = {{"lambda", 0.3}, {"variant", "extended"}};
  doc["env"]["noise"] = {{"bias", 0.1}, {"sigma", 0.05}};
  doc["agent"]["actor_hidden"] = {32, 32};
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.env.physics.gap_width == 0.05);
  CHECK(cfg.env.rotation_range == 0.2);
  CHECK(cfg.env.rotation_mode == RotationMode::kDiscrete3);
  CHECK(cfg.env.reward.lambda == 0.3);
  CHECK(cfg.env.reward.variant == RewardParams::Variant::kExtended);
  CHECK(cfg.env.noise.bias == 0.1);
  CHECK(cfg.agent.actor_hidden == std::vector<int>{32, 32});
}

TEST_CASE("invariant violations are rejected") {
  SUBCASE("gap narrower than the held block") {
    json doc = minimal_doc();
    doc["physics"]["gap_width"] = 0.03;
    CHECK_THROWS(parse_config(doc));
  }
  SUBCASE("rotation range beyond the critical tilt") {
    json doc = minimal_doc();
    doc["env"]["rotation_range"] = 1.0;
    CHECK_THROWS(parse_config(doc));
  }
  SUBCASE("negative noise sigma") {
    json doc = minimal_doc();
    doc["env"]["noise"] = {{"sigma", -0.1}};
    CHECK_THROWS(parse_config(doc));
  }
  SUBCASE("bad gamma") {
    json doc = minimal_doc();
    doc["agent"]["gamma"] = 1.0;
    CHECK_THROWS(parse_config(doc));
  }
  SUBCASE("empty seeds") {
    json doc = minimal_doc();
    doc["experiment"]["seeds"] = json::array();
    CHECK_THROWS(parse_config(doc));
  }
  SUBCASE("unknown experiment kind") {
    json doc = minimal_doc();
    doc["experiment"]["kind"] = "mystery";
    CHECK_THROWS(parse_config(doc));
  }
}

TEST_CASE("sweep preconditions per experiment family") {
  SUBCASE("variation sweep must stay on the documented uniform grid") {
    json doc = minimal_doc();
    doc["experiment"]["kind"] = "variation_sweep";
    doc["experiment"]["sweep"] = {0.0, 0.1, 0.3};
    CHECK_NOTHROW(parse_config(doc));
    doc["experiment"]["sweep"] = {0.12};
    CHECK_THROWS(parse_config(doc));
  }
  SUBCASE("variation sweep in discrete3 mode allows any sub-critical angle") {
    json doc = minimal_doc();
    doc["experiment"]["kind"] = "variation_sweep";
    doc["env"]["rotation_mode"] = "discrete3";
    doc["experiment"]["sweep"] = {0.0, 0.349};
    CHECK_NOTHROW(parse_config(doc));
  }
  SUBCASE("noise sweep fixes the bias at zero") {
    json doc = minimal_doc();
    doc["experiment"]["kind"] = "noise_sweep";
    doc["experiment"]["sweep"] = {0.01, 0.05, 0.1};
    CHECK_NOTHROW(parse_config(doc));
    doc["env"]["noise"] = {{"bias", 0.1}};
    CHECK_THROWS(parse_config(doc));
  }
  SUBCASE("bias sweep fixes sigma at 0.05") {
    json doc = minimal_doc();
    doc["experiment"]["kind"] = "bias_sweep";
    doc["experiment"]["sweep"] = {0.0, 0.2};
    CHECK_THROWS(parse_config(doc));  // sigma defaults to 0
    doc["env"]["noise"] = {{"sigma", 0.05}};
    CHECK_NOTHROW(parse_config(doc));
  }
  SUBCASE("transfer needs target overrides") {
    json doc = minimal_doc();
    doc["experiment"]["kind"] = "transfer";
    CHECK_THROWS(parse_config(doc));
    doc["experiment"]["target_overrides"] = {{"physics", {{"goal_x", 0.005}}}};
    CHECK_NOTHROW(parse_config(doc));
  }
}

TEST_CASE("merge_overrides merges objects and replaces scalars") {
  const json base = json::parse(R"({"a": {"x": 1, "y": 2}, "b": 3, "c": [1, 2]})");
  const json over = json::parse(R"({"a": {"y": 20, "z": 30}, "c": [9]})");
  const json merged = merge_overrides(base, over);
  CHECK(merged["a"]["x"] == 1);
  CHECK(merged["a"]["y"] == 20);
  CHECK(merged["a"]["z"] == 30);
  CHECK(merged["b"] == 3);
  CHECK(merged["c"] == json::parse("[9]"));
}

TEST_CASE("transfer target overrides produce a valid perturbed config") {
  json doc = minimal_doc();
  doc["experiment"]["kind"] = "transfer";
  doc["experiment"]["seeds"] = {0, 1, 2};
  doc["experiment"]["target_overrides"] = {
      {"physics", {{"goal_x", 0.005}, {"friction_threshold", 2.5}}}};
  const ExperimentConfig cfg = parse_config(doc);
  const ExperimentConfig target =
      parse_config(merge_overrides(cfg.document, cfg.target_overrides));
  CHECK(target.env.physics.goal_x == 0.005);
  CHECK(target.env.physics.friction_threshold == 2.5);
  CHECK(target.env.physics.gap_width == cfg.env.physics.gap_width);
}

TEST_CASE("make_run_spec carries the nested configs and the seed") {
  const ExperimentConfig cfg = parse_config(minimal_doc());
  const RunSpec spec = make_run_spec(cfg, RunMode::kPureRl, 17);
  CHECK(spec.mode == RunMode::kPureRl);
  CHECK(spec.seed == 17);
  CHECK(spec.env.a_max == cfg.env.a_max);
  CHECK(spec.agent.batch_size == cfg.agent.batch_size);
}
