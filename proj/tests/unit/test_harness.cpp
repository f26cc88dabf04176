#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dice/errors.hpp"
#include "dice/harness.hpp"
#include "doctest.h"

using namespace dice;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dice_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// Small but real training setup: finishes in a few seconds.
ExperimentConfig tiny_onpolicy(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.trainer = "onpolicy";
  cfg.env_name = "line_return";
  cfg.line_horizon = 16;
  cfg.onpolicy.K = 2;
  cfg.onpolicy.N = 64;
  cfg.onpolicy.minibatch = 32;
  cfg.onpolicy.sgd_iters = 2;
  cfg.onpolicy.vf_train_iters = 2;
  cfg.onpolicy.hidden = 4;
  cfg.max_env_steps = 256;
  cfg.seeds = {0};
  cfg.out_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("format_double round-trips doubles exactly") {
  for (double v : {0.1, 1.0 / 3.0, -0.0, 2.0, 12345.6789, 1e-17, 3.5e300}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("an empty config resolves to the documented defaults") {
  ExperimentConfig cfg = load_config_text("{}");
  CHECK(cfg.trainer == "onpolicy");
  CHECK(cfg.env_name == "point_goal");
  CHECK(cfg.onpolicy.K == 5);
  CHECK(cfg.onpolicy.N == 2048);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 100, 200});
  CHECK(cfg.max_env_steps == 100000);
  CHECK(cfg.label == "full");
  CHECK(cfg.out_dir == "runs/out");
}

TEST_CASE("unknown keys are rejected with their dotted path") {
  auto message_of = [](const std::string& text) {
    try {
      load_config_text(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("<no error>");
  };
  CHECK(message_of(R"({"bogus": 1})").find("bogus: unknown key") !=
        std::string::npos);
  CHECK(message_of(R"({"onpolicy": {"bogus": 1}})")
            .find("onpolicy.bogus: unknown key") != std::string::npos);
  CHECK(message_of(R"({"offpolicy": {"minibatch": 8}})")
            .find("offpolicy.minibatch: unknown key") != std::string::npos);
  // Env keys are scoped to the named environment.
  CHECK(message_of(R"({"env": {"name": "grid_maze", "goals": 2}})")
            .find("env.goals: unknown key") != std::string::npos);
}

TEST_CASE("ill-typed or invalid values are rejected") {
  CHECK_THROWS_AS(load_config_text(R"({"trainer": "sarsa"})"), ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"schema_version": 99})"), ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"onpolicy": {"K": "five"}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"onpolicy": {"lr": "fast"}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"onpolicy": {"use_dr": 1}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"seeds": []})"), ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"seeds": [-3]})"), ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"seeds": ["a"]})"), ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"max_env_steps": 0})"), ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"env": {"name": "mountain_car"}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config_text(R"({"offpolicy": {"mode": "psync"}})"),
                  ConfigError);
  // Trainer-level validation still applies to parsed values.
  CHECK_THROWS_AS(load_config_text(R"({"onpolicy": {"K": 0}})"), ConfigError);
}

TEST_CASE("syntax errors carry the origin and line position") {
  std::string msg;
  try {
    load_config_text("{\n  \"trainer\": onpolicy\n}", "exp.json");
  } catch (const ConfigError& e) {
    msg = e.what();
  }
  CHECK(msg.find("exp.json") != std::string::npos);
  CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("the off-policy trainer rejects discrete-action environments") {
  CHECK_THROWS_AS(load_config_text(
                      R"({"trainer": "offpolicy", "env": {"name": "grid_maze"}})"),
                  ConfigError);
  // The same env is fine on-policy.
  ExperimentConfig ok =
      load_config_text(R"({"trainer": "onpolicy", "env": {"name": "grid_maze"}})");
  CHECK(ok.make_env()->spec().kind == ActionKind::Discrete);
}

TEST_CASE("off-policy mode strings map onto the enum") {
  ExperimentConfig a = load_config_text(
      R"({"trainer": "offpolicy", "env": {"name": "line_return"},
          "offpolicy": {"mode": "share_buffer"}})");
  CHECK(a.offpolicy.mode == CeMode::ShareBuffer);
  ExperimentConfig b = load_config_text(
      R"({"trainer": "offpolicy", "env": {"name": "line_return"},
          "offpolicy": {"mode": "independent"}})");
  CHECK(b.offpolicy.mode == CeMode::Independent);
}

TEST_CASE("overrides patch dotted paths with typed values") {
  nlohmann::json j = nlohmann::json::object();
  apply_override(j, "onpolicy.K=7");
  apply_override(j, "onpolicy.use_dr=false");
  apply_override(j, "env.name=grid_maze");
  apply_override(j, "onpolicy.lr=0.001");
  CHECK(j["onpolicy"]["K"] == 7);
  CHECK(j["onpolicy"]["use_dr"] == false);
  CHECK(j["env"]["name"] == "grid_maze");  // bare string fallback
  CHECK(j["onpolicy"]["lr"] == 0.001);

  ExperimentConfig cfg = config_from_json(j);
  CHECK(cfg.onpolicy.K == 7);
  CHECK_FALSE(cfg.onpolicy.use_dr);
  CHECK(cfg.env_name == "grid_maze");

  CHECK_THROWS_AS(apply_override(j, "noequals"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "=5"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "onpolicy..K=5"), ConfigError);
  j["trainer"] = "offpolicy";
  CHECK_THROWS_AS(apply_override(j, "trainer.x=1"), ConfigError);  // scalar path
}

TEST_CASE("resolved configs are parse stable") {
  ExperimentConfig cfg = load_config_text(
      R"({"trainer": "onpolicy", "env": {"name": "point_goal", "goals": 4},
          "onpolicy": {"K": 3, "use_na": true}, "seeds": [7],
          "label": "probe"})");
  const std::string once = cfg.resolved().dump();
  ExperimentConfig back = config_from_json(cfg.resolved());
  CHECK(back.resolved().dump() == once);
  CHECK(back.point_goal.goals == 4);
  CHECK(back.onpolicy.use_na);
  CHECK(back.label == "probe");
}

TEST_CASE("environment factories honor the configured env") {
  ExperimentConfig cfg;
  cfg.env_name = "point_goal";
  cfg.point_goal.goals = 5;
  auto pg = cfg.make_env();
  CHECK(pg->spec().kind == ActionKind::Continuous);
  CHECK(pg->spec().obs_dim == 2 + 2 * 5);
  cfg.env_name = "line_return";
  cfg.line_horizon = 9;
  CHECK(cfg.make_env()->spec().horizon == 9);
  cfg.env_name = "mystery";
  CHECK_THROWS_AS(cfg.make_env(), ConfigError);
}

TEST_CASE("single runs write one csv row per iteration and reproduce") {
  fs::path dir = fresh_dir("single");
  ExperimentConfig cfg = tiny_onpolicy(dir);

  RunResult res = run_single(cfg, 0);
  CHECK(res.status == "completed");
  CHECK(res.variant == "full");
  CHECK(res.seed == 0);
  CHECK(res.iterations == 4);  // 256 budget / 64 team steps per iteration
  CHECK(res.env_steps == 256);
  CHECK(res.metrics_path == (dir / "full_seed0.csv").string());

  const std::string first = slurp(res.metrics_path);
  CHECK(count_lines(first) == 5);  // header + 4 rows
  std::istringstream is(first);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "iteration,env_steps,seed,best_return,diversity_mean,entropy,"
        "ratio_mean,ratio_max,grad_cosine,clip_fraction,kl,value_loss,"
        "return_0,return_1");
  std::string row0;
  std::getline(is, row0);
  CHECK(row0.substr(0, 7) == "0,64,0,");

  RunResult again = run_single(cfg, 0);
  CHECK(slurp(again.metrics_path) == first);  // byte-identical rerun

  fs::remove_all(dir);
}

TEST_CASE("single runs drive the off-policy trainer the same way") {
  fs::path dir = fresh_dir("single_off");
  ExperimentConfig cfg;
  cfg.trainer = "offpolicy";
  cfg.env_name = "line_return";
  cfg.line_horizon = 16;
  cfg.offpolicy.K = 1;
  cfg.offpolicy.N = 16;
  cfg.offpolicy.buffer_capacity = 256;
  cfg.offpolicy.warmup_steps = 16;
  cfg.offpolicy.steps_per_iteration = 16;
  cfg.offpolicy.hidden = 4;
  cfg.max_env_steps = 32;
  cfg.seeds = {3};
  cfg.out_dir = dir.string();
  cfg.label = "sac";

  RunResult res = run_single(cfg, 3);
  CHECK(res.status == "completed");
  CHECK(res.env_steps == 32);
  const std::string text = slurp(res.metrics_path);
  CHECK(count_lines(text) == 3);  // header + 2 iterations
  CHECK(text.find("return_0") != std::string::npos);
  CHECK(text.find("return_1") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("aborted runs are recorded as data, not crashes") {
  fs::path dir = fresh_dir("abort");
  ExperimentConfig cfg = tiny_onpolicy(dir);
  cfg.onpolicy.lr = 1e200;  // blows up within the first iteration
  cfg.onpolicy.max_grad_norm = 0.0;
  cfg.label = "doomed";

  RunResult res = run_single(cfg, 0);
  CHECK(res.status.rfind("aborted:", 0) == 0);
  CHECK(res.status.find("iteration") != std::string::npos);
  CHECK(res.iterations <= 1);
  // The metrics file exists and still starts with the header.
  const std::string text = slurp(res.metrics_path);
  CHECK(text.rfind("iteration,env_steps", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("experiments fan out over seeds and write a manifest") {
  fs::path dir = fresh_dir("experiment");
  ExperimentConfig cfg = tiny_onpolicy(dir);
  cfg.seeds = {0, 1};
  cfg.max_env_steps = 128;

  std::vector<RunResult> runs = run_experiment(cfg);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].seed == 0);
  CHECK(runs[1].seed == 1);
  CHECK(fs::exists(dir / "full_seed0.csv"));
  CHECK(fs::exists(dir / "full_seed1.csv"));

  nlohmann::json man = nlohmann::json::parse(slurp((dir / "manifest.json").string()));
  CHECK(man["schema_version"] == 1);
  REQUIRE(man["experiments"].size() == 1);
  CHECK(man["experiments"][0]["label"] == "full");
  CHECK(man["experiments"][0]["config_hash"].get<std::string>().size() == 16);
  CHECK(man["experiments"][0]["config"]["onpolicy"]["K"] == 2);
  REQUIRE(man["runs"].size() == 2);
  CHECK(man["runs"][0]["status"] == "completed");
  CHECK(man["runs"][1]["seed"] == 1);
  fs::remove_all(dir);
}

TEST_CASE("team-size sweeps relabel per K and keep the step budget") {
  fs::path dir = fresh_dir("sweep");
  ExperimentConfig cfg = tiny_onpolicy(dir);
  cfg.seeds = {0};
  cfg.max_env_steps = 128;

  std::vector<RunResult> runs = sweep_team_size(cfg, {1, 2});
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].variant == "k1");
  CHECK(runs[1].variant == "k2");
  CHECK(fs::exists(dir / "k1_seed0.csv"));
  CHECK(fs::exists(dir / "k2_seed0.csv"));
  // Both runs consumed the same team env-step budget.
  CHECK(runs[0].env_steps == runs[1].env_steps);

  nlohmann::json man = nlohmann::json::parse(slurp((dir / "manifest.json").string()));
  REQUIRE(man["experiments"].size() == 2);
  CHECK(man["experiments"][0]["config"]["onpolicy"]["K"] == 1);
  CHECK(man["experiments"][1]["config"]["onpolicy"]["K"] == 2);

  CHECK_THROWS_AS(sweep_team_size(cfg, {}), ConfigError);
  CHECK_THROWS_AS(sweep_team_size(cfg, {0}), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("the ablation matrix spans exactly the seven variants") {
  ExperimentConfig base = tiny_onpolicy("unused");
  std::vector<ExperimentConfig> vs = ablation_variants(base);
  REQUIRE(vs.size() == 7);
  const std::vector<std::string> labels{"full",  "wo_ce", "wo_dr", "dvn",
                                        "na",    "wo_tsc", "wo_du"};
  for (std::size_t i = 0; i < vs.size(); ++i) CHECK(vs[i].label == labels[i]);

  // full leaves the base flags alone.
  CHECK(vs[0].onpolicy.use_ce);
  CHECK(vs[0].onpolicy.use_dr);
  CHECK(vs[0].onpolicy.use_tsc);
  CHECK(vs[0].onpolicy.use_du);
  CHECK_FALSE(vs[0].onpolicy.use_dvn);
  CHECK_FALSE(vs[0].onpolicy.use_na);
  // Each named variant flips exactly its own switch.
  CHECK_FALSE(vs[1].onpolicy.use_ce);
  CHECK(vs[1].onpolicy.use_dr);
  CHECK_FALSE(vs[2].onpolicy.use_dr);
  CHECK(vs[2].onpolicy.use_ce);
  CHECK(vs[3].onpolicy.use_dvn);
  CHECK(vs[4].onpolicy.use_na);
  CHECK_FALSE(vs[5].onpolicy.use_tsc);
  CHECK(vs[5].onpolicy.use_dr);
  CHECK_FALSE(vs[6].onpolicy.use_du);

  ExperimentConfig off = base;
  off.trainer = "offpolicy";
  CHECK_THROWS_AS(ablation_variants(off), ConfigError);
}

TEST_CASE("summaries aggregate final best returns per variant") {
  fs::path dir = fresh_dir("summary");
  auto write_csv = [&](const std::string& name, std::vector<double> finals) {
    std::ofstream out(dir / name);
    out << "iteration,env_steps,seed,best_return\n";
    int it = 0;
    for (double v : finals)
      out << it++ << ",64,0," << format_double(v) << "\n";
  };
  write_csv("a_seed0.csv", {0.5, 2.0});
  write_csv("a_seed1.csv", {1.0, 4.0});
  write_csv("b_seed0.csv", {1.0});

  std::vector<SummaryRow> rows = summarize_dir(dir.string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].variant == "a");
  CHECK(rows[0].runs == 2);
  CHECK(rows[0].mean == doctest::Approx(3.0));
  CHECK(rows[0].stddev == doctest::Approx(1.0));  // population std of {2, 4}
  CHECK(rows[1].variant == "b");
  CHECK(rows[1].runs == 1);
  CHECK(rows[1].mean == doctest::Approx(1.0));
  CHECK(rows[1].stddev == doctest::Approx(0.0));

  const std::string table = summarize(dir.string());
  CHECK(table.find("variant") != std::string::npos);
  CHECK(table.find("a") != std::string::npos);
  CHECK(fs::exists(dir / "summary.csv"));
  // summary.csv itself is excluded from later scans.
  std::vector<SummaryRow> again = summarize_dir(dir.string());
  CHECK(again.size() == 2);
  CHECK(again[0].runs == 2);

  CHECK_THROWS_AS(summarize_dir((dir / "missing").string()), ConfigError);
  fs::remove_all(dir);
}
