#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpe/experiment.hpp"

using namespace mpe;
namespace fs = std::filesystem;

namespace {

fs::path out_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / "mpe_test_experiment" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  FAIL("no column " << name);
  return 0;
}

// Seconds-scale training trial.
Json small_training() {
  return Json{{"task", "multi-cluster"},
              {"n_train_samples", 20},
              {"n_eval_samples", 12},
              {"train",
               {{"n_d", 2}, {"n_f", 1}, {"K", 2}, {"L", 1}, {"batch_size", 4}, {"epochs_per_cycle", 1},
                {"iterations_per_epoch", 3}}}};
}

}  // namespace

TEST_CASE("config merge and validation") {
  const auto def = resolve_config(Json::object());
  CHECK(def == default_experiment_config());

  const auto cfg = resolve_config(Json{{"train", {{"L", 2}}}});
  CHECK(cfg["train"]["L"] == 2);
  CHECK(cfg["train"]["K"] == 5);

  CHECK_THROWS_AS(resolve_config(Json{{"nope", 1}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"train", {{"depth", 1}}}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"train", {{"L", "four"}}}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"task", "dance"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"n_trials", 0}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"train", {{"batch_size", 0}}}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"sweep", {{"axis", "L"}, {"values", {3}}, {"total_layers", 20}}}}), ConfigError);
}

TEST_CASE("overrides") {
  Json cfg = default_experiment_config();
  apply_override(cfg, "train.L=7");
  CHECK(cfg["train"]["L"] == 7);
  apply_override(cfg, "task=certify");
  CHECK(cfg["task"] == "certify");
  apply_override(cfg, "iqp.q=[\"1/3\",\"2/3\"]");
  CHECK(cfg["iqp"]["q"].size() == 2);
  CHECK_THROWS_AS(apply_override(cfg, "train.depth=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.L"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.L=deep"), ConfigError);
}

TEST_CASE("sweep axis helpers") {
  Json cfg = resolve_config(Json{{"sweep", {{"axis", "L"}, {"total_layers", 20}}}, {"train", {{"K", 5}, {"L", 4}}}});
  CHECK(current_sweep_value(cfg) == 4.0);
  const auto two = with_sweep_value(cfg, 2);
  CHECK(two["train"]["L"] == 2);
  CHECK(two["train"]["K"] == 10);
  CHECK_THROWS_AS(with_sweep_value(cfg, 3), ConfigError);

  Json lr = resolve_config(Json{{"sweep", {{"axis", "train.learning_rate"}}}});
  CHECK(with_sweep_value(lr, 0.01)["train"]["learning_rate"] == 0.01);
  CHECK(current_sweep_value(resolve_config(Json::object())) == 0.0);

  CHECK(trial_seed(1, 0, 2.0) == trial_seed(1, 0, 2.0));
  CHECK(trial_seed(1, 0, 2.0) != trial_seed(1, 1, 2.0));
  CHECK(trial_seed(1, 0, 2.0) != trial_seed(1, 0, 4.0));
}

TEST_CASE("iqp-check task reproduces the worked instance") {
  const auto out = out_dir("iqp");
  const auto t = run_experiment(Json{{"task", "iqp-check"}, {"iqp", {{"q", {"1/3", "2/3"}}, {"epsilon", 0.25}}}}, out);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][column(t, "tv_exact")] == "1/24");
  CHECK(t.rows[0][column(t, "ok")] == "1");
  CHECK(t.rows[0][column(t, "n_m")] == "3");
  CHECK(fs::exists(out / "iqp_t0.json"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(slurp(out / "metrics.csv") == t.to_csv());
}

TEST_CASE("ball-volume task") {
  const auto t = run_experiment(Json{{"task", "ball-volume"}, {"ball", {{"delta", 0.3}, {"n_samples", 20000}}}},
                                out_dir("ball"));
  const double est = std::stod(t.rows[0][column(t, "estimate")]);
  const double se = std::stod(t.rows[0][column(t, "standard_error")]);
  CHECK(std::abs(est - 0.09) < 4 * se);
  CHECK(t.rows[0][column(t, "wall_s")] == "0");
}

TEST_CASE("sweep table layout") {
  Json cfg{{"task", "ball-volume"},
           {"n_trials", 2},
           {"ball", {{"n_samples", 1000}}},
           {"sweep", {{"axis", "ball.delta"}, {"values", {0.2, 0.4, 0.6}}}}};
  const auto t = run_sweep(cfg, out_dir("sweep"));
  REQUIRE(t.rows.size() == 9);
  CHECK(t.header.back() == "estimate_std");
  int means = 0;
  for (const auto& r : t.rows) {
    CHECK(r.size() == t.header.size());
    if (r[0] == "mean") ++means;
  }
  CHECK(means == 3);
  CHECK(t.rows[0][1] == "0.2");
  CHECK(t.rows[2][1] == "0.4");
  CHECK_THROWS_AS(run_sweep(Json{{"task", "ball-volume"}}, out_dir("nosweep")), ConfigError);
}

TEST_CASE("training runs are byte-identical for the same config and seed") {
  const auto cfg = small_training();
  const auto a = out_dir("det_a"), b = out_dir("det_b");
  run_experiment(cfg, a);
  run_experiment(cfg, b);
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "checkpoint_t0.json") == slurp(b / "checkpoint_t0.json"));

  Json other = cfg;
  other["seed"] = 2;
  run_experiment(other, b);
  CHECK(slurp(a / "metrics.csv") != slurp(b / "metrics.csv"));
}

TEST_CASE("a one-value sweep matches the plain run") {
  Json cfg = small_training();
  cfg["sweep"] = {{"axis", "train.learning_rate"}, {"values", {0.05}}};
  const auto run = run_experiment(cfg, out_dir("one_run"));
  const auto sweep = run_sweep(cfg, out_dir("one_sweep"));
  REQUIRE(sweep.rows.size() == 2);
  for (std::size_t c = 0; c < run.header.size(); ++c) CHECK(sweep.rows[0][c] == run.rows[0][c]);
}

TEST_CASE("qm9 task needs a dataset") {
  CHECK_THROWS_AS(run_experiment(Json{{"task", "qm9"}}, out_dir("qm9")), ConfigError);
  Json missing{{"task", "qm9"}, {"qm9", {{"path", "/nonexistent/records.jsonl"}}}};
  CHECK_THROWS(run_experiment(missing, out_dir("qm9")));
}
