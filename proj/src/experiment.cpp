#include "mpe/experiment.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <fstream>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "mpe/covering.hpp"
#include "mpe/datasets.hpp"
#include "mpe/metrics.hpp"
#include "mpe/universality.hpp"

namespace mpe {

Json default_experiment_config() {
  return Json{
      {"task", "multi-cluster"},
      {"seed", 1},
      {"n_trials", 1},
      {"n_train_samples", 200},
      {"n_eval_samples", 200},
      {"record_wall_time", false},
      {"write_checkpoints", true},
      {"train",
       {{"n_d", 4},
        {"n_f", 2},
        {"K", 5},
        {"L", 4},
        {"batch_size", 32},
        {"epochs_per_cycle", 12},
        {"iterations_per_epoch", 10},
        {"learning_rate", 0.05},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"adam_eps", 1e-8},
        {"lambda_vs", 0.05},
        {"fd_step", 0.1}}},
      {"clusters", {{"weights", {0.4, 0.4, 0.2}}, {"sigma", 0.05}}},
      {"qm9", {{"path", ""}, {"strict", true}}},
      {"certify", {{"n", 3}, {"sigma", 0.0}, {"n_samples", 500}, {"delta", 0.2}, {"epsilon", 0.2}, {"n_draws", 10000}}},
      {"iqp", {{"q", Json::array()}, {"n_outcomes", 4}, {"epsilon", 0.25}}},
      {"ball", {{"dimension", 2}, {"delta", 0.5}, {"n_samples", 100000}}},
      {"sweep", {{"axis", ""}, {"values", Json::array()}, {"total_layers", 0}}},
  };
}

namespace {

const std::vector<std::string> kTasks = {"multi-cluster", "qm9", "certify", "iqp-check", "ball-volume"};

bool compatible(const Json& def, const Json& val) {
  if (def.is_number()) return val.is_number();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return true;
}

std::string type_name(const Json& j) { return j.type_name(); }

void merge_into(Json& base, const Json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError(fmt::format("'{}' must be an object", prefix.empty() ? "config" : prefix));
  for (const auto& [key, val] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", path));
    Json& slot = base[key];
    if (!compatible(slot, val))
      throw ConfigError(fmt::format("config key '{}' expects {}, got {}", path, type_name(slot), type_name(val)));
    if (slot.is_object())
      merge_into(slot, val, path);
    else
      slot = val;
  }
}

Json* find_path(Json& root, std::string_view dotted) {
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string_view::npos) return node;
    start = dot + 1;
  }
}

const Json* find_path(const Json& root, std::string_view dotted) { return find_path(const_cast<Json&>(root), dotted); }

template <typename T>
T get_num(const Json& cfg, std::string_view path) {
  const Json* j = find_path(cfg, path);
  if (!j) throw ConfigError(fmt::format("missing config key '{}'", path));
  if constexpr (std::is_integral_v<T>) {
    if (!j->is_number_integer() && !(j->is_number_float() && std::floor(j->get<double>()) == j->get<double>()))
      throw ConfigError(fmt::format("config key '{}' must be an integer", path));
    const double d = j->get<double>();
    if (std::is_unsigned_v<T> && d < 0) throw ConfigError(fmt::format("config key '{}' must be >= 0", path));
    if (j->is_number_unsigned()) return static_cast<T>(j->get<std::uint64_t>());
    if (j->is_number_integer()) return static_cast<T>(j->get<std::int64_t>());
    return static_cast<T>(d);
  } else {
    return j->get<T>();
  }
}

void set_number(Json& slot, double value) {
  if (slot.is_number_integer() && std::floor(value) == value)
    slot = static_cast<std::int64_t>(value);
  else
    slot = value;
}

void validate_config(const Json& cfg) {
  const auto task = cfg.at("task").get<std::string>();
  if (std::find(kTasks.begin(), kTasks.end(), task) == kTasks.end())
    throw ConfigError(fmt::format("unknown task '{}'", task));
  if (get_num<long>(cfg, "n_trials") < 1) throw ConfigError("n_trials must be >= 1");
  if (get_num<long>(cfg, "n_train_samples") < 1) throw ConfigError("n_train_samples must be >= 1");
  if (get_num<long>(cfg, "n_eval_samples") < 1) throw ConfigError("n_eval_samples must be >= 1");
  get_num<std::uint64_t>(cfg, "seed");

  const auto& sw = cfg.at("sweep");
  const auto axis = sw.at("axis").get<std::string>();
  for (const auto& v : sw.at("values")) {
    if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("sweep values must be positive numbers");
  }
  if (!axis.empty() && axis != "L" && axis != "K") {
    const Json* slot = find_path(cfg, axis);
    if (!slot || !slot->is_number()) throw ConfigError(fmt::format("sweep axis '{}' is not a numeric config key", axis));
  }
  const long total = get_num<long>(cfg, "sweep.total_layers");
  if ((axis == "L" || axis == "K") && total > 0) {
    for (const auto& v : sw.at("values")) {
      const double x = v.get<double>();
      if (std::floor(x) != x || total % static_cast<long>(x) != 0)
        throw ConfigError(fmt::format("sweep value {} does not divide total_layers {}", x, total));
    }
    const long k = get_num<long>(cfg, "train.K"), l = get_num<long>(cfg, "train.L");
    if (k * l != total && sw.at("values").empty())
      throw ConfigError(fmt::format("K * L = {} but total_layers = {}", k * l, total));
  }
  try {
    trial_train_config(cfg, 0).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("train: {}", e.what()));
  }
}

}  // namespace

Json resolve_config(const Json& user) {
  Json cfg = default_experiment_config();
  merge_into(cfg, user, "");
  validate_config(cfg);
  return cfg;
}

void apply_override(Json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
  const auto key = assignment.substr(0, eq);
  const std::string text(assignment.substr(eq + 1));
  Json* slot = find_path(config, key);
  if (!slot) throw ConfigError(fmt::format("unknown config key '{}'", key));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (!compatible(*slot, value))
    throw ConfigError(fmt::format("config key '{}' expects {}, got {}", key, slot->type_name(), value.type_name()));
  *slot = std::move(value);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial, double sweep_value) {
  return derive_seed(master, {static_cast<std::uint64_t>(trial), std::bit_cast<std::uint64_t>(sweep_value)});
}

TrainConfig trial_train_config(const Json& config, std::uint64_t seed) {
  TrainConfig c = train_config_from_json(config.at("train"));
  c.n_eval = get_num<std::size_t>(config, "n_eval_samples");
  c.init_seed = derive_seed(seed, {1});
  c.data_seed = derive_seed(seed, {2});
  c.measurement_seed = derive_seed(seed, {3});
  return c;
}

double current_sweep_value(const Json& config) {
  const auto axis = config.at("sweep").at("axis").get<std::string>();
  if (axis.empty()) return 0.0;
  if (axis == "L") return config.at("train").at("L").get<double>();
  if (axis == "K") return config.at("train").at("K").get<double>();
  const Json* slot = find_path(config, axis);
  if (!slot) throw ConfigError(fmt::format("sweep axis '{}' not found", axis));
  return slot->get<double>();
}

Json with_sweep_value(const Json& config, double value) {
  Json out = config;
  const auto axis = config.at("sweep").at("axis").get<std::string>();
  if (axis.empty()) throw ConfigError("sweep.axis is not set");
  const long total = get_num<long>(config, "sweep.total_layers");
  if (axis == "L" || axis == "K") {
    auto& train = out["train"];
    set_number(train[axis], value);
    if (total > 0) set_number(train[axis == "L" ? "K" : "L"], static_cast<double>(total / static_cast<long>(value)));
  } else {
    set_number(*find_path(out, axis), value);
  }
  validate_config(out);
  return out;
}

std::string format_double(double x) { return fmt::format("{}", x); }

std::string Table::to_csv() const {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return s;
}

namespace {

struct TaskLayout {
  std::vector<std::string> columns;  // between sweep_value and wall_s
  std::vector<std::string> metrics;  // subset of columns aggregated by sweeps
};

TaskLayout layout_for(const std::string& task) {
  if (task == "multi-cluster" || task == "qm9") return {{"w1", "mmd", "vs_diff"}, {"w1", "mmd", "vs_diff"}};
  if (task == "certify") return {{"w1", "tv_actual", "tv_bound", "n_centers", "n_a", "n_m"}, {"w1", "tv_actual"}};
  if (task == "iqp-check") return {{"n_a", "n_m", "tv_actual", "tv_bound", "tv_exact", "bound_exact", "ok"}, {"tv_actual"}};
  return {{"estimate", "standard_error", "expected"}, {"estimate"}};
}

struct TrialOutput {
  std::vector<std::string> cells;  // same order as TaskLayout::columns
  std::vector<double> metrics;     // same order as TaskLayout::metrics
};

std::string trial_tag(double sweep_value, std::size_t trial, bool sweeping) {
  return sweeping ? fmt::format("v{}_t{}", format_double(sweep_value), trial) : fmt::format("t{}", trial);
}

TrainingData cluster_data(const Json& cfg, const TrainConfig& tc, std::uint64_t seed) {
  ClusterSpec spec;
  spec.n = tc.n_d;
  const auto w = cfg.at("clusters").at("weights").get<std::vector<double>>();
  if (w.size() != 3) throw ConfigError("clusters.weights needs three entries");
  std::copy(w.begin(), w.end(), spec.weights.begin());
  spec.sigma = cfg.at("clusters").at("sigma").get<double>();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("clusters: {}", e.what()));
  }
  Rng train_rng(derive_seed(seed, {4}));
  Rng eval_rng(derive_seed(seed, {5}));
  TrainingData d;
  d.train = multi_cluster_samples(spec, get_num<std::size_t>(cfg, "n_train_samples"), train_rng);
  d.eval_target = multi_cluster_samples(spec, get_num<std::size_t>(cfg, "n_eval_samples"), eval_rng);
  return d;
}

TrainingData qm9_data(const Json& cfg, std::uint64_t seed) {
  const auto path = cfg.at("qm9").at("path").get<std::string>();
  if (path.empty()) throw ConfigError("task qm9 needs qm9.path");
  if (!std::filesystem::exists(path)) throw std::runtime_error(fmt::format("dataset file '{}' not found", path));
  LoadOptions opt;
  opt.strict = cfg.at("qm9").at("strict").get<bool>();
  const auto encoded = encode_dataset(load_prep_output(path, opt));
  const std::size_t n = encoded.states.size();
  if (n == 0) throw std::runtime_error(fmt::format("dataset '{}' is empty", path));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {4}));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  TrainingData d;
  if (n == 1) {
    d.train = encoded.states;
    d.eval_target = encoded.states;
    return d;
  }
  const std::size_t n_eval = std::min(get_num<std::size_t>(cfg, "n_eval_samples"), n / 2);
  const std::size_t n_train = std::min(get_num<std::size_t>(cfg, "n_train_samples"), n - n_eval);
  for (std::size_t i = 0; i < n_eval; ++i) d.eval_target.push_back(encoded.states[order[i]]);
  for (std::size_t i = 0; i < n_train; ++i) d.train.push_back(encoded.states[order[n_eval + i]]);
  return d;
}

TrialOutput run_training_trial(const Json& cfg, std::uint64_t seed, const std::filesystem::path& out,
                               const std::string& tag) {
  TrainConfig tc = trial_train_config(cfg, seed);
  const bool qm9 = cfg.at("task") == "qm9";
  if (qm9) tc.n_d = kEncodingQubits;
  const auto data = qm9 ? qm9_data(cfg, seed) : cluster_data(cfg, tc, seed);
  const auto result = train_incremental(tc, data);
  const auto& report = result.checkpoint.report;
  if (cfg.at("write_checkpoints").get<bool>()) {
    auto ck = checkpoint_to_json(result.checkpoint);
    if (!cfg.at("record_wall_time").get<bool>()) ck["report"]["wall_seconds"] = 0.0;
    write_json(out / fmt::format("checkpoint_{}.json", tag), ck);
  }
  const auto& m = report.cycle_metrics.back();
  return {{format_double(m.w1), format_double(m.mmd), format_double(m.vs_diff)}, {m.w1, m.mmd, m.vs_diff}};
}

TrialOutput run_certify_trial(const Json& cfg, std::uint64_t seed, const std::filesystem::path& out,
                              const std::string& tag) {
  const auto& c = cfg.at("certify");
  ClusterSpec spec;
  spec.n = c.at("n").get<int>();
  spec.sigma = c.at("sigma").get<double>();
  const auto w = cfg.at("clusters").at("weights").get<std::vector<double>>();
  std::copy(w.begin(), w.end(), spec.weights.begin());
  Rng rng(derive_seed(seed, {4}));
  const auto samples = multi_cluster_samples(spec, get_num<std::size_t>(cfg, "certify.n_samples"), rng);
  const double delta = c.at("delta").get<double>();
  Rng net_rng(derive_seed(derive_seed(seed, {5}), {1}));
  const auto n_centers = greedy_delta_net(samples, delta, net_rng).centers.size();
  const auto r = certify_pipeline(samples, delta, c.at("epsilon").get<double>(),
                                  get_num<std::size_t>(cfg, "certify.n_draws"), derive_seed(seed, {5}));
  write_json(out / fmt::format("certificate_{}.json", tag), certificate_to_json(r));
  return {{format_double(r.w1_certificate), format_double(r.tv_actual), format_double(r.tv_bound),
           std::to_string(n_centers), std::to_string(r.n_a), std::to_string(r.n_m)},
          {r.w1_certificate, r.tv_actual}};
}

TrialOutput run_iqp_trial(const Json& cfg, std::uint64_t seed, const std::filesystem::path& out,
                          const std::string& tag) {
  const auto& c = cfg.at("iqp");
  std::vector<double> q;
  std::vector<Fraction> fractions;
  bool exact_input = false;
  for (const auto& e : c.at("q")) {
    if (e.is_string()) {
      exact_input = true;
      try {
        fractions.push_back(parse_fraction(e.get<std::string>()));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(fmt::format("iqp.q: {}", err.what()));
      }
      q.push_back(static_cast<double>(fractions.back().num) / static_cast<double>(fractions.back().den));
    } else if (e.is_number()) {
      q.push_back(e.get<double>());
    } else {
      throw ConfigError("iqp.q entries must be numbers or fraction strings");
    }
  }
  if (exact_input && fractions.size() != q.size()) throw ConfigError("iqp.q mixes numbers and fraction strings");
  if (q.empty()) {
    const auto k = get_num<std::size_t>(cfg, "iqp.n_outcomes");
    if (k < 1) throw ConfigError("iqp.n_outcomes must be >= 1");
    Rng rng(derive_seed(seed, {4}));
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      q.push_back(-std::log(1.0 - rng.uniform()));
      total += q.back();
    }
    for (auto& x : q) x /= total;
  }
  const double eps = c.at("epsilon").get<double>();
  const auto con = exact_input ? build_iqp_construction(std::span<const Fraction>(fractions), eps)
                               : build_iqp_construction(std::span<const double>(q), eps);
  const auto check = verify_tv_exact(con);
  const auto p = con.probabilities();
  std::vector<double> padded = con.target_q;
  const double tv = total_variation(p, padded);
  write_json(out / fmt::format("iqp_{}.json", tag),
             Json{{"q", c.at("q").empty() ? Json(q) : c.at("q")},
                  {"counts", con.counts},
                  {"n_a", con.n_a},
                  {"n_m", con.n_m},
                  {"tv_exact", check.tv_exact},
                  {"bound_exact", check.bound_exact},
                  {"tv_actual", tv},
                  {"tv_bound", con.tv_bound()},
                  {"ok", check.ok()}});
  return {{std::to_string(con.n_a), std::to_string(con.n_m), format_double(tv), format_double(con.tv_bound()),
           check.tv_exact, check.bound_exact, check.ok() ? "1" : "0"},
          {tv}};
}

TrialOutput run_ball_trial(const Json& cfg, std::uint64_t seed) {
  const auto& c = cfg.at("ball");
  const int dim = c.at("dimension").get<int>();
  const double delta = c.at("delta").get<double>();
  Rng rng(derive_seed(seed, {4}));
  const auto est = ball_volume_mc(dim, delta, get_num<std::size_t>(cfg, "ball.n_samples"), rng);
  const double expected = std::pow(delta, 2.0 * (dim - 1));
  return {{format_double(est.estimate), format_double(est.standard_error), format_double(expected)}, {est.estimate}};
}

struct TrialRecord {
  std::vector<std::string> row;
  std::vector<double> metrics;
  std::uint64_t seed;
};

TrialRecord run_trial(const Json& cfg, std::size_t trial, double sweep_value, bool sweeping,
                      const std::filesystem::path& out) {
  const auto seed = trial_seed(cfg.at("seed").get<std::uint64_t>(), trial, sweep_value);
  const auto task = cfg.at("task").get<std::string>();
  const auto tag = trial_tag(sweep_value, trial, sweeping);
  const auto start = std::chrono::steady_clock::now();
  TrialOutput t;
  if (task == "multi-cluster" || task == "qm9")
    t = run_training_trial(cfg, seed, out, tag);
  else if (task == "certify")
    t = run_certify_trial(cfg, seed, out, tag);
  else if (task == "iqp-check")
    t = run_iqp_trial(cfg, seed, out, tag);
  else
    t = run_ball_trial(cfg, seed);
  const double wall = cfg.at("record_wall_time").get<bool>()
                          ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                          : 0.0;
  TrialRecord r;
  r.row.push_back(std::to_string(trial));
  r.row.push_back(format_double(sweep_value));
  for (auto& c : t.cells) r.row.push_back(std::move(c));
  r.row.push_back(format_double(wall));
  r.row.push_back(std::to_string(seed));
  r.metrics = std::move(t.metrics);
  r.seed = seed;
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  f << text;
}

void prepare_out(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", out.string(), ec.message()));
}

}  // namespace

Table run_experiment(const Json& config, const std::filesystem::path& out) {
  const Json cfg = resolve_config(config);
  prepare_out(out);
  const auto layout = layout_for(cfg.at("task").get<std::string>());
  Table table;
  table.header = {"trial", "sweep_value"};
  table.header.insert(table.header.end(), layout.columns.begin(), layout.columns.end());
  table.header.push_back("wall_s");
  table.header.push_back("seed");
  const double value = current_sweep_value(cfg);
  Json seeds = Json::array();
  for (std::size_t t = 0; t < cfg.at("n_trials").get<std::size_t>(); ++t) {
    auto r = run_trial(cfg, t, value, false, out);
    seeds.push_back(r.seed);
    table.rows.push_back(std::move(r.row));
  }
  write_text(out / "metrics.csv", table.to_csv());
  write_json(out / "manifest.json", Json{{"verb", "run"}, {"config", cfg}, {"trial_seeds", seeds}});
  return table;
}

Table run_sweep(const Json& config, const std::filesystem::path& out) {
  const Json cfg = resolve_config(config);
  const auto values = cfg.at("sweep").at("values").get<std::vector<double>>();
  if (cfg.at("sweep").at("axis").get<std::string>().empty()) throw ConfigError("sweep needs sweep.axis");
  if (values.empty()) throw ConfigError("sweep needs at least one value in sweep.values");
  prepare_out(out);
  const auto layout = layout_for(cfg.at("task").get<std::string>());
  Table table;
  table.header = {"trial", "sweep_value"};
  table.header.insert(table.header.end(), layout.columns.begin(), layout.columns.end());
  table.header.push_back("wall_s");
  table.header.push_back("seed");
  for (const auto& m : layout.metrics) table.header.push_back(m + "_std");

  const auto n_trials = cfg.at("n_trials").get<std::size_t>();
  std::vector<std::vector<std::string>> aggregates;
  Json seeds = Json::object();
  for (double v : values) {
    const Json vc = with_sweep_value(cfg, v);
    std::vector<std::vector<double>> per_metric(layout.metrics.size());
    std::vector<double> walls;
    Json vs = Json::array();
    for (std::size_t t = 0; t < n_trials; ++t) {
      auto r = run_trial(vc, t, v, true, out);
      vs.push_back(r.seed);
      for (std::size_t k = 0; k < r.metrics.size(); ++k) per_metric[k].push_back(r.metrics[k]);
      walls.push_back(std::stod(r.row[r.row.size() - 2]));
      r.row.resize(table.header.size());  // empty *_std cells
      table.rows.push_back(std::move(r.row));
    }
    seeds[format_double(v)] = vs;

    auto mean_of = [](const std::vector<double>& x) {
      return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    };
    auto std_of = [&](const std::vector<double>& x) {
      if (x.size() < 2) return 0.0;
      const double m = mean_of(x);
      double s = 0.0;
      for (double e : x) s += (e - m) * (e - m);
      return std::sqrt(s / static_cast<double>(x.size() - 1));
    };
    std::vector<std::string> agg(table.header.size());
    agg[0] = "mean";
    agg[1] = format_double(v);
    for (std::size_t k = 0; k < layout.metrics.size(); ++k) {
      const auto col = std::find(table.header.begin(), table.header.end(), layout.metrics[k]) - table.header.begin();
      agg[col] = format_double(mean_of(per_metric[k]));
      agg[table.header.size() - layout.metrics.size() + k] = format_double(std_of(per_metric[k]));
    }
    agg[2 + layout.columns.size()] = format_double(mean_of(walls));
    aggregates.push_back(std::move(agg));
  }
  for (auto& a : aggregates) table.rows.push_back(std::move(a));
  write_text(out / "metrics.csv", table.to_csv());
  write_json(out / "manifest.json", Json{{"verb", "sweep"}, {"config", cfg}, {"trial_seeds", seeds}});
  return table;
}

}  // namespace mpe
