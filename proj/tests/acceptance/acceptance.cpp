// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when
// any selected criterion fails.
//
//   acceptance [--only id,id,...] [--work DIR] [--list]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "mpe/covering.hpp"
#include "mpe/datasets.hpp"
#include "mpe/experiment.hpp"
#include "mpe/metrics.hpp"
#include "mpe/universality.hpp"

namespace fs = std::filesystem;
using namespace mpe;

namespace {

// Training budget for the comparison and sweep checks: iterations per cycle
// is epochs * 10. The default run uses 12 epochs per cycle; these two checks
// use 6 to fit a single-core desk run.
constexpr int kComparisonEpochs = 6;
constexpr int kSweepEpochs = 6;
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome(const fs::path&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::size_t column(const Table& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - t.header.begin());
}

std::vector<double> column_values(const Table& t, const std::string& name) {
  std::vector<double> out;
  const auto c = column(t, name);
  for (const auto& r : t.rows)
    if (r[0] != "mean") out.push_back(std::stod(r[c]));
  return out;
}

std::string join(const std::vector<double>& v, int prec = 3) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt::format("{:.{}f}", x, prec);
  return s;
}

// ---------------------------------------------------------------------------

Outcome iqp_tv_bound(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240101);
  const double eps[] = {0.5, 0.25, 0.1};
  int checked = 0, bad = 0;
  for (int t = 0; t < 200; ++t) {
    const int n_a = 1 + static_cast<int>(rng.below(4));
    // Outcome count that needs exactly n_a ancilla qubits.
    const std::size_t lo = n_a == 1 ? 1 : (std::size_t{1} << (n_a - 1)) + 1;
    const std::size_t k = lo + rng.below((std::size_t{1} << n_a) - lo + 1);
    std::vector<std::uint64_t> w(k);
    std::uint64_t den = 0;
    for (auto& x : w) den += (x = rng.below(1000) + (rng.uniform() < 0.1 ? 0 : 1));
    if (den == 0) w[0] = den = 1;
    std::vector<Fraction> q;
    for (auto x : w) q.push_back({x, den});
    for (double e : eps) {
      const auto c = build_iqp_construction(std::span<const Fraction>(q), e);
      const auto check = verify_tv_exact(c);
      ++checked;
      if (c.n_a != n_a || !check.ok()) ++bad;
    }
  }
  const double dt = seconds_since(t0);
  return {bad == 0 && dt < 5.0, fmt::format("{} constructions, {} violations, {:.2f} s (limit 5 s)", checked, bad, dt)};
}

Outcome iqp_worked_instance(const fs::path&) {
  const std::vector<Fraction> q{{1, 3}, {2, 3}};
  const auto c = build_iqp_construction(std::span<const Fraction>(q), 0.25);
  const auto check = verify_tv_exact(c);
  const bool counts = c.counts == std::vector<std::uint64_t>{3, 5};
  return {counts && check.tv_exact == "1/24" && check.ok(),
          fmt::format("counts ({}, {}), TV = {}, bound = {}", c.counts.at(0), c.counts.at(1), check.tv_exact,
                      check.bound_exact)};
}

Outcome ball_volume(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(7);
  bool ok = true;
  std::string detail;
  for (double delta : {0.3, 0.5}) {
    const auto est = ball_volume_mc(2, delta, 100000, rng);
    const double p = delta * delta, sigma = std::sqrt(p * (1 - p) / 1e5);
    const double z = (est.estimate - p) / sigma;
    ok = ok && std::abs(z) <= 3.0;
    detail += fmt::format("delta {}: {:.5f} vs {:.5f} ({:+.2f} sigma); ", delta, est.estimate, p, z);
  }
  const double dt = seconds_since(t0);
  return {ok && dt < 30.0, detail + fmt::format("{:.2f} s (limit 30 s)", dt)};
}

Outcome covering_spot_values(const fs::path&) {
  struct Spot {
    int d;
    double delta, lower, upper;
  };
  // 30-digit decimal evaluation of 5 D ln D delta^(-2(D-1)).
  const Spot spots[] = {
      {2, 1.0, 1.0, 6.93147180559945309417232121458},
      {2, 0.5, 4.0, 27.7258872223978123766892848583},
      {3, 0.5, 16.0, 263.666949280346325934858856861},
      {4, 0.2, 15625.0, 433216.987849965818385770075912},
      {8, 0.9, 4.37124217465697502411561839848, 363.589702668984750878655285802},
  };
  double worst = 0.0;
  for (const auto& s : spots) {
    const auto b = covering_bound(s.d, s.delta);
    worst = std::max({worst, std::abs(b.upper - s.upper) / s.upper, std::abs(b.lower - s.lower) / s.lower});
  }
  return {worst <= 1e-9, fmt::format("5 spot values, worst relative error {:.2e} (limit 1e-9)", worst)};
}

double brute_force_w1(const std::vector<StateVector>& a, const std::vector<StateVector>& b, bool trace) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = std::norm(inner(a[i], b[perm[i]]));
      s += trace ? std::sqrt(std::max(0.0, 1.0 - f)) : 1.0 - f;
    }
    best = std::min(best, s / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Outcome ot_exactness(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(11);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<StateVector> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(haar_random_state(2, rng));
      b.push_back(haar_random_state(2, rng));
    }
    const auto x = WeightedEnsemble::uniform(a), y = WeightedEnsemble::uniform(b);
    worst = std::max(worst, std::abs(wasserstein1(x, y).value - brute_force_w1(a, b, false)));
    worst = std::max(worst,
                     std::abs(wasserstein1(x, y, GroundCost::trace_distance).value - brute_force_w1(a, b, true)));
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-9 && dt < 10.0,
          fmt::format("100 pairs, both ground costs, worst gap {:.2e} (limit 1e-9), {:.2f} s (limit 10 s)", worst, dt)};
}

Outcome w1_below_tv(const fs::path&) {
  Rng rng(12);
  double worst = -INFINITY;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(7);
    std::vector<StateVector> s;
    std::vector<double> p(n), q(n);
    const int width = 1 + static_cast<int>(rng.below(2));
    for (std::size_t i = 0; i < n; ++i) s.push_back(haar_random_state(width, rng));
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sp += (p[i] = -std::log(1.0 - rng.uniform()));
      sq += (q[i] = -std::log(1.0 - rng.uniform()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const WeightedEnsemble x(p, s), y(q, s);
    const double tv = total_variation(p, q);
    for (auto g : {GroundCost::infidelity, GroundCost::trace_distance})
      worst = std::max(worst, wasserstein1(x, y, g).value - tv);
  }
  return {worst <= 1e-9, fmt::format("100 pairs, both ground costs, max(W1 - TV) = {:.3e} (limit 1e-9)", worst)};
}

Outcome certificate(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json cfg{{"task", "certify"},
                 {"certify", {{"n", 3}, {"sigma", 0.0}, {"delta", 0.2}, {"epsilon", 0.2}, {"n_draws", 10000}}}};
  const auto t = run_experiment(cfg, work / "certify");
  const double w1 = std::stod(t.rows[0][column(t, "w1")]);
  const double dt = seconds_since(t0);
  return {w1 <= 0.25 && dt < 120.0,
          fmt::format("W1 certificate {:.4f} (limit 0.25), TV {} <= bound {}, {:.1f} s (limit 120 s)", w1,
                      t.rows[0][column(t, "tv_actual")], t.rows[0][column(t, "tv_bound")], dt)};
}

Json training_config() {
  return Json{{"task", "multi-cluster"},
              {"n_trials", kSeeds},
              {"n_train_samples", 200},
              {"train", {{"n_d", 4}, {"n_f", 2}, {"K", 5}, {"L", 4}}}};
}

Outcome training(const fs::path& work) {
  const double c0 = cpu_seconds();
  const auto out = work / "training";
  const auto t = run_experiment(training_config(), out);
  const auto final_w1 = column_values(t, "w1");
  std::vector<double> initial;
  for (int s = 0; s < kSeeds; ++s)
    initial.push_back(read_json(out / fmt::format("checkpoint_t{}.json", s))["report"]["initial"]["w1"].get<double>());
  const double cpu = cpu_seconds() - c0;
  const double mf = median(final_w1), mi = median(initial);
  return {mf < 0.25 && mf < 0.5 * mi && cpu < 900.0,
          fmt::format("median W1 {:.4f} (initial {:.4f}); final [{}]; {:.0f} s CPU (limit 900 s)", mf, mi,
                      join(final_w1), cpu)};
}

Outcome incremental_vs_monolithic(const fs::path& work) {
  Json inc = training_config();
  inc["train"]["epochs_per_cycle"] = kComparisonEpochs;
  Json mono = inc;
  mono["train"]["K"] = 1;
  mono["train"]["L"] = 20;
  mono["train"]["epochs_per_cycle"] = 5 * kComparisonEpochs;
  // Same master seed and trial index: each pair shares data, init and
  // evaluation draws.
  const auto a = column_values(run_experiment(inc, work / "incremental"), "w1");
  const auto b = column_values(run_experiment(mono, work / "monolithic"), "w1");
  int wins = 0;
  for (int s = 0; s < kSeeds; ++s) wins += a[s] < b[s];
  return {wins >= 4, fmt::format("incremental wins {}/5 at {} iterations each; incremental [{}], monolithic [{}]", wins,
                                 5 * kComparisonEpochs * 10, join(a), join(b))};
}

Outcome layer_sweep(const fs::path& work) {
  Json cfg = training_config();
  cfg["train"]["epochs_per_cycle"] = kSweepEpochs;
  cfg["sweep"] = {{"axis", "L"}, {"values", {1, 2, 4, 10}}, {"total_layers", 20}};
  const auto t = run_sweep(cfg, work / "sweep");
  std::vector<double> values, means;
  const auto w1 = column(t, "w1");
  for (const auto& r : t.rows)
    if (r[0] == "mean") {
      values.push_back(std::stod(r[1]));
      means.push_back(std::stod(r[w1]));
    }
  const auto best = static_cast<std::size_t>(std::min_element(means.begin(), means.end()) - means.begin());
  const bool interior = best != 0 && best + 1 != means.size();
  return {interior, fmt::format("mean W1 for L = 1, 2, 4, 10: [{}]; minimum at L = {}", join(means, 4), values[best])};
}

Outcome qm9_encoding(const fs::path&) {
  const auto records = load_prep_output(fs::path(MPE_TEST_DATA_DIR) / "qm9_fixture.jsonl");
  const auto data = encode_dataset(records);
  double norm_err = 0.0, block_err = 0.0, rt_err = 0.0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& s = data.states[r];
    const auto m = records[r].atoms.size();
    norm_err = std::max(norm_err, std::abs(s.norm() - 1.0));
    for (std::size_t i = 0; i < m; ++i) {
      double b = 0.0;
      for (int k = 0; k < kBlockLength; ++k) b += std::norm(s[kBlockLength * i + k]);
      block_err = std::max(block_err, std::abs(std::sqrt(b) - 1.0 / std::sqrt(static_cast<double>(m))));
    }
    const auto dec = qm9_decode(s, data.stats);
    const auto expect = normalize_coords(data.aligned[r], data.stats);
    if (dec.normalized.size() != m) return {false, fmt::format("record {} decoded to the wrong atom count", r)};
    for (std::size_t i = 0; i < m; ++i)
      for (int k = 0; k < 3; ++k) rt_err = std::max(rt_err, std::abs(dec.normalized[i][k] - expect[i][k]));
  }
  return {norm_err <= 1e-10 && block_err <= 1e-10 && rt_err <= 1e-9,
          fmt::format("{} records: norm error {:.1e}, block error {:.1e}, round trip {:.1e}", records.size(), norm_err,
                      block_err, rt_err)};
}

Outcome determinism(const fs::path& work) {
  const std::string cli = MPE_CLI_PATH;
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"run", "--set train.n_d=3 --set train.K=2 --set train.L=2 --set train.epochs_per_cycle=1 "
              "--set n_train_samples=40 --set n_eval_samples=40"},
      {"run", "--set task=certify --set certify.n_draws=2000"},
      {"sweep", "--set task=ball-volume --set n_trials=2 --set sweep.axis=ball.delta --set sweep.values=[0.3,0.5]"},
  };
  int same = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::string csv[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto out = work / fmt::format("determinism_{}_{}", i, rep);
      fs::remove_all(out);
      const auto cmd = fmt::format("\"{}\" {} --seed 17 --out \"{}\" {} > /dev/null", cli, runs[i].first,
                                   out.string(), runs[i].second);
      if (std::system(cmd.c_str()) != 0) return {false, "CLI failed: " + cmd};
      csv[rep] = slurp(out / "metrics.csv");
    }
    same += !csv[0].empty() && csv[0] == csv[1];
  }
  return {same == static_cast<int>(runs.size()),
          fmt::format("{}/{} CLI invocations byte-identical on repeat", same, runs.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"iqp-tv-bound", "IQP total-variation bound, exact arithmetic", iqp_tv_bound},
      {"iqp-worked", "IQP worked instance q = (1/3, 2/3)", iqp_worked_instance},
      {"ball-volume", "ball volume Monte Carlo", ball_volume},
      {"covering-bound", "covering bound spot values", covering_spot_values},
      {"ot-exact", "transport equals permutation minimum", ot_exactness},
      {"w1-le-tv", "W1 <= TV on shared support", w1_below_tv},
      {"certificate", "end-to-end W1 certificate", certificate},
      {"training", "reduced-scale incremental training", training},
      {"incremental-vs-monolithic", "incremental beats monolithic", incremental_vs_monolithic},
      {"layer-sweep", "interior optimum over L", layer_sweep},
      {"qm9-encoding", "QM9 encoding invariants", qm9_encoding},
      {"determinism", "byte-identical CSV", determinism},
  };

  CLI::App app{"acceptance checks"};
  std::string only;
  std::string work = (fs::temp_directory_path() / "mpe_acceptance").string();
  bool list = false;
  app.add_option("--only", only, "comma-separated criterion ids");
  app.add_option("--work", work, "scratch directory")->capture_default_str();
  app.add_flag("--list", list, "print the criterion ids and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& c : all) fmt::print("{:28} {}\n", c.id, c.title);
    return 0;
  }
  std::vector<std::string> wanted;
  for (std::stringstream ss(only); ss.good();) {
    std::string id;
    std::getline(ss, id, ',');
    if (id.empty()) continue;
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; })) {
      fmt::print(stderr, "unknown criterion '{}'\n", id);
      return 2;
    }
    wanted.push_back(id);
  }

  fs::create_directories(work);
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(work);
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    failed += !o.pass;
    fmt::print("{} [{}] {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail, seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
