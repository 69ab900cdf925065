// Command-line front end for the experiment runner.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "mpe/datasets.hpp"
#include "mpe/experiment.hpp"
#include "mpe/serialize.hpp"

namespace fs = std::filesystem;
using namespace mpe;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--set", f.sets, "override, e.g. --set train.L=4 (repeatable)");
}

Json load_config(const CommonFlags& f, const std::optional<std::string>& force_task = std::nullopt) {
  Json user = f.config.empty() ? Json::object() : read_json(f.config);
  Json cfg = resolve_config(user);
  if (force_task) cfg["task"] = *force_task;
  for (const auto& s : f.sets) apply_override(cfg, s);
  if (f.seed) cfg["seed"] = *f.seed;
  return resolve_config(cfg);
}

void print_table(const Table& t) { std::fputs(t.to_csv().c_str(), stdout); }

int encode_qm9(const std::string& input, const std::string& out, bool lenient) {
  LoadOptions opt;
  opt.strict = !lenient;
  const auto records = load_prep_output(input, opt);
  if (records.empty()) throw std::runtime_error(fmt::format("'{}' holds no records", input));
  const auto data = encode_dataset(records);
  fs::create_directories(out);
  write_prep_output(fs::path(out) / "aligned.jsonl", data.aligned);
  write_stats(fs::path(out) / "stats.json", data.stats);
  write_states_jsonl(fs::path(out) / "states.jsonl", data.states);

  std::ofstream csv(fs::path(out) / "encoding_check.csv");
  csv << "id,atoms,norm_error,block_norm_error,roundtrip_error\n";
  for (std::size_t i = 0; i < data.states.size(); ++i) {
    const auto& s = data.states[i];
    const auto m = data.aligned[i].atoms.size();
    double block_err = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      double n2 = 0.0;
      for (int k = 0; k < kBlockLength; ++k) n2 += std::norm(s[kBlockLength * b + k]);
      block_err = std::max(block_err, std::abs(std::sqrt(n2) - 1.0 / std::sqrt(static_cast<double>(m))));
    }
    const auto decoded = qm9_decode(s, data.stats);
    const auto expect = normalize_coords(data.aligned[i], data.stats);
    double rt = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      for (int k = 0; k < 3; ++k) rt = std::max(rt, std::abs(decoded.normalized[a][k] - expect[a][k]));
    csv << fmt::format("{},{},{},{},{}\n", data.aligned[i].id, m, format_double(std::abs(s.norm() - 1.0)),
                       format_double(block_err), format_double(rt));
  }
  fmt::print("encoded {} records into {}\n", data.states.size(), out);
  return 0;
}

int gen_clusters(const CommonFlags& f) {
  const Json cfg = load_config(f);
  ClusterSpec spec;
  spec.n = cfg.at("train").at("n_d").get<int>();
  const auto w = cfg.at("clusters").at("weights").get<std::vector<double>>();
  std::copy(w.begin(), w.end(), spec.weights.begin());
  spec.sigma = cfg.at("clusters").at("sigma").get<double>();
  const auto count = cfg.at("n_train_samples").get<std::size_t>();
  Rng rng(derive_seed(cfg.at("seed").get<std::uint64_t>(), {4}));
  std::vector<StateVector> states;
  fs::create_directories(f.out);
  std::ofstream labels(fs::path(f.out) / "clusters.csv");
  labels << "index,cluster\n";
  for (std::size_t i = 0; i < count; ++i) {
    int c = 0;
    states.push_back(multi_cluster_sample(spec, rng, c));
    labels << i << ',' << c << '\n';
  }
  write_states_jsonl(fs::path(f.out) / "states.jsonl", states);
  write_json(fs::path(f.out) / "manifest.json", Json{{"verb", "gen-clusters"}, {"config", cfg}});
  fmt::print("wrote {} states to {}\n", count, f.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected-ensemble workbench"};
  app.require_subcommand(1);

  CommonFlags run_f, sweep_f, cert_f, gen_f;
  auto* run = app.add_subcommand("run", "run the configured task");
  add_common(run, run_f);
  auto* sweep = app.add_subcommand("sweep", "run every value of sweep.values");
  add_common(sweep, sweep_f);
  auto* cert = app.add_subcommand("certify", "delta-net certificate on the configured cluster target");
  add_common(cert, cert_f);
  auto* gen = app.add_subcommand("gen-clusters", "write multi-cluster samples as JSONL");
  add_common(gen, gen_f);

  std::string qm9_in, qm9_out = "out";
  bool lenient = false;
  auto* enc = app.add_subcommand("encode-qm9", "align, normalize and encode prepared molecules");
  enc->add_option("--input", qm9_in, "prep JSONL")->required();
  enc->add_option("--out", qm9_out, "output directory")->capture_default_str();
  enc->add_flag("--lenient", lenient, "accept 1..9 heavy atoms instead of exactly 7");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      print_table(run_experiment(load_config(run_f), run_f.out));
    } else if (*sweep) {
      print_table(run_sweep(load_config(sweep_f), sweep_f.out));
    } else if (*cert) {
      print_table(run_experiment(load_config(cert_f, std::string("certify")), cert_f.out));
    } else if (*gen) {
      return gen_clusters(gen_f);
    } else if (*enc) {
      return encode_qm9(qm9_in, qm9_out, lenient);
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
