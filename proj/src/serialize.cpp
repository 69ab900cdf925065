#include "mpe/serialize.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/core.h>

namespace mpe {

Json state_to_json(const StateVector& s) {
  Json amps = Json::array();
  for (const auto& a : s.amplitudes()) amps.push_back({a.real(), a.imag()});
  return {{"num_qubits", s.num_qubits()}, {"amplitudes", std::move(amps)}};
}

StateVector state_from_json(const Json& j) {
  const int n = j.at("num_qubits").get<int>();
  check_width(n);
  const auto& a = j.at("amplitudes");
  if (!a.is_array() || a.size() != (std::size_t{1} << n))
    throw std::invalid_argument(fmt::format("state with {} qubits needs {} amplitudes", n, std::size_t{1} << n));
  std::vector<Complex> amps;
  amps.reserve(a.size());
  for (const auto& x : a) {
    if (!x.is_array() || x.size() != 2) throw std::invalid_argument("amplitudes are [re, im] pairs");
    amps.emplace_back(x[0].get<double>(), x[1].get<double>());
  }
  return StateVector::from_amplitudes(std::move(amps));
}

void write_states_jsonl(const std::filesystem::path& path, const std::vector<StateVector>& states) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  for (const auto& s : states) out << state_to_json(s).dump() << '\n';
}

std::vector<StateVector> read_states_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::vector<StateVector> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(state_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return out;
}

Json delta_net_to_json(const DeltaNet& net) {
  Json centers = Json::array();
  for (const auto& c : net.centers) centers.push_back(state_to_json(c));
  return {{"delta", net.delta},
          {"weights", net.weights},
          {"center_sample_index", net.center_sample_index},
          {"centers", std::move(centers)}};
}

Json certificate_to_json(const CertificateReport& r) {
  return {{"delta_net", r.delta_net}, {"epsilon", r.epsilon},   {"n_a", r.n_a},
          {"n_m", r.n_m},             {"tv_bound", r.tv_bound}, {"tv_actual", r.tv_actual},
          {"w1_certificate", r.w1_certificate}, {"n_draws", r.n_draws}, {"seed", r.seed}};
}

Json train_config_to_json(const TrainConfig& c) {
  return {{"n_d", c.n_d},
          {"n_f", c.n_f},
          {"K", c.cycles},
          {"L", c.layers},
          {"batch_size", c.batch_size},
          {"epochs_per_cycle", c.epochs_per_cycle},
          {"iterations_per_epoch", c.iterations_per_epoch},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"adam_eps", c.adam.eps},
          {"lambda_vs", c.lambda_vs},
          {"fd_step", c.fd_step},
          {"n_eval", c.n_eval},
          {"init_seed", c.init_seed},
          {"data_seed", c.data_seed},
          {"measurement_seed", c.measurement_seed}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_d", c.n_d);
  get("n_f", c.n_f);
  get("K", c.cycles);
  get("L", c.layers);
  get("batch_size", c.batch_size);
  get("epochs_per_cycle", c.epochs_per_cycle);
  get("iterations_per_epoch", c.iterations_per_epoch);
  get("learning_rate", c.adam.learning_rate);
  get("beta1", c.adam.beta1);
  get("beta2", c.adam.beta2);
  get("adam_eps", c.adam.eps);
  get("lambda_vs", c.lambda_vs);
  get("fd_step", c.fd_step);
  get("n_eval", c.n_eval);
  get("init_seed", c.init_seed);
  get("data_seed", c.data_seed);
  get("measurement_seed", c.measurement_seed);
  return c;
}

Json metrics_to_json(const EnsembleMetrics& m) { return {{"w1", m.w1}, {"mmd", m.mmd}, {"vs_diff", m.vs_diff}}; }

namespace {

EnsembleMetrics metrics_from_json(const Json& j) {
  return {j.at("w1").get<double>(), j.at("mmd").get<double>(), j.at("vs_diff").get<double>()};
}

}  // namespace

Json report_to_json(const TrainReport& r) {
  Json cycles = Json::array();
  for (const auto& m : r.cycle_metrics) cycles.push_back(metrics_to_json(m));
  return {{"loss_trace", r.loss_trace},
          {"initial", metrics_to_json(r.initial)},
          {"cycle_metrics", std::move(cycles)},
          {"wall_seconds", r.wall_seconds}};
}

Json checkpoint_to_json(const TrainCheckpoint& c) {
  return {{"format", "mpe-checkpoint-1"},
          {"config", train_config_to_json(c.config)},
          {"frozen", c.frozen},
          {"current", c.current},
          {"adam", {{"m", c.adam.m}, {"v", c.adam.v}, {"t", c.adam.t}}},
          {"cycle", c.cycle},
          {"iteration", c.iteration},
          {"report", report_to_json(c.report)},
          {"initial_evaluated", c.initial_evaluated},
          {"finished", c.finished}};
}

TrainCheckpoint checkpoint_from_json(const Json& j) {
  if (j.value("format", std::string{}) != "mpe-checkpoint-1") throw std::invalid_argument("not an mpe checkpoint");
  TrainCheckpoint c;
  c.config = train_config_from_json(j.at("config"));
  c.frozen = j.at("frozen").get<std::vector<std::vector<double>>>();
  c.current = j.at("current").get<std::vector<double>>();
  c.adam.m = j.at("adam").at("m").get<std::vector<double>>();
  c.adam.v = j.at("adam").at("v").get<std::vector<double>>();
  c.adam.t = j.at("adam").at("t").get<std::uint64_t>();
  c.cycle = j.at("cycle").get<std::size_t>();
  c.iteration = j.at("iteration").get<std::size_t>();
  const auto& r = j.at("report");
  c.report.loss_trace = r.at("loss_trace").get<std::vector<double>>();
  c.report.initial = metrics_from_json(r.at("initial"));
  for (const auto& m : r.at("cycle_metrics")) c.report.cycle_metrics.push_back(metrics_from_json(m));
  c.report.wall_seconds = r.at("wall_seconds").get<double>();
  c.initial_evaluated = j.at("initial_evaluated").get<bool>();
  c.finished = j.at("finished").get<bool>();
  return c;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace mpe
