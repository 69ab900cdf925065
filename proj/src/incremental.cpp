#include "mpe/incremental.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/core.h>

#include "mpe/metrics.hpp"

namespace mpe {

Circuit build_ansatz(int n_q, int layers, std::span<const double> theta) {
  check_width(n_q);
  if (layers < 1) throw std::invalid_argument(fmt::format("ansatz needs at least one layer, got {}", layers));
  const std::size_t want = ansatz_parameter_count(n_q, layers);
  if (theta.size() != want)
    throw std::invalid_argument(fmt::format("ansatz on {} qubits with {} layers takes {} angles, got {}", n_q, layers,
                                            want, theta.size()));
  Circuit c(n_q);
  c.gates.reserve(static_cast<std::size_t>(layers) * (3 * static_cast<std::size_t>(n_q)));
  for (int l = 0; l < layers; ++l) {
    const std::size_t base = 2 * static_cast<std::size_t>(n_q) * static_cast<std::size_t>(l);
    for (int j = 0; j < n_q; ++j) {
      c.add(gate::RY{j, theta[base + 2 * j]});
      c.add(gate::RX{j, theta[base + 2 * j + 1]});
    }
    for (int j = 0; j + 1 < n_q; ++j) c.add(gate::CZ{j, j + 1});
  }
  return c;
}

namespace {

void check_cycle_width(int n_d, int n_f, int n_q) {
  if (n_f < 0) throw std::invalid_argument("n_f must be >= 0");
  if (n_q != n_d + n_f)
    throw std::invalid_argument(fmt::format("cycle circuit acts on {} qubits, expected n_d + n_f = {}", n_q, n_d + n_f));
}

// data (x) |0>_F as a full register.
std::vector<Complex> attach_ancilla(const StateVector& data, int n_f) {
  std::vector<Complex> amps(std::size_t{1} << (data.num_qubits() + n_f), Complex{0.0, 0.0});
  const auto src = data.amplitudes();
  for (std::size_t d = 0; d < src.size(); ++d) amps[d << n_f] = src[d];
  return amps;
}

// Inverse-CDF pick of the trailing n_f bits, then the renormalized data state.
CycleResult collapse(std::span<const Complex> amps, int n_d, int n_f, double u) {
  const std::size_t nz = std::size_t{1} << n_f;
  std::vector<double> p(nz, 0.0);
  for (std::size_t i = 0; i < amps.size(); ++i) p[i & (nz - 1)] += std::norm(amps[i]);

  double live = 0.0;
  for (double x : p)
    if (x >= kDegenerateBranch) live += x;
  if (live <= 0.0) throw std::runtime_error("cycle: every ancilla outcome is degenerate");

  const double target = std::clamp(u, 0.0, std::nextafter(1.0, 0.0)) * live;
  std::size_t z = nz;
  double acc = 0.0;
  std::size_t last_live = 0;
  for (std::size_t k = 0; k < nz; ++k) {
    if (p[k] < kDegenerateBranch) continue;
    last_live = k;
    acc += p[k];
    if (target < acc) {
      z = k;
      break;
    }
  }
  if (z == nz) z = last_live;  // rounding at the top of the CDF

  const double scale = 1.0 / std::sqrt(p[z]);
  std::vector<Complex> out(std::size_t{1} << n_d);
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = amps[(d << n_f) | z] * scale;
  return {StateVector::normalized(std::move(out)), z, p[z]};
}

CycleResult run_cycle(const StateVector& data, const Circuit& v, int n_f, double u) {
  check_cycle_width(data.num_qubits(), n_f, v.num_qubits);
  for (const auto& g : v.gates) validate_gate(g, v.num_qubits);
  auto amps = attach_ancilla(data, n_f);
  detail::apply_circuit_inplace(amps, v);
  return collapse(amps, data.num_qubits(), n_f, u);
}

// The ansatz with RY then RX on each qubit fused into one 2x2 matrix and the
// CZ chain of a layer folded into one sign per basis state. Rotation g sits on
// qubit g % n_q of layer g / n_q and reads theta[2g] (RY), theta[2g + 1] (RX).
using Mat2 = std::array<Complex, 4>;

Mat2 fused_rotation(double ty, double tx) {
  const double cy = std::cos(ty / 2), sy = std::sin(ty / 2);
  const double cx = std::cos(tx / 2), sx = std::sin(tx / 2);
  const Complex mi{0.0, -sx};
  // RX * RY
  return {cx * cy + mi * sy, -cx * sy + mi * cy, mi * cy + cx * sy, -mi * sy + cx * cy};
}

struct CompiledAnsatz {
  int n_q = 0;
  int layers = 0;
  std::vector<Mat2> rot;
  std::vector<double> ladder;  // +-1 per basis index

  std::size_t gates() const { return rot.size(); }
};

std::vector<double> ladder_signs(int n_q) {
  std::vector<double> sign(std::size_t{1} << n_q, 1.0);
  for (std::size_t i = 0; i < sign.size(); ++i)
    for (int j = 0; j + 1 < n_q; ++j)
      if (((i >> bit_position(n_q, j)) & 1) && ((i >> bit_position(n_q, j + 1)) & 1)) sign[i] = -sign[i];
  return sign;
}

CompiledAnsatz compile_ansatz(int n_q, int layers, std::span<const double> theta) {
  build_ansatz(n_q, layers, theta);  // validation only
  CompiledAnsatz c;
  c.n_q = n_q;
  c.layers = layers;
  c.rot.resize(theta.size() / 2);
  for (std::size_t g = 0; g < c.rot.size(); ++g) c.rot[g] = fused_rotation(theta[2 * g], theta[2 * g + 1]);
  c.ladder = ladder_signs(n_q);
  return c;
}

// Plain real arithmetic: std::complex products go through the inf/nan-aware
// library routine, which dominates the cost here.
void apply_mat2(std::span<Complex> amps, int n, int q, const Mat2& m) {
  const std::size_t stride = std::size_t{1} << bit_position(n, q);
  const double r0 = m[0].real(), i0 = m[0].imag(), r1 = m[1].real(), i1 = m[1].imag();
  const double r2 = m[2].real(), i2 = m[2].imag(), r3 = m[3].real(), i3 = m[3].imag();
  for (std::size_t base = 0; base < amps.size(); base += 2 * stride)
    for (std::size_t i = base; i < base + stride; ++i) {
      const double x0 = amps[i].real(), y0 = amps[i].imag();
      const double x1 = amps[i + stride].real(), y1 = amps[i + stride].imag();
      amps[i] = {r0 * x0 - i0 * y0 + r1 * x1 - i1 * y1, r0 * y0 + i0 * x0 + r1 * y1 + i1 * x1};
      amps[i + stride] = {r2 * x0 - i2 * y0 + r3 * x1 - i3 * y1, r2 * y0 + i2 * x0 + r3 * y1 + i3 * x1};
    }
}

// Rotations [from, gates()) with the ladder after the last qubit of each layer.
// `swap_gate` replaces rotation `from` when given. `snapshot(g)` sees the
// register just before rotation g.
template <typename Snap>
void run_compiled(std::span<Complex> amps, const CompiledAnsatz& c, std::size_t from, const Mat2* swap_gate,
                  Snap&& snapshot) {
  const auto nq = static_cast<std::size_t>(c.n_q);
  for (std::size_t g = from; g < c.gates(); ++g) {
    snapshot(g, amps);
    const Mat2& m = (swap_gate && g == from) ? *swap_gate : c.rot[g];
    apply_mat2(amps, c.n_q, static_cast<int>(g % nq), m);
    if (g % nq == nq - 1 && c.n_q > 1)
      for (std::size_t i = 0; i < amps.size(); ++i) amps[i] *= c.ladder[i];
  }
}

void run_compiled(std::span<Complex> amps, const CompiledAnsatz& c) {
  run_compiled(amps, c, 0, nullptr, [](std::size_t, std::span<const Complex>) {});
}

CycleResult run_compiled_cycle(const StateVector& data, const CompiledAnsatz& c, int n_f, double u) {
  auto amps = attach_ancilla(data, n_f);
  run_compiled(amps, c);
  return collapse(amps, data.num_qubits(), n_f, u);
}

}  // namespace

CycleResult cycle(const StateVector& data, const Circuit& v, int n_f, Rng& rng) {
  return run_cycle(data, v, n_f, rng.uniform());
}

CycleResult cycle_with_uniform(const StateVector& data, const Circuit& v, int n_f, double u) {
  return run_cycle(data, v, n_f, u);
}

double measurement_uniform(std::uint64_t seed, std::uint64_t key, std::size_t j, std::size_t c) {
  return hashed_uniform(seed, {key, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(c)});
}

namespace {

void check_params(const AnsatzParams& params) {
  const std::size_t want = ansatz_parameter_count(params.n_q(), params.layers);
  for (std::size_t k = 0; k < params.theta.size(); ++k) {
    if (params.theta[k].size() != want)
      throw std::invalid_argument(
          fmt::format("cycle {} has {} angles, expected {}", k, params.theta[k].size(), want));
    for (double t : params.theta[k])
      if (!std::isfinite(t)) throw std::invalid_argument(fmt::format("cycle {} has a non-finite angle", k));
  }
}

// Pushes states through cycles [first, last) in place.
void push_through(std::vector<StateVector>& states, const std::vector<CompiledAnsatz>& circuits, std::size_t first,
                  std::size_t last, int n_f, std::uint64_t seed, std::uint64_t key) {
  for (std::size_t c = first; c < last; ++c)
    for (std::size_t j = 0; j < states.size(); ++j)
      states[j] = run_compiled_cycle(states[j], circuits[c], n_f, measurement_uniform(seed, key, j, c)).state;
}

std::vector<CompiledAnsatz> build_circuits(const AnsatzParams& params, std::size_t count) {
  std::vector<CompiledAnsatz> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(compile_ansatz(params.n_q(), params.layers, params.theta[k]));
  return out;
}

}  // namespace

WeightedEnsemble generate_ensemble(const AnsatzParams& params, const WeightedEnsemble& init, std::uint64_t seed,
                                   std::uint64_t key, std::optional<std::size_t> cycles) {
  check_params(params);
  const std::size_t k = cycles.value_or(params.cycles());
  if (k > params.cycles())
    throw std::invalid_argument(fmt::format("asked for {} cycles, only {} are defined", k, params.cycles()));
  if (k == 0) return init;
  if (init.num_qubits() != params.n_d)
    throw std::invalid_argument(
        fmt::format("init states have {} qubits, ansatz data register has {}", init.num_qubits(), params.n_d));
  std::vector<StateVector> states(init.states().begin(), init.states().end());
  push_through(states, build_circuits(params, k), 0, k, params.n_f, seed, key);
  return WeightedEnsemble::uniform(std::move(states));
}

WeightedEnsemble init_ensemble(int n_d, std::size_t count, Rng& rng) {
  check_width(n_d);
  if (count < 1) throw std::invalid_argument("init ensemble needs count >= 1");
  std::vector<StateVector> states;
  states.reserve(count);
  for (std::size_t i = 0; i < count; ++i) states.push_back(haar_product_state(n_d, rng));
  return WeightedEnsemble::uniform(std::move(states));
}

double loss(const WeightedEnsemble& train, const WeightedEnsemble& out, double lambda_vs) {
  if (train.empty() || out.empty()) throw std::invalid_argument("loss needs nonempty ensembles");
  if (lambda_vs < 0.0) throw std::invalid_argument("lambda_vs must be >= 0");
  double value = wasserstein1(train, out, GroundCost::infidelity).value;
  if (lambda_vs > 0.0) {
    const double diff = vendi_score(train) - vendi_score(out);
    value += lambda_vs * diff * diff;
  }
  return value;
}

std::vector<double> fd_gradient(const std::function<double(std::span<const double>, std::uint64_t)>& f,
                                std::span<const double> theta, double h, std::uint64_t seed) {
  if (!(h > 0.0)) throw std::invalid_argument(fmt::format("fd step must be > 0, got {}", h));
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    point[i] = theta[i] + h;
    const double up = f(point, seed);
    point[i] = theta[i] - h;
    const double down = f(point, seed);
    point[i] = theta[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

CycleObjective::CycleObjective(int n_d, int n_f, int layers, std::vector<StateVector> inputs,
                               std::vector<double> uniforms, WeightedEnsemble target, double lambda_vs)
    : n_d_(n_d),
      n_f_(n_f),
      layers_(layers),
      inputs_(std::move(inputs)),
      uniforms_(std::move(uniforms)),
      target_(std::move(target)),
      lambda_vs_(lambda_vs) {
  check_width(n_d + n_f);
  if (inputs_.empty() || target_.empty()) throw std::invalid_argument("cycle objective needs inputs and a target");
  if (uniforms_.size() != inputs_.size()) throw std::invalid_argument("one measurement uniform per input is required");
  for (const auto& s : inputs_)
    if (s.num_qubits() != n_d) throw std::invalid_argument("cycle objective input has the wrong width");
  if (lambda_vs_ < 0.0) throw std::invalid_argument("lambda_vs must be >= 0");
  if (lambda_vs_ > 0.0) target_vs_ = vendi_score(target_);
}

double CycleObjective::score(std::vector<StateVector> outputs) const {
  const auto model = WeightedEnsemble::uniform(std::move(outputs));
  double value = wasserstein1(target_, model, GroundCost::infidelity).value;
  if (lambda_vs_ > 0.0) {
    const double diff = target_vs_ - vendi_score(model);
    value += lambda_vs_ * diff * diff;
  }
  return value;
}

double CycleObjective::operator()(std::span<const double> theta) const {
  const auto c = compile_ansatz(n_d_ + n_f_, layers_, theta);
  std::vector<StateVector> out;
  out.reserve(inputs_.size());
  for (std::size_t j = 0; j < inputs_.size(); ++j) out.push_back(run_compiled_cycle(inputs_[j], c, n_f_, uniforms_[j]).state);
  return score(std::move(out));
}

std::vector<double> CycleObjective::gradient(std::span<const double> theta, double h) const {
  if (!(h > 0.0)) throw std::invalid_argument(fmt::format("fd step must be > 0, got {}", h));
  const auto c = compile_ansatz(n_d_ + n_f_, layers_, theta);
  const std::size_t dim = std::size_t{1} << (n_d_ + n_f_);

  // snap[j][g * dim ...]: input j just before rotation g.
  std::vector<std::vector<Complex>> snap(inputs_.size(), std::vector<Complex>(c.gates() * dim));
  for (std::size_t j = 0; j < inputs_.size(); ++j) {
    auto amps = attach_ancilla(inputs_[j], n_f_);
    run_compiled(amps, c, 0, nullptr, [&](std::size_t g, std::span<const Complex> a) {
      std::copy(a.begin(), a.end(), snap[j].begin() + static_cast<std::ptrdiff_t>(g * dim));
    });
  }

  std::vector<double> point(theta.begin(), theta.end());
  std::vector<Complex> amps(dim);
  auto eval_from = [&](std::size_t g) {
    const Mat2 m = fused_rotation(point[2 * g], point[2 * g + 1]);
    std::vector<StateVector> out;
    out.reserve(inputs_.size());
    for (std::size_t j = 0; j < inputs_.size(); ++j) {
      std::copy_n(snap[j].begin() + static_cast<std::ptrdiff_t>(g * dim), dim, amps.begin());
      run_compiled(amps, c, g, &m, [](std::size_t, std::span<const Complex>) {});
      out.push_back(collapse(amps, n_d_, n_f_, uniforms_[j]).state);
    }
    return score(std::move(out));
  };

  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    point[i] = theta[i] + h;
    const double up = eval_from(i / 2);
    point[i] = theta[i] - h;
    const double down = eval_from(i / 2);
    point[i] = theta[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

AdamStep adam_step(std::span<const double> theta, std::span<const double> grad, const AdamState& state,
                   const AdamOptions& opt) {
  if (theta.size() != grad.size()) throw std::invalid_argument("adam: theta and gradient lengths differ");
  AdamStep out;
  out.state.t = state.t + 1;
  out.state.m = state.m.empty() ? std::vector<double>(theta.size(), 0.0) : state.m;
  out.state.v = state.v.empty() ? std::vector<double>(theta.size(), 0.0) : state.v;
  if (out.state.m.size() != theta.size() || out.state.v.size() != theta.size())
    throw std::invalid_argument("adam: moment length differs from theta");
  const double t = static_cast<double>(out.state.t);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  out.theta.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double& m = out.state.m[i];
    double& v = out.state.v[i];
    m = opt.beta1 * m + (1.0 - opt.beta1) * grad[i];
    v = opt.beta2 * v + (1.0 - opt.beta2) * grad[i] * grad[i];
    out.theta[i] = theta[i] - opt.learning_rate * (m / c1) / (std::sqrt(v / c2) + opt.eps);
  }
  return out;
}

void TrainConfig::validate() const {
  if (n_d < 1) throw std::invalid_argument(fmt::format("n_d must be >= 1, got {}", n_d));
  if (n_f < 0) throw std::invalid_argument(fmt::format("n_f must be >= 0, got {}", n_f));
  check_width(n_q());
  if (cycles < 1) throw std::invalid_argument(fmt::format("K must be >= 1, got {}", cycles));
  if (layers < 1) throw std::invalid_argument(fmt::format("L must be >= 1, got {}", layers));
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs_per_cycle < 0 || iterations_per_epoch < 0)
    throw std::invalid_argument("epochs_per_cycle and iterations_per_epoch must be >= 0");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw std::invalid_argument("adam eps must be > 0");
  if (!(lambda_vs >= 0.0)) throw std::invalid_argument("lambda_vs must be >= 0");
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be > 0");
  if (n_eval < 1) throw std::invalid_argument("n_eval must be >= 1");
}

namespace {

// Seed keys. Keep stable: checkpoints depend on them.
constexpr std::uint64_t kKeyTheta = 0x7468;
constexpr std::uint64_t kKeyBatch = 0x6261;
constexpr std::uint64_t kKeyInit = 0x696e;
constexpr std::uint64_t kKeyEval = 0x6576;

std::vector<double> random_angles(std::uint64_t seed, std::size_t cycle, std::size_t count) {
  Rng rng(derive_seed(seed, {kKeyTheta, static_cast<std::uint64_t>(cycle)}));
  std::vector<double> theta(count);
  for (auto& t : theta) t = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
  return theta;
}

AnsatzParams params_from(const TrainConfig& c, std::vector<std::vector<double>> theta) {
  AnsatzParams p;
  p.layers = c.layers;
  p.n_d = c.n_d;
  p.n_f = c.n_f;
  p.theta = std::move(theta);
  return p;
}

}  // namespace

EnsembleMetrics evaluate_model(const AnsatzParams& params, const TrainConfig& config,
                               std::span<const StateVector> eval_target, std::uint64_t key) {
  if (eval_target.empty()) throw std::invalid_argument("evaluation needs target samples");
  Rng rng(derive_seed(config.init_seed, {kKeyEval, key}));
  const auto init = init_ensemble(config.n_d, config.n_eval, rng);
  const auto model = generate_ensemble(params, init, derive_seed(config.measurement_seed, {kKeyEval}), key);
  const auto target = WeightedEnsemble::uniform(std::vector<StateVector>(eval_target.begin(), eval_target.end()));
  EnsembleMetrics m;
  m.w1 = wasserstein1(target, model, GroundCost::infidelity).value;
  m.mmd = mmd(target, model);
  m.vs_diff = std::abs(vendi_score(target) - vendi_score(model));
  return m;
}

TrainResult train_incremental(const TrainConfig& config, const TrainingData& data,
                              std::optional<TrainCheckpoint> resume, const TrainControl& control) {
  config.validate();
  if (data.train.empty()) throw std::invalid_argument("training pool is empty");
  if (data.eval_target.empty()) throw std::invalid_argument("evaluation target set is empty");
  for (const auto& s : data.train)
    if (s.num_qubits() != config.n_d)
      throw std::invalid_argument(
          fmt::format("training state has {} qubits, config says n_d = {}", s.num_qubits(), config.n_d));

  const auto start = std::chrono::steady_clock::now();
  const std::size_t n_params = ansatz_parameter_count(config.n_q(), config.layers);
  const std::size_t per_cycle = config.iterations_per_cycle();
  const auto cycles = static_cast<std::size_t>(config.cycles);

  TrainCheckpoint ck;
  if (resume) {
    ck = std::move(*resume);
    if (ck.frozen.size() != ck.cycle) throw std::invalid_argument("checkpoint: frozen cycle count mismatch");
    if (!ck.finished && ck.current.size() != n_params) throw std::invalid_argument("checkpoint: angle count mismatch");
  } else {
    ck.config = config;
    ck.current = random_angles(config.init_seed, 0, n_params);
  }
  ck.config = config;

  if (!ck.initial_evaluated) {
    ck.report.initial = evaluate_model(params_from(config, {ck.current}), config, data.eval_target, 0);
    ck.initial_evaluated = true;
  }

  std::size_t done_this_call = 0;
  while (!ck.finished) {
    const std::size_t k = ck.cycle;
    auto params = params_from(config, ck.frozen);
    const auto prefix = build_circuits(params, k);

    while (ck.iteration < per_cycle) {
      if (control.stop_after && done_this_call >= *control.stop_after) {
        ck.report.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        params.theta.push_back(ck.current);
        return {std::move(params), std::move(ck)};
      }
      const std::size_t it = ck.iteration;
      const auto iter_key = derive_seed(config.data_seed, {static_cast<std::uint64_t>(k), it});

      Rng batch_rng(derive_seed(iter_key, {kKeyBatch}));
      std::vector<StateVector> batch;
      batch.reserve(config.batch_size);
      for (std::size_t b = 0; b < config.batch_size; ++b) batch.push_back(data.train[batch_rng.below(data.train.size())]);
      Rng init_rng(derive_seed(iter_key, {kKeyInit}));
      auto init = init_ensemble(config.n_d, config.batch_size, init_rng);
      std::vector<StateVector> inputs(init.states().begin(), init.states().end());
      const auto mseed = derive_seed(config.measurement_seed, {static_cast<std::uint64_t>(k), it});
      push_through(inputs, prefix, 0, k, config.n_f, mseed, 0);
      std::vector<double> uniforms(inputs.size());
      for (std::size_t j = 0; j < inputs.size(); ++j) uniforms[j] = measurement_uniform(mseed, 0, j, k);

      const CycleObjective objective(config.n_d, config.n_f, config.layers, std::move(inputs), std::move(uniforms),
                                     WeightedEnsemble::uniform(std::move(batch)), config.lambda_vs);
      const double current = objective(ck.current);
      if (!std::isfinite(current))
        throw std::runtime_error(fmt::format("non-finite loss at cycle {}, iteration {}", k, it));
      const auto grad = objective.gradient(ck.current, config.fd_step);
      for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
          throw std::runtime_error(
              fmt::format("non-finite gradient component {} at cycle {}, iteration {}", i, k, it));
      auto step = adam_step(ck.current, grad, ck.adam, config.adam);
      ck.current = std::move(step.theta);
      ck.adam = std::move(step.state);
      ck.report.loss_trace.push_back(current);
      ++ck.iteration;
      ++done_this_call;
    }

    // Freeze cycle k.
    ck.frozen.push_back(ck.current);
    ck.report.cycle_metrics.push_back(
        evaluate_model(params_from(config, ck.frozen), config, data.eval_target, 1 + static_cast<std::uint64_t>(k)));
    ++ck.cycle;
    ck.iteration = 0;
    ck.adam = {};
    if (ck.cycle == cycles) {
      ck.current.clear();
      ck.finished = true;
    } else {
      ck.current = random_angles(config.init_seed, ck.cycle, n_params);
    }
    if (control.on_cycle_end) control.on_cycle_end(ck);
  }

  ck.report.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {params_from(config, ck.frozen), std::move(ck)};
}

}  // namespace mpe
