#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mpe/gates.hpp"
#include "mpe/measurement.hpp"
#include "mpe/rng.hpp"
#include "mpe/state.hpp"

namespace mpe {

/// Hardware-efficient ansatz on n_q qubits: per layer, RY then RX on every
/// qubit followed by the CZ chain (0,1), (1,2), ..., (n_q-2, n_q-1). Layer l
/// reads theta[2 n_q l + 2 j] (RY) and theta[2 n_q l + 2 j + 1] (RX).
Circuit build_ansatz(int n_q, int layers, std::span<const double> theta);

inline std::size_t ansatz_parameter_count(int n_q, int layers) {
  return 2 * static_cast<std::size_t>(n_q) * static_cast<std::size_t>(layers);
}

struct CycleResult {
  StateVector state;  // next data state on n_d qubits
  std::uint64_t outcome = 0;
  double probability = 1.0;
};

/// Attach |0...0> on n_f trailing qubits, run `v`, measure those qubits and
/// return the normalized data state. With n_f = 0 there is no measurement.
CycleResult cycle(const StateVector& data, const Circuit& v, int n_f, Rng& rng);
CycleResult cycle_with_uniform(const StateVector& data, const Circuit& v, int n_f, double u);

/// Per-cycle ansatz angles.
struct AnsatzParams {
  int layers = 1;
  int n_d = 1;
  int n_f = 0;
  std::vector<std::vector<double>> theta;  // theta[k] has 2 (n_d + n_f) layers entries

  int n_q() const { return n_d + n_f; }
  std::size_t cycles() const { return theta.size(); }
};

/// Uniform used for the measurement of sample `j` at cycle `c`, under key `key`.
double measurement_uniform(std::uint64_t seed, std::uint64_t key, std::size_t j, std::size_t c);

/// Pushes every init state through cycles 0..cycles-1 of `params` (all of
/// them when `cycles` is unset). Output is uniform over the init entries.
/// Sample j at cycle c measures with measurement_uniform(seed, key, j, c).
WeightedEnsemble generate_ensemble(const AnsatzParams& params, const WeightedEnsemble& init, std::uint64_t seed,
                                   std::uint64_t key = 0, std::optional<std::size_t> cycles = std::nullopt);

/// Haar product states on n_d qubits, uniform weights.
WeightedEnsemble init_ensemble(int n_d, std::size_t count, Rng& rng);

/// W1 (infidelity cost) + lambda (VS(train) - VS(out))^2.
double loss(const WeightedEnsemble& train, const WeightedEnsemble& out, double lambda_vs);

/// Central differences (f(theta + h e_i, seed) - f(theta - h e_i, seed)) / 2h,
/// with the same seed on both sides.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>, std::uint64_t)>& f,
                                std::span<const double> theta, double h, std::uint64_t seed);

/// Training loss of one cycle as a function of that cycle's angles: every
/// input is pushed through the ansatz with its own fixed measurement uniform,
/// and the outputs are compared with `target` by `loss`.
class CycleObjective {
 public:
  CycleObjective(int n_d, int n_f, int layers, std::vector<StateVector> inputs, std::vector<double> uniforms,
                 WeightedEnsemble target, double lambda_vs);

  double operator()(std::span<const double> theta) const;

  /// Same value as fd_gradient over operator(), bit for bit. Each input's
  /// state before every rotation is cached once, so a perturbed angle only
  /// replays the gates after it.
  std::vector<double> gradient(std::span<const double> theta, double h) const;

 private:
  double score(std::vector<StateVector> outputs) const;

  int n_d_, n_f_, layers_;
  std::vector<StateVector> inputs_;
  std::vector<double> uniforms_;
  WeightedEnsemble target_;
  double lambda_vs_;
  double target_vs_ = 0.0;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;  // steps already taken
};

struct AdamStep {
  std::vector<double> theta;
  AdamState state;
};

/// Bias-corrected Adam update; step number is state.t + 1.
AdamStep adam_step(std::span<const double> theta, std::span<const double> grad, const AdamState& state,
                   const AdamOptions& opt);

struct TrainConfig {
  int n_d = 4;
  int n_f = 2;
  int cycles = 5;  // K
  int layers = 4;  // L
  std::size_t batch_size = 100;
  int epochs_per_cycle = 10;
  int iterations_per_epoch = 10;
  AdamOptions adam{};
  double lambda_vs = 0.0;
  double fd_step = 1e-3;
  std::size_t n_eval = 200;
  std::uint64_t init_seed = 1;
  std::uint64_t data_seed = 2;
  std::uint64_t measurement_seed = 3;

  int n_q() const { return n_d + n_f; }
  std::size_t iterations_per_cycle() const {
    return static_cast<std::size_t>(epochs_per_cycle) * static_cast<std::size_t>(iterations_per_epoch);
  }
  /// Throws std::invalid_argument on inconsistent values and
  /// std::length_error above the width cap.
  void validate() const;
};

struct EnsembleMetrics {
  double w1 = 0.0;
  double mmd = 0.0;
  double vs_diff = 0.0;  // |VS(target) - VS(model)|
};

struct TrainReport {
  std::vector<double> loss_trace;             // one entry per iteration, pre-update loss
  EnsembleMetrics initial;                    // model with cycle 0 at its random init
  std::vector<EnsembleMetrics> cycle_metrics;  // after each cycle is frozen
  double wall_seconds = 0.0;
};

/// Resumable training state. Every random draw is derived from the seeds and
/// (cycle, iteration), so this is the complete state.
struct TrainCheckpoint {
  TrainConfig config;
  std::vector<std::vector<double>> frozen;  // finished cycles
  std::vector<double> current;              // cycle in progress
  AdamState adam;
  std::size_t cycle = 0;
  std::size_t iteration = 0;  // next iteration of `cycle`
  TrainReport report;
  bool initial_evaluated = false;
  bool finished = false;
};

struct TrainingData {
  std::vector<StateVector> train;        // pool mini-batches are drawn from
  std::vector<StateVector> eval_target;  // held-out target samples for metrics
};

struct TrainControl {
  /// Stop (with a resumable checkpoint) after this many iterations in this call.
  std::optional<std::size_t> stop_after;
  std::function<void(const TrainCheckpoint&)> on_cycle_end;
};

struct TrainResult {
  AnsatzParams params;
  TrainCheckpoint checkpoint;
};

/// Metrics between n_eval model outputs (fresh Haar product inputs) and the
/// held-out target set.
EnsembleMetrics evaluate_model(const AnsatzParams& params, const TrainConfig& config,
                               std::span<const StateVector> eval_target, std::uint64_t key);

/// Layer-wise training: cycle k starts from angles uniform in [-pi, pi],
/// runs epochs_per_cycle * iterations_per_epoch Adam iterations on fresh
/// mini-batches with finite-difference gradients, then is frozen.
TrainResult train_incremental(const TrainConfig& config, const TrainingData& data,
                              std::optional<TrainCheckpoint> resume = std::nullopt, const TrainControl& control = {});

}  // namespace mpe
