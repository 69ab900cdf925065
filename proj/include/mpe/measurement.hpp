#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpe/rng.hpp"
#include "mpe/state.hpp"

namespace mpe {

/// Outcomes below this probability are treated as numerically absent.
inline constexpr double kDegenerateBranch = 1e-14;

/// Finite ensemble {(p_j, |psi_j>)} of pure states of equal width.
class WeightedEnsemble {
 public:
  WeightedEnsemble() = default;
  /// Validates: equal widths, p_j >= 0, sum p_j = 1 within 1e-9.
  WeightedEnsemble(std::vector<double> probs, std::vector<StateVector> states);

  static WeightedEnsemble uniform(std::vector<StateVector> states);

  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  int num_qubits() const { return states_.empty() ? 0 : states_.front().num_qubits(); }
  std::span<const double> probs() const { return probs_; }
  std::span<const StateVector> states() const { return states_; }
  const StateVector& state(std::size_t i) const { return states_[i]; }
  double prob(std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
  std::vector<StateVector> states_;
};

/// Merges entries whose states have fidelity >= 1 - tol, summing their
/// probabilities. The first occurrence is kept as representative.
WeightedEnsemble merge_duplicates(const WeightedEnsemble& ensemble, double tol = 1e-12);

struct MeasurementResult {
  std::uint64_t outcome = 0;  // measured qubits read in the order given
  std::string bits;
  double probability = 0.0;
  StateVector collapsed;  // P_z|psi>/sqrt(p(z)) on the full register
};

/// Born probabilities of every outcome on `qubits` (outcome index uses the
/// listed qubit order, first listed = most significant).
std::vector<double> outcome_probabilities(const StateVector& state, std::span<const int> qubits);

/// Projective computational-basis measurement of `qubits`.
MeasurementResult measure_subsystem(const StateVector& state, std::span<const int> qubits, Rng& rng);

/// Same, with the sampling uniform supplied explicitly (inverse CDF over the
/// non-degenerate outcomes in index order).
MeasurementResult measure_subsystem_with_uniform(const StateVector& state, std::span<const int> qubits, double u);

/// Projected ensemble on the complement of `ancilla`.
struct ProjectedEnsemble {
  std::vector<std::uint64_t> outcomes;  // ancilla outcome of each entry
  std::vector<Complex> phases;          // removed unit phase factor w: branch = sqrt(p) w |z>|phi>
  WeightedEnsemble ensemble;
};

/// One entry per ancilla outcome with p(z) > kDegenerateBranch. Each branch
/// state has its first non-negligible amplitude made real and positive.
ProjectedEnsemble projected_ensemble(const StateVector& state, std::span<const int> ancilla);

/// Normalized state of the unmeasured qubits for a fixed ancilla outcome
/// (qubit order preserved). Throws if the branch is degenerate.
StateVector branch_state(const StateVector& state, std::span<const int> ancilla, std::uint64_t outcome,
                         double* probability = nullptr);

}  // namespace mpe
