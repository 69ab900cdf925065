#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpe/covering.hpp"
#include "mpe/gates.hpp"
#include "mpe/linalg.hpp"
#include "mpe/measurement.hpp"
#include "mpe/rng.hpp"
#include "mpe/state.hpp"

namespace mpe {

/// Exact target probability num / den.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  bool operator==(const Fraction&) const = default;
};

/// Distribution loader built from a uniform-amplitude hidden register.
///
/// Hidden basis state k is assigned to ancilla outcome v(k) in contiguous
/// blocks, so outcome b is produced by c_b of the 2^n_m hidden states and is
/// measured with probability c_b / 2^n_m.
struct IqpConstruction {
  int n_a = 0;
  int n_m = 0;
  double epsilon = 0.0;
  std::vector<double> target_q;          // padded to 2^n_a
  std::vector<Fraction> target_exact;    // padded; empty when built from doubles
  std::vector<std::uint64_t> counts;     // c_b, sums to 2^n_m
  std::vector<std::uint32_t> mapping_v;  // hidden index -> ancilla outcome
  std::vector<std::uint64_t> block_start;

  std::uint64_t hidden_dim() const { return std::uint64_t{1} << n_m; }
  std::uint64_t ancilla_dim() const { return std::uint64_t{1} << n_a; }

  /// Parity of popcount(v(k) & j): phase pi on the UMA amplitude (j, k) when 1.
  int phase_parity(std::uint64_t j, std::uint64_t k) const;

  /// p_b = c_b / 2^n_m.
  std::vector<double> probabilities() const;

  /// 1 / 2^(n_m - n_a + 1).
  double tv_bound() const;
};

/// Smallest t >= 0 with 2^t * epsilon >= 1, i.e. ceil(log2(1/epsilon)).
int precision_qubits(double epsilon);

/// Counts by the floor rule, then +1 on the first (2^n_m - S) outcomes in
/// index order. n_a = max(1, ceil(log2 |q|)); q is zero-padded to 2^n_a.
/// n_m = max(n_a + precision_qubits(epsilon), min_hidden).
/// Throws if q does not sum to 1 within 1e-12, has negative entries, or
/// epsilon is outside (0, 1].
IqpConstruction build_iqp_construction(std::span<const double> q, double epsilon, int min_hidden = 0);
/// Same with exact rational targets, which must sum to exactly 1.
IqpConstruction build_iqp_construction(std::span<const Fraction> q, double epsilon, int min_hidden = 0);

/// Parses "3/8", "1" or a decimal such as "0.25" (taken as its exact value).
Fraction parse_fraction(std::string_view text);

/// Exact rational check of the total-variation guarantee. Uses target_exact
/// when present, otherwise the exact binary value of each target_q entry.
struct ExactTvCheck {
  bool counts_conserved = false;      // sum c_b == 2^n_m
  bool per_outcome_within_one = false;  // |q_b 2^n_m - c_b| <= 1 for every b
  bool tv_within_bound = false;       // TV(p, q) <= 1 / 2^(n_m - n_a + 1)
  bool bound_within_half_eps = false;  // 1 / 2^(n_m - n_a + 1) <= epsilon / 2
  std::string tv_exact;               // rational, e.g. "1/24"
  std::string bound_exact;
  bool ok() const { return counts_conserved && per_outcome_within_one && tv_within_bound && bound_within_half_eps; }
};
ExactTvCheck verify_tv_exact(const IqpConstruction& c);

/// H on every qubit, the {0, pi} diagonal phase layer, then H on the ancilla.
/// Ancilla qubits come first.
Circuit iqp_circuit(const IqpConstruction& c);

/// 2^(-n_m/2) sum_k |v(k)>_A |k>_M written down directly.
StateVector logical_model_state(const IqpConstruction& c);

/// The same state reached by running iqp_circuit on |0...0>.
StateVector logical_model_state_via_iqp(const IqpConstruction& c);

/// Unitary U with U src = dst, formed as B A^dagger where A and B are unitary
/// completions whose first columns are src and dst.
CMatrix state_transport_unitary(std::span<const Complex> src, std::span<const Complex> dst);

/// Generator state whose ancilla branches carry the net centers.
struct MpeGenerator {
  IqpConstruction iqp;
  int n_d = 0;
  std::vector<int> ancilla_qubits;
  std::vector<int> hidden_qubits;
  std::vector<int> data_qubits;
  std::vector<gate::ControlledPrep> controlled_unitaries;
  std::vector<StateVector> centers;
  std::vector<double> branch_probabilities;  // p_b for b < centers.size()
  StateVector generator_state{1};

  int num_qubits() const { return iqp.n_a + iqp.n_m; }
};

/// Builds the loader for the net weights and rotates every branch onto its
/// center. n_m defaults to the smallest admissible value; an explicit n_m
/// below n_a + precision_qubits(epsilon) or below n_d is rejected.
MpeGenerator assemble_generator(const DeltaNet& net, double epsilon, int n_d, std::optional<int> n_m = std::nullopt);

/// Data-subsystem state of ancilla branch b (M\D is |0...0> there).
StateVector generator_branch(const MpeGenerator& gen, std::uint64_t b);

/// Largest 1 - fidelity(branch_b, center_b) and largest probability leaked
/// outside the |0...0> pattern on M\D, over branches with c_b > 0.
struct GeneratorCheck {
  double max_infidelity = 0.0;
  double max_leak = 0.0;
};
GeneratorCheck check_generator(const MpeGenerator& gen);

struct GeneratedSamples {
  std::vector<std::uint64_t> outcomes;
  WeightedEnsemble ensemble;  // uniform over draws
};

/// Each draw measures the ancilla register and emits the data state of the
/// observed branch.
GeneratedSamples sample_generated(const MpeGenerator& gen, std::size_t count, Rng& rng);

/// W1 (trace-distance ground cost) between the uniform target ensemble and
/// `n_draws` generated states. Identical states are merged before transport.
double certify_epsilon(std::span<const StateVector> target_samples, const MpeGenerator& gen, std::size_t n_draws,
                       Rng& rng);

struct CertificateReport {
  double delta_net = 0.0;
  double epsilon = 0.0;
  int n_a = 0;
  int n_m = 0;
  double tv_bound = 0.0;
  double tv_actual = 0.0;
  double w1_certificate = 0.0;
  std::size_t n_draws = 0;
  std::uint64_t seed = 0;
};

/// Full pipeline: greedy net at `delta`, generator at `epsilon`, certificate.
CertificateReport certify_pipeline(std::span<const StateVector> target_samples, double delta, double epsilon,
                                   std::size_t n_draws, std::uint64_t seed);

}  // namespace mpe
