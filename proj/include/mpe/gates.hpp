#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mpe/linalg.hpp"
#include "mpe/state.hpp"

namespace mpe {

namespace gate {

struct Hadamard {
  int q;
};
/// exp(-i theta X / 2)
struct RX {
  int q;
  double theta;
};
/// exp(-i theta Y / 2)
struct RY {
  int q;
  double theta;
};
/// exp(-i theta Z / 2)
struct RZ {
  int q;
  double theta;
};
struct CZ {
  int control;
  int target;
};
/// exp(-i theta Z(x)Z / 2)
struct RZZ {
  int q1;
  int q2;
  double theta;
};
/// Multiplies basis amplitude i by exp(i phases[i]). Acts on the whole register.
struct DiagonalPhase {
  std::vector<double> phases;
};
/// Applies `unitary` to `target_qubits` on the branch where `control_qubits`
/// read `pattern` (qubit order as listed, first character = first qubit).
struct ControlledPrep {
  std::vector<int> control_qubits;
  std::string pattern;
  std::vector<int> target_qubits;
  CMatrix unitary;
};

}  // namespace gate

using GateOp = std::variant<gate::Hadamard, gate::RX, gate::RY, gate::RZ, gate::CZ, gate::RZZ, gate::DiagonalPhase,
                            gate::ControlledPrep>;

struct Circuit {
  int num_qubits = 0;
  std::vector<GateOp> gates;

  explicit Circuit(int n) : num_qubits(n) {}
  Circuit& add(GateOp g) {
    gates.push_back(std::move(g));
    return *this;
  }
};

/// Throws std::out_of_range / std::invalid_argument if `g` does not fit an
/// `n`-qubit register or a ControlledPrep matrix is not unitary (1e-10).
void validate_gate(const GateOp& g, int n);

StateVector apply_gate(const StateVector& state, const GateOp& gate);

/// Left fold of apply_gate over the circuit.
StateVector run_circuit(const StateVector& state, const Circuit& circuit);

namespace detail {
// In-place kernels. No validation; callers have checked the gate already.
void apply_inplace(std::span<Complex> amps, int n, const GateOp& g);
void apply_circuit_inplace(std::span<Complex> amps, const Circuit& c);
}  // namespace detail

}  // namespace mpe
