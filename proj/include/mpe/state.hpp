#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpe/rng.hpp"

namespace mpe {

using Complex = std::complex<double>;

/// Absolute ceiling on register width (2^24 amplitudes, 256 MB).
inline constexpr int kHardMaxQubits = 24;

/// Effective width cap: MPE_MAX_QUBITS if set (clamped to kHardMaxQubits),
/// otherwise kHardMaxQubits.
int max_qubits();

/// Throws std::invalid_argument if `n` < 1 and std::length_error above max_qubits().
void check_width(int n);

/// Bit position of qubit `q` inside a basis index of an `n`-qubit register.
/// Qubit 0 is the most significant bit.
constexpr int bit_position(int n, int q) { return n - 1 - q; }

/// Basis index <-> bitstring ("0110"), qubit 0 first.
std::uint64_t parse_bitstring(std::string_view bits);
std::string format_bitstring(std::uint64_t value, int width);

/// Dense pure state of `num_qubits` qubits. Immutable once built; every
/// operation on it returns a new state.
class StateVector {
 public:
  /// |0...0>.
  explicit StateVector(int num_qubits);

  /// Validates length (power of two) and norm (within `tol` of 1).
  static StateVector from_amplitudes(std::vector<Complex> amplitudes, double tol = 1e-10);

  /// Rescales to unit norm. Throws if the norm is zero or not finite.
  static StateVector normalized(std::vector<Complex> amplitudes);

  int num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm() const;

  /// this (x) other, with this state's qubits first.
  StateVector tensor(const StateVector& other) const;

  bool operator==(const StateVector&) const = default;

 private:
  StateVector(int num_qubits, std::vector<Complex> amps) : num_qubits_(num_qubits), amps_(std::move(amps)) {}

  int num_qubits_;
  std::vector<Complex> amps_;
};

/// Inner product <a|b>.
Complex inner(const StateVector& a, const StateVector& b);

/// |<a|b>|^2. Throws std::invalid_argument on width mismatch.
double fidelity(const StateVector& a, const StateVector& b);

/// Largest |a_i - b_i|.
double max_amplitude_error(std::span<const Complex> a, std::span<const Complex> b);

// State factories.
StateVector basis_state(std::string_view bits);
StateVector basis_state(int num_qubits, std::uint64_t index);
StateVector ghz_state(int num_qubits);
/// Haar-random pure state: normalized complex Gaussian vector.
StateVector haar_random_state(int num_qubits, Rng& rng);
/// Tensor product of independent single-qubit Haar states.
StateVector haar_product_state(int num_qubits, Rng& rng);

}  // namespace mpe
