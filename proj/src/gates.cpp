#include "mpe/gates.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace mpe {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_qubit(int q, int n) {
  if (q < 0 || q >= n) throw std::out_of_range(fmt::format("qubit index {} outside register of {} qubits", q, n));
}

void check_distinct(int a, int b) {
  if (a == b) throw std::invalid_argument(fmt::format("two-qubit gate needs distinct qubits, got {} twice", a));
}

// 2x2 matrix [[m00, m01], [m10, m11]] on qubit q.
void apply_single(std::span<Complex> amps, int n, int q, Complex m00, Complex m01, Complex m10, Complex m11) {
  const std::size_t stride = std::size_t{1} << bit_position(n, q);
  const std::size_t dim = amps.size();
  // Real arithmetic avoids the inf/nan-aware complex product routine.
  const double r0 = m00.real(), i0 = m00.imag(), r1 = m01.real(), i1 = m01.imag();
  const double r2 = m10.real(), i2 = m10.imag(), r3 = m11.real(), i3 = m11.imag();
  for (std::size_t base = 0; base < dim; base += 2 * stride)
    for (std::size_t i = base; i < base + stride; ++i) {
      const double x0 = amps[i].real(), y0 = amps[i].imag();
      const double x1 = amps[i + stride].real(), y1 = amps[i + stride].imag();
      amps[i] = {r0 * x0 - i0 * y0 + r1 * x1 - i1 * y1, r0 * y0 + i0 * x0 + r1 * y1 + i1 * x1};
      amps[i + stride] = {r2 * x0 - i2 * y0 + r3 * x1 - i3 * y1, r2 * y0 + i2 * x0 + r3 * y1 + i3 * x1};
    }
}

void apply_controlled_prep(std::span<Complex> amps, int n, const gate::ControlledPrep& g) {
  std::uint64_t ctrl_mask = 0;
  std::uint64_t ctrl_value = 0;
  for (std::size_t i = 0; i < g.control_qubits.size(); ++i) {
    const std::uint64_t bit = std::uint64_t{1} << bit_position(n, g.control_qubits[i]);
    ctrl_mask |= bit;
    if (g.pattern[i] == '1') ctrl_value |= bit;
  }
  const std::size_t m = g.target_qubits.size();
  const std::size_t sub = std::size_t{1} << m;
  // Offsets of every target-subspace basis vector, first target qubit most significant.
  std::vector<std::uint64_t> offset(sub, 0);
  std::uint64_t tgt_mask = 0;
  for (std::size_t t = 0; t < sub; ++t)
    for (std::size_t k = 0; k < m; ++k)
      if ((t >> (m - 1 - k)) & 1U) offset[t] |= std::uint64_t{1} << bit_position(n, g.target_qubits[k]);
  for (int q : g.target_qubits) tgt_mask |= std::uint64_t{1} << bit_position(n, q);

  std::vector<Complex> in(sub);
  std::vector<Complex> out(sub);
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    if ((i & ctrl_mask) != ctrl_value || (i & tgt_mask) != 0) continue;
    bool any = false;
    for (std::size_t t = 0; t < sub; ++t) {
      in[t] = amps[i | offset[t]];
      any = any || in[t] != Complex{};
    }
    if (!any) continue;
    for (std::size_t r = 0; r < sub; ++r) {
      Complex s{};
      for (std::size_t c = 0; c < sub; ++c) s += g.unitary(r, c) * in[c];
      out[r] = s;
    }
    for (std::size_t t = 0; t < sub; ++t) amps[i | offset[t]] = out[t];
  }
}

}  // namespace

void validate_gate(const GateOp& g, int n) {
  std::visit(overloaded{
                 [n](const gate::Hadamard& x) { check_qubit(x.q, n); },
                 [n](const gate::RX& x) { check_qubit(x.q, n); },
                 [n](const gate::RY& x) { check_qubit(x.q, n); },
                 [n](const gate::RZ& x) { check_qubit(x.q, n); },
                 [n](const gate::CZ& x) {
                   check_qubit(x.control, n);
                   check_qubit(x.target, n);
                   check_distinct(x.control, x.target);
                 },
                 [n](const gate::RZZ& x) {
                   check_qubit(x.q1, n);
                   check_qubit(x.q2, n);
                   check_distinct(x.q1, x.q2);
                 },
                 [n](const gate::DiagonalPhase& x) {
                   if (x.phases.size() != (std::size_t{1} << n))
                     throw std::invalid_argument(
                         fmt::format("diagonal phase has {} entries, register needs {}", x.phases.size(), 1ULL << n));
                 },
                 [n](const gate::ControlledPrep& x) {
                   if (x.pattern.size() != x.control_qubits.size())
                     throw std::invalid_argument("control pattern length differs from control qubit count");
                   for (char c : x.pattern)
                     if (c != '0' && c != '1') throw std::invalid_argument("control pattern must be a bitstring");
                   std::uint64_t seen = 0;
                   auto mark = [&](int q) {
                     check_qubit(q, n);
                     const std::uint64_t bit = std::uint64_t{1} << q;
                     if (seen & bit) throw std::invalid_argument(fmt::format("qubit {} used twice in ControlledPrep", q));
                     seen |= bit;
                   };
                   for (int q : x.control_qubits) mark(q);
                   for (int q : x.target_qubits) mark(q);
                   if (x.target_qubits.empty()) throw std::invalid_argument("ControlledPrep needs target qubits");
                   const std::size_t sub = std::size_t{1} << x.target_qubits.size();
                   if (x.unitary.rows() != sub || x.unitary.cols() != sub)
                     throw std::invalid_argument("ControlledPrep matrix dimension does not match target qubits");
                   const double r = unitarity_residual(x.unitary);
                   if (!(r <= 1e-10))
                     throw std::invalid_argument(fmt::format("ControlledPrep matrix is not unitary (residual {:.3g})", r));
                 },
             },
             g);
}

namespace detail {

void apply_inplace(std::span<Complex> amps, int n, const GateOp& g) {
  static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
  std::visit(overloaded{
                 [&](const gate::Hadamard& x) { apply_single(amps, n, x.q, kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2); },
                 [&](const gate::RX& x) {
                   const double c = std::cos(x.theta / 2), s = std::sin(x.theta / 2);
                   apply_single(amps, n, x.q, c, Complex{0, -s}, Complex{0, -s}, c);
                 },
                 [&](const gate::RY& x) {
                   const double c = std::cos(x.theta / 2), s = std::sin(x.theta / 2);
                   apply_single(amps, n, x.q, c, -s, s, c);
                 },
                 [&](const gate::RZ& x) {
                   const Complex e0 = std::polar(1.0, -x.theta / 2), e1 = std::polar(1.0, x.theta / 2);
                   apply_single(amps, n, x.q, e0, 0.0, 0.0, e1);
                 },
                 [&](const gate::CZ& x) {
                   const std::uint64_t mask =
                       (std::uint64_t{1} << bit_position(n, x.control)) | (std::uint64_t{1} << bit_position(n, x.target));
                   for (std::uint64_t i = 0; i < amps.size(); ++i)
                     if ((i & mask) == mask) amps[i] = -amps[i];
                 },
                 [&](const gate::RZZ& x) {
                   const int b1 = bit_position(n, x.q1), b2 = bit_position(n, x.q2);
                   const Complex even = std::polar(1.0, -x.theta / 2), odd = std::polar(1.0, x.theta / 2);
                   for (std::uint64_t i = 0; i < amps.size(); ++i)
                     amps[i] *= (((i >> b1) ^ (i >> b2)) & 1U) ? odd : even;
                 },
                 [&](const gate::DiagonalPhase& x) {
                   for (std::size_t i = 0; i < amps.size(); ++i)
                     if (x.phases[i] != 0.0) amps[i] *= std::polar(1.0, x.phases[i]);
                 },
                 [&](const gate::ControlledPrep& x) { apply_controlled_prep(amps, n, x); },
             },
             g);
}

void apply_circuit_inplace(std::span<Complex> amps, const Circuit& c) {
  for (const auto& g : c.gates) apply_inplace(amps, c.num_qubits, g);
}

}  // namespace detail

StateVector apply_gate(const StateVector& state, const GateOp& g) {
  validate_gate(g, state.num_qubits());
  std::vector<Complex> amps(state.amplitudes().begin(), state.amplitudes().end());
  detail::apply_inplace(amps, state.num_qubits(), g);
  return StateVector::from_amplitudes(std::move(amps));
}

StateVector run_circuit(const StateVector& state, const Circuit& circuit) {
  if (circuit.num_qubits != state.num_qubits())
    throw std::invalid_argument(
        fmt::format("circuit width {} does not match state width {}", circuit.num_qubits, state.num_qubits()));
  for (const auto& g : circuit.gates) validate_gate(g, circuit.num_qubits);
  std::vector<Complex> amps(state.amplitudes().begin(), state.amplitudes().end());
  detail::apply_circuit_inplace(amps, circuit);
  return StateVector::from_amplitudes(std::move(amps));
}

}  // namespace mpe
