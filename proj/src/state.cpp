#include "mpe/state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include <fmt/core.h>

namespace mpe {

int max_qubits() {
  if (const char* env = std::getenv("MPE_MAX_QUBITS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min<long>(v, kHardMaxQubits));
  }
  return kHardMaxQubits;
}

void check_width(int n) {
  if (n < 1) throw std::invalid_argument(fmt::format("register width must be >= 1, got {}", n));
  if (n > max_qubits())
    throw std::length_error(fmt::format("register width {} exceeds the cap of {} qubits", n, max_qubits()));
}

std::uint64_t parse_bitstring(std::string_view bits) {
  if (bits.empty() || bits.size() > 64) throw std::invalid_argument("bitstring must have 1..64 characters");
  std::uint64_t v = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument(fmt::format("invalid bitstring '{}'", bits));
    v = (v << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return v;
}

std::string format_bitstring(std::uint64_t value, int width) {
  std::string s(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i)
    if ((value >> (width - 1 - i)) & 1U) s[static_cast<std::size_t>(i)] = '1';
  return s;
}

StateVector::StateVector(int num_qubits) : num_qubits_(num_qubits) {
  check_width(num_qubits);
  amps_.assign(std::size_t{1} << num_qubits, Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amplitudes, double tol) {
  const std::size_t n = amplitudes.size();
  if (n < 2 || !std::has_single_bit(n))
    throw std::invalid_argument(fmt::format("amplitude count {} is not a power of two >= 2", n));
  const int q = std::countr_zero(n);
  check_width(q);
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  if (!std::isfinite(s) || std::abs(std::sqrt(s) - 1.0) > tol)
    throw std::invalid_argument(fmt::format("state norm {} differs from 1 by more than {}", std::sqrt(s), tol));
  return StateVector(q, std::move(amplitudes));
}

StateVector StateVector::normalized(std::vector<Complex> amplitudes) {
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("cannot normalize a zero or non-finite vector");
  const double inv = 1.0 / std::sqrt(s);
  for (auto& a : amplitudes) a *= inv;
  return from_amplitudes(std::move(amplitudes), 1e-9);
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

StateVector StateVector::tensor(const StateVector& other) const {
  check_width(num_qubits_ + other.num_qubits_);
  std::vector<Complex> out;
  out.reserve(dim() * other.dim());
  for (const auto& a : amps_)
    for (const auto& b : other.amps_) out.push_back(a * b);
  return StateVector(num_qubits_ + other.num_qubits_, std::move(out));
}

Complex inner(const StateVector& a, const StateVector& b) {
  if (a.num_qubits() != b.num_qubits())
    throw std::invalid_argument(fmt::format("width mismatch: {} vs {} qubits", a.num_qubits(), b.num_qubits()));
  double re = 0.0, im = 0.0;
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

double fidelity(const StateVector& a, const StateVector& b) {
  return std::clamp(std::norm(inner(a, b)), 0.0, 1.0);
}

double max_amplitude_error(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

StateVector basis_state(std::string_view bits) {
  return basis_state(static_cast<int>(bits.size()), parse_bitstring(bits));
}

StateVector basis_state(int num_qubits, std::uint64_t index) {
  check_width(num_qubits);
  std::vector<Complex> amps(std::size_t{1} << num_qubits);
  if (index >= amps.size()) throw std::out_of_range("basis index out of range");
  amps[index] = 1.0;
  return StateVector::from_amplitudes(std::move(amps));
}

StateVector ghz_state(int num_qubits) {
  check_width(num_qubits);
  std::vector<Complex> amps(std::size_t{1} << num_qubits);
  amps.front() = amps.back() = 1.0 / std::sqrt(2.0);
  return StateVector::from_amplitudes(std::move(amps));
}

StateVector haar_random_state(int num_qubits, Rng& rng) {
  check_width(num_qubits);
  std::vector<Complex> amps(std::size_t{1} << num_qubits);
  for (auto& a : amps) {
    const double re = rng.normal();
    const double im = rng.normal();
    a = {re, im};
  }
  return StateVector::normalized(std::move(amps));
}

StateVector haar_product_state(int num_qubits, Rng& rng) {
  check_width(num_qubits);
  std::vector<Complex> amps{1.0};
  for (int q = 0; q < num_qubits; ++q) {
    Complex a{rng.normal(), rng.normal()};
    Complex b{rng.normal(), rng.normal()};
    const double s = std::sqrt(std::norm(a) + std::norm(b));
    a /= s;
    b /= s;
    std::vector<Complex> next;
    next.reserve(amps.size() * 2);
    for (const auto& x : amps) {
      next.push_back(x * a);
      next.push_back(x * b);
    }
    amps = std::move(next);
  }
  return StateVector::normalized(std::move(amps));
}

}  // namespace mpe
