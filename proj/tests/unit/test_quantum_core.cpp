#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "mpe/gates.hpp"
#include "mpe/measurement.hpp"
#include "mpe/state.hpp"
#include "oracles.hpp"

using namespace mpe;
namespace o = oracle;

namespace {

const double kS = 1.0 / std::sqrt(2.0);

std::vector<Complex> amps(const StateVector& s) { return {s.amplitudes().begin(), s.amplitudes().end()}; }

// Full-register matrix of a ControlledPrep, built entry by entry.
o::Mat controlled_prep_matrix(const gate::ControlledPrep& g, int n) {
  const std::size_t dim = std::size_t{1} << n;
  o::Mat m(dim, std::vector<Complex>(dim, 0.0));
  auto bit = [&](std::size_t i, int q) { return (i >> (n - 1 - q)) & 1; };
  for (std::size_t col = 0; col < dim; ++col) {
    bool match = true;
    for (std::size_t c = 0; c < g.control_qubits.size(); ++c)
      if (bit(col, g.control_qubits[c]) != static_cast<std::size_t>(g.pattern[c] - '0')) match = false;
    if (!match) {
      m[col][col] = 1.0;
      continue;
    }
    std::size_t sub_in = 0;
    for (int t : g.target_qubits) sub_in = (sub_in << 1) | bit(col, t);
    const std::size_t k = g.target_qubits.size();
    for (std::size_t sub_out = 0; sub_out < (std::size_t{1} << k); ++sub_out) {
      std::size_t row = col;
      for (std::size_t t = 0; t < k; ++t) {
        const int pos = n - 1 - g.target_qubits[t];
        const std::size_t b = (sub_out >> (k - 1 - t)) & 1;
        row = (row & ~(std::size_t{1} << pos)) | (b << pos);
      }
      m[row][col] = g.unitary(sub_out, sub_in);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("state basics") {
  CHECK(basis_state("01") == basis_state(2, 1));
  CHECK(format_bitstring(parse_bitstring("0110"), 4) == "0110");
  CHECK(bit_position(3, 0) == 2);

  const auto g = ghz_state(3);
  CHECK(std::abs(g[0] - Complex(kS)) < 1e-15);
  CHECK(std::abs(g[7] - Complex(kS)) < 1e-15);
  for (int i = 1; i < 7; ++i) CHECK(std::abs(g[i]) == 0.0);

  CHECK_THROWS(StateVector::from_amplitudes({1.0, 1.0}));
  CHECK_THROWS(StateVector::from_amplitudes({1.0, 0.0, 0.0}));
  CHECK_THROWS(StateVector::normalized({0.0, 0.0}));
  CHECK_THROWS_AS(check_width(0), std::invalid_argument);
  CHECK_THROWS_AS(check_width(kHardMaxQubits + 1), std::length_error);
}

TEST_CASE("width cap from the environment") {
  ::setenv("MPE_MAX_QUBITS", "5", 1);
  CHECK(max_qubits() == 5);
  CHECK_THROWS_AS(StateVector(6), std::length_error);
  ::setenv("MPE_MAX_QUBITS", "99", 1);
  CHECK(max_qubits() == kHardMaxQubits);
  ::unsetenv("MPE_MAX_QUBITS");
  CHECK(max_qubits() == kHardMaxQubits);
}

TEST_CASE("fidelity") {
  const auto z = basis_state("0"), one = basis_state("1");
  const auto plus = apply_gate(z, gate::Hadamard{0});
  CHECK(fidelity(z, z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity(z, one) == 0.0);
  CHECK(fidelity(z, plus) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(fidelity(z, basis_state("00")), std::invalid_argument);
}

TEST_CASE("gate examples") {
  const auto plus = apply_gate(basis_state("0"), gate::Hadamard{0});
  CHECK(std::abs(plus[0] - Complex(kS)) < 1e-15);
  CHECK(std::abs(plus[1] - Complex(kS)) < 1e-15);

  const auto rz = apply_gate(basis_state("0"), gate::RZ{0, 1.234});
  CHECK(std::norm(rz[0]) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(rz[1]) == 0.0);

  const auto flipped = apply_gate(basis_state("11"), gate::CZ{0, 1});
  CHECK(std::abs(flipped[3] + 1.0) < 1e-15);

  CHECK_THROWS(apply_gate(basis_state("00"), gate::Hadamard{2}));
  CHECK_THROWS(apply_gate(basis_state("00"), gate::CZ{1, 1}));
  gate::ControlledPrep bad{{0}, "1", {1}, CMatrix(2, 2, 1.0)};
  CHECK_THROWS(apply_gate(basis_state("00"), bad));
}

TEST_CASE("circuits match the dense matrix oracle") {
  const auto in = basis_state("00");
  CHECK(run_circuit(in, Circuit(2)) == in);

  Circuit hh(1);
  hh.add(gate::Hadamard{0}).add(gate::Hadamard{0});
  CHECK(max_amplitude_error(run_circuit(basis_state("0"), hh).amplitudes(), basis_state("0").amplitudes()) < 1e-12);

  Circuit c(2);
  c.add(gate::Hadamard{0}).add(gate::CZ{0, 1}).add(gate::Hadamard{1});
  const auto m = o::matmul(o::embed1(o::h(), 1, 2), o::matmul(o::cz(0, 1, 2), o::embed1(o::h(), 0, 2)));
  const std::vector<Complex> e0{1.0, 0.0, 0.0, 0.0};
  CHECK(o::max_diff(amps(run_circuit(in, c)), o::apply(m, e0)) < 1e-12);

  // Random circuits over every rotation, on random inputs.
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3;
    Circuit rc(n);
    o::Mat full = o::eye(8);
    for (int g = 0; g < 12; ++g) {
      const int q = static_cast<int>(rng.below(n));
      const double t = (rng.uniform() - 0.5) * 6.0;
      o::Mat step;
      switch (rng.below(5)) {
        case 0: rc.add(gate::RX{q, t}); step = o::embed1(o::rx(t), q, n); break;
        case 1: rc.add(gate::RY{q, t}); step = o::embed1(o::ry(t), q, n); break;
        case 2: rc.add(gate::RZ{q, t}); step = o::embed1(o::rz(t), q, n); break;
        case 3: rc.add(gate::Hadamard{q}); step = o::embed1(o::h(), q, n); break;
        default: {
          const int q2 = (q + 1) % n;
          rc.add(gate::RZZ{q, q2, t});
          // exp(-i t ZZ/2) is diagonal with sign (-1)^(b_q xor b_q2).
          step = o::eye(8);
          for (std::size_t i = 0; i < 8; ++i) {
            const bool odd = ((i >> (n - 1 - q)) & 1) != ((i >> (n - 1 - q2)) & 1);
            step[i][i] = std::exp(Complex(0, odd ? t / 2 : -t / 2));
          }
        }
      }
      full = o::matmul(step, full);
    }
    const auto psi = haar_random_state(n, rng);
    CHECK(o::max_diff(amps(run_circuit(psi, rc)), o::apply(full, psi.amplitudes())) < 1e-12);
  }
}

TEST_CASE("diagonal phase and controlled prep against dense oracles") {
  Rng rng(5);
  const auto psi = haar_random_state(3, rng);

  gate::DiagonalPhase d;
  for (int i = 0; i < 8; ++i) d.phases.push_back(0.3 * i);
  const auto out = apply_gate(psi, d);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(out[i] - psi[i] * std::exp(Complex(0, 0.3 * i))) < 1e-14);

  const std::vector<Complex> v{0.5, Complex(0, 0.5), -0.5, Complex(0.5, 0)};
  gate::ControlledPrep cp{{2}, "1", {0, 1}, unitary_completion(v)};
  const auto got = apply_gate(psi, cp);
  CHECK(o::max_diff(amps(got), o::apply(controlled_prep_matrix(cp, 3), psi.amplitudes())) < 1e-12);
}

TEST_CASE("every gate preserves the norm") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto psi = haar_random_state(3, rng);
    const double t = rng.uniform() * 6.0;
    std::vector<GateOp> gates{gate::Hadamard{1}, gate::RX{0, t}, gate::RY{2, t}, gate::RZ{1, t},
                              gate::CZ{0, 2},    gate::RZZ{1, 2, t}};
    gate::DiagonalPhase d;
    for (int i = 0; i < 8; ++i) d.phases.push_back(rng.uniform() * 6.0);
    gates.push_back(d);
    const std::vector<Complex> v{kS, Complex(0, kS)};
    gates.push_back(gate::ControlledPrep{{0, 1}, "10", {2}, unitary_completion(v)});
    for (const auto& g : gates) CHECK(std::abs(apply_gate(psi, g).norm() - 1.0) < 1e-10);
  }
}

TEST_CASE("measurement examples") {
  const auto bell = StateVector::from_amplitudes({kS, 0.0, 0.0, kS});
  const std::vector<int> q0{0};
  const auto p = outcome_probabilities(bell, q0);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  const auto m0 = measure_subsystem_with_uniform(bell, q0, 0.25);
  CHECK(m0.bits == "0");
  CHECK(m0.collapsed == basis_state("00"));
  const auto m1 = measure_subsystem_with_uniform(bell, q0, 0.75);
  CHECK(m1.bits == "1");
  CHECK(fidelity(m1.collapsed, basis_state("11")) == doctest::Approx(1.0));

  Rng rng(1);
  const auto psi = haar_random_state(2, rng);
  const auto prod = basis_state("0").tensor(psi);
  const auto m = measure_subsystem(prod, q0, rng);
  CHECK(m.outcome == 0);
  CHECK(m.probability == doctest::Approx(1.0));
  CHECK(o::max_diff(amps(m.collapsed), amps(prod)) < 1e-12);
}

TEST_CASE("GHZ measurement frequencies are binomial") {
  const auto ghz = ghz_state(3);
  const std::vector<int> qs{0, 1};
  Rng rng(77);
  const int n = 100000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const auto m = measure_subsystem(ghz, qs, rng);
    REQUIRE((m.bits == "00" || m.bits == "11"));
    zeros += m.bits == "00";
  }
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::abs(static_cast<double>(zeros) / n - 0.5) < 3 * sigma);
}

TEST_CASE("measurement is deterministic per seed and probabilities are complete") {
  Rng a(9), b(9), src(3);
  const auto psi = haar_random_state(4, src);
  const std::vector<int> qs{1, 3};
  for (int i = 0; i < 50; ++i) {
    const auto ma = measure_subsystem(psi, qs, a), mb = measure_subsystem(psi, qs, b);
    CHECK(ma.outcome == mb.outcome);
    CHECK(ma.collapsed == mb.collapsed);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = haar_random_state(5, src);
    const std::vector<int> anc{static_cast<int>(src.below(4)), 4};
    double total = 0.0;
    for (double x : outcome_probabilities(s, anc)) total += x;
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}

TEST_CASE("projected ensemble examples") {
  // (|0>|phi0> + |1>|phi1>)/sqrt2 with phi0 = |+>, phi1 = |->.
  const auto s = StateVector::from_amplitudes({0.5, 0.5, 0.5, -0.5});
  const std::vector<int> a{0};
  const auto pe = projected_ensemble(s, a);
  REQUIRE(pe.ensemble.size() == 2);
  CHECK(pe.ensemble.prob(0) == doctest::Approx(0.5));
  CHECK(fidelity(pe.ensemble.state(0), StateVector::from_amplitudes({kS, kS})) == doctest::Approx(1.0));
  CHECK(fidelity(pe.ensemble.state(1), StateVector::from_amplitudes({kS, -kS})) == doctest::Approx(1.0));

  Rng rng(4);
  const auto psi = haar_random_state(2, rng);
  const auto single = projected_ensemble(basis_state("0").tensor(psi), a);
  REQUIRE(single.ensemble.size() == 1);
  CHECK(single.ensemble.prob(0) == doctest::Approx(1.0));
  CHECK(fidelity(single.ensemble.state(0), psi) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<int> all{0, 1};
  CHECK_THROWS(projected_ensemble(basis_state("00"), all));
}

TEST_CASE("projected ensemble equals the partial trace") {
  Rng rng(21);
  for (int n = 4; n <= 6; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto psi = haar_random_state(n, rng);
      const std::vector<int> anc{0, 1};
      const auto pe = projected_ensemble(psi, anc);
      const auto rho = o::partial_trace_front(psi.amplitudes(), n, 2);
      o::Mat sum(rho.size(), std::vector<Complex>(rho.size(), 0.0));
      for (std::size_t j = 0; j < pe.ensemble.size(); ++j) {
        const auto& phi = pe.ensemble.state(j);
        for (std::size_t r = 0; r < rho.size(); ++r)
          for (std::size_t c = 0; c < rho.size(); ++c)
            sum[r][c] += pe.ensemble.prob(j) * phi[r] * std::conj(phi[c]);
      }
      CHECK(o::max_diff(sum, rho) < 1e-10);

      // Reassemble sqrt(p) e^{i phase} |z>|phi> and compare amplitudes.
      std::vector<Complex> rebuilt(psi.dim(), 0.0);
      const std::size_t db = std::size_t{1} << (n - 2);
      for (std::size_t j = 0; j < pe.ensemble.size(); ++j) {
        const auto& phi = pe.ensemble.state(j);
        const Complex w = std::sqrt(pe.ensemble.prob(j)) * pe.phases[j];
        for (std::size_t k = 0; k < db; ++k) rebuilt[pe.outcomes[j] * db + k] = w * phi[k];
        // phase convention: first non-negligible amplitude real and positive
        for (std::size_t k = 0; k < db; ++k) {
          if (std::abs(phi[k]) > 1e-12) {
            CHECK(std::abs(phi[k].imag()) < 1e-12);
            CHECK(phi[k].real() > 0.0);
            break;
          }
        }
      }
      CHECK(o::max_diff(rebuilt, amps(psi)) < 1e-9);
    }
  }
}

TEST_CASE("Haar moments") {
  Rng rng(123);
  const int n = 100000;
  const auto ref = basis_state("00");
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = fidelity(haar_random_state(2, rng), ref);
    sum += f;
    sq += f * f;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  CHECK(std::abs(mean - 0.25) < 3 * std::sqrt(var / n));

  // Single-qubit product factors: E|<0|psi>|^2 = 1/2 per qubit.
  double prod = 0.0;
  for (int i = 0; i < 20000; ++i) prod += fidelity(haar_product_state(2, rng), ref);
  CHECK(prod / 20000 == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("weighted ensembles") {
  CHECK_THROWS(WeightedEnsemble({0.5, 0.6}, {basis_state("0"), basis_state("1")}));
  CHECK_THROWS(WeightedEnsemble({1.5, -0.5}, {basis_state("0"), basis_state("1")}));
  CHECK_THROWS(WeightedEnsemble({0.5, 0.5}, {basis_state("0"), basis_state("11")}));
  const auto merged =
      merge_duplicates(WeightedEnsemble({0.25, 0.5, 0.25}, {basis_state("0"), basis_state("1"), basis_state("0")}));
  REQUIRE(merged.size() == 2);
  CHECK(merged.prob(0) == doctest::Approx(0.5));
}
