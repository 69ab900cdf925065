#include "mpe/measurement.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

namespace mpe {
namespace {

struct SubsystemLayout {
  std::vector<int> measured_bits;    // bit positions of measured qubits, listed order
  std::vector<int> remaining_bits;   // bit positions of the complement, qubit order
};

SubsystemLayout layout_for(int n, std::span<const int> qubits) {
  if (qubits.empty()) throw std::invalid_argument("measured qubit set is empty");
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  SubsystemLayout l;
  for (int q : qubits) {
    if (q < 0 || q >= n) throw std::out_of_range(fmt::format("qubit {} outside register of {} qubits", q, n));
    if (used[static_cast<std::size_t>(q)]) throw std::invalid_argument(fmt::format("qubit {} listed twice", q));
    used[static_cast<std::size_t>(q)] = true;
    l.measured_bits.push_back(bit_position(n, q));
  }
  for (int q = 0; q < n; ++q)
    if (!used[static_cast<std::size_t>(q)]) l.remaining_bits.push_back(bit_position(n, q));
  return l;
}

std::uint64_t gather(std::uint64_t index, const std::vector<int>& bits) {
  std::uint64_t v = 0;
  for (int b : bits) v = (v << 1) | ((index >> b) & 1U);
  return v;
}

std::uint64_t scatter(std::uint64_t value, const std::vector<int>& bits) {
  std::uint64_t idx = 0;
  const std::size_t m = bits.size();
  for (std::size_t k = 0; k < m; ++k)
    if ((value >> (m - 1 - k)) & 1U) idx |= std::uint64_t{1} << bits[k];
  return idx;
}

std::size_t pick_outcome(const std::vector<double>& probs, double u) {
  double total = 0.0;
  for (double p : probs)
    if (p > kDegenerateBranch) total += p;
  if (!(total > 0.0)) throw std::runtime_error("all measurement outcomes are degenerate");
  const double target = u * total;
  double acc = 0.0;
  std::size_t last = probs.size();
  for (std::size_t z = 0; z < probs.size(); ++z) {
    if (!(probs[z] > kDegenerateBranch)) continue;
    last = z;
    acc += probs[z];
    if (target < acc) return z;
  }
  return last;
}

}  // namespace

WeightedEnsemble::WeightedEnsemble(std::vector<double> probs, std::vector<StateVector> states)
    : probs_(std::move(probs)), states_(std::move(states)) {
  if (probs_.size() != states_.size()) throw std::invalid_argument("probability and state counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0)) throw std::invalid_argument(fmt::format("negative probability at entry {}", i));
    if (states_[i].num_qubits() != states_.front().num_qubits())
      throw std::invalid_argument("ensemble states have different widths");
    s += probs_[i];
  }
  if (!states_.empty() && std::abs(s - 1.0) > 1e-9)
    throw std::invalid_argument(fmt::format("ensemble probabilities sum to {}, not 1", s));
}

WeightedEnsemble WeightedEnsemble::uniform(std::vector<StateVector> states) {
  const std::size_t n = states.size();
  std::vector<double> p(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  return WeightedEnsemble(std::move(p), std::move(states));
}

WeightedEnsemble merge_duplicates(const WeightedEnsemble& ensemble, double tol) {
  std::vector<double> probs;
  std::vector<StateVector> reps;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto& s = ensemble.state(i);
    bool merged = false;
    for (std::size_t r = 0; r < reps.size(); ++r)
      if (fidelity(reps[r], s) >= 1.0 - tol) {
        probs[r] += ensemble.prob(i);
        merged = true;
        break;
      }
    if (!merged) {
      reps.push_back(s);
      probs.push_back(ensemble.prob(i));
    }
  }
  return WeightedEnsemble(std::move(probs), std::move(reps));
}

std::vector<double> outcome_probabilities(const StateVector& state, std::span<const int> qubits) {
  const auto l = layout_for(state.num_qubits(), qubits);
  std::vector<double> p(std::size_t{1} << qubits.size(), 0.0);
  const auto amps = state.amplitudes();
  for (std::uint64_t i = 0; i < amps.size(); ++i) p[gather(i, l.measured_bits)] += std::norm(amps[i]);
  return p;
}

MeasurementResult measure_subsystem(const StateVector& state, std::span<const int> qubits, Rng& rng) {
  return measure_subsystem_with_uniform(state, qubits, rng.uniform());
}

MeasurementResult measure_subsystem_with_uniform(const StateVector& state, std::span<const int> qubits, double u) {
  const auto l = layout_for(state.num_qubits(), qubits);
  const auto probs = outcome_probabilities(state, qubits);
  const std::size_t z = pick_outcome(probs, u);
  const double p = probs[z];
  if (!(p > kDegenerateBranch)) throw std::runtime_error("sampled a degenerate measurement branch");

  const auto amps = state.amplitudes();
  std::vector<Complex> out(amps.size());
  const double inv = 1.0 / std::sqrt(p);
  for (std::uint64_t i = 0; i < amps.size(); ++i)
    if (gather(i, l.measured_bits) == z) out[i] = amps[i] * inv;
  return MeasurementResult{z, format_bitstring(z, static_cast<int>(qubits.size())), p,
                           StateVector::normalized(std::move(out))};
}

StateVector branch_state(const StateVector& state, std::span<const int> ancilla, std::uint64_t outcome,
                         double* probability) {
  const int n = state.num_qubits();
  const auto l = layout_for(n, ancilla);
  if (l.remaining_bits.empty()) throw std::invalid_argument("ancilla set covers the whole register");
  const std::uint64_t base = scatter(outcome, l.measured_bits);
  const std::size_t sub = std::size_t{1} << l.remaining_bits.size();
  std::vector<Complex> v(sub);
  double p = 0.0;
  for (std::uint64_t r = 0; r < sub; ++r) {
    v[r] = state[base | scatter(r, l.remaining_bits)];
    p += std::norm(v[r]);
  }
  if (probability) *probability = p;
  if (!(p > kDegenerateBranch)) throw std::runtime_error("requested branch is degenerate");
  return StateVector::normalized(std::move(v));
}

ProjectedEnsemble projected_ensemble(const StateVector& state, std::span<const int> ancilla) {
  const int n = state.num_qubits();
  if (static_cast<int>(ancilla.size()) >= n)
    throw std::invalid_argument("ancilla set must be a proper subset of the register");
  const auto probs = outcome_probabilities(state, ancilla);
  ProjectedEnsemble out;
  std::vector<double> p;
  std::vector<StateVector> states;
  for (std::uint64_t z = 0; z < probs.size(); ++z) {
    if (!(probs[z] > kDegenerateBranch)) continue;
    const StateVector raw = branch_state(state, ancilla, z);
    // Phase convention: first amplitude with |a| above a small floor made real positive.
    const auto a = raw.amplitudes();
    Complex phase{1.0, 0.0};
    double floor = 0.0;
    for (const auto& x : a) floor = std::max(floor, std::abs(x));
    floor *= 1e-8;
    for (const auto& x : a)
      if (std::abs(x) > floor) {
        phase = x / std::abs(x);
        break;
      }
    std::vector<Complex> fixed(a.begin(), a.end());
    for (auto& x : fixed) x *= std::conj(phase);
    out.outcomes.push_back(z);
    out.phases.push_back(phase);
    p.push_back(probs[z]);
    states.push_back(StateVector::normalized(std::move(fixed)));
  }
  // Renormalize over the retained branches.
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= total;
  out.ensemble = WeightedEnsemble(std::move(p), std::move(states));
  return out;
}

}  // namespace mpe
