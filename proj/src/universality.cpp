#include "mpe/universality.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/core.h>

#include "mpe/metrics.hpp"

namespace mpe {
namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_rational exact(double x) {
  int exp = 0;
  const double mant = std::frexp(x, &exp);  // x = mant * 2^exp, mant in [0.5, 1)
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  cpp_rational r{cpp_int(scaled)};
  const int shift = exp - 53;
  if (shift >= 0)
    r *= cpp_rational(cpp_int(1) << shift);
  else
    r /= cpp_rational(cpp_int(1) << -shift);
  return r;
}

int ceil_log2(std::size_t n) { return n <= 1 ? 0 : std::bit_width(n - 1); }

}  // namespace

int IqpConstruction::phase_parity(std::uint64_t j, std::uint64_t k) const {
  return std::popcount(static_cast<std::uint64_t>(mapping_v[k]) & j) & 1;
}

std::vector<double> IqpConstruction::probabilities() const {
  std::vector<double> p(counts.size());
  const double denom = std::ldexp(1.0, n_m);
  for (std::size_t b = 0; b < counts.size(); ++b) p[b] = static_cast<double>(counts[b]) / denom;
  return p;
}

double IqpConstruction::tv_bound() const { return std::ldexp(1.0, -(n_m - n_a + 1)); }

int precision_qubits(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument(fmt::format("epsilon must lie in (0, 1], got {}", epsilon));
  int t = 0;
  while (std::ldexp(epsilon, t) < 1.0) ++t;
  return t;
}

namespace {

// Shared tail: exact targets in, counts by floor then remainder in index order.
IqpConstruction build_from_exact(std::vector<cpp_rational> exact_q, std::vector<double> q_double, double epsilon,
                                 int min_hidden) {
  IqpConstruction c;
  c.epsilon = epsilon;
  c.n_a = std::max(1, ceil_log2(exact_q.size()));
  c.n_m = std::max(c.n_a + precision_qubits(epsilon), min_hidden);
  check_width(c.n_a + c.n_m);

  c.target_q = std::move(q_double);
  c.target_q.resize(c.ancilla_dim(), 0.0);
  exact_q.resize(c.ancilla_dim(), cpp_rational(0));

  const std::uint64_t total = c.hidden_dim();
  const cpp_rational scale{cpp_int(total)};
  c.counts.resize(c.ancilla_dim());
  std::uint64_t s = 0;
  for (std::size_t b = 0; b < c.counts.size(); ++b) {
    const cpp_rational x = exact_q[b] * scale;
    const cpp_int fl = numerator(x) / denominator(x);  // floor, x >= 0
    c.counts[b] = static_cast<std::uint64_t>(fl);
    s += c.counts[b];
  }
  if (s > total) throw std::logic_error("floor counts exceed the hidden register size");
  const std::uint64_t remainder = total - s;
  if (remainder > c.ancilla_dim()) throw std::logic_error("remainder exceeds the number of outcomes");
  for (std::uint64_t b = 0; b < remainder; ++b) ++c.counts[b];

  c.mapping_v.resize(total);
  c.block_start.resize(c.counts.size());
  std::uint64_t k = 0;
  for (std::size_t b = 0; b < c.counts.size(); ++b) {
    c.block_start[b] = k;
    for (std::uint64_t r = 0; r < c.counts[b]; ++r) c.mapping_v[k++] = static_cast<std::uint32_t>(b);
  }
  return c;
}

}  // namespace

IqpConstruction build_iqp_construction(std::span<const double> q, double epsilon, int min_hidden) {
  if (q.empty()) throw std::invalid_argument("target distribution is empty");
  for (double x : q)
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("target distribution has negative entries");
  const double sum = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(fmt::format("target distribution sums to {}, not 1", sum));
  std::vector<cpp_rational> ex;
  for (double x : q) ex.push_back(exact(x));
  return build_from_exact(std::move(ex), {q.begin(), q.end()}, epsilon, min_hidden);
}

IqpConstruction build_iqp_construction(std::span<const Fraction> q, double epsilon, int min_hidden) {
  if (q.empty()) throw std::invalid_argument("target distribution is empty");
  cpp_rational sum = 0;
  std::vector<cpp_rational> ex;
  std::vector<double> dbl;
  for (const auto& f : q) {
    if (f.den == 0) throw std::invalid_argument("fraction with zero denominator");
    ex.emplace_back(cpp_int(f.num), cpp_int(f.den));
    sum += ex.back();
    dbl.push_back(static_cast<double>(f.num) / static_cast<double>(f.den));
  }
  if (sum != 1) throw std::invalid_argument(fmt::format("target fractions sum to {}, not 1", sum.str()));
  auto c = build_from_exact(std::move(ex), std::move(dbl), epsilon, min_hidden);
  c.target_exact.assign(q.begin(), q.end());
  c.target_exact.resize(c.ancilla_dim(), Fraction{0, 1});
  return c;
}

Fraction parse_fraction(std::string_view text) {
  auto to_u64 = [&](std::string_view part) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string_view::npos)
      throw std::invalid_argument(fmt::format("'{}' is not a fraction", text));
    return std::stoull(std::string(part));
  };
  const auto slash = text.find('/');
  if (slash != std::string_view::npos) return {to_u64(text.substr(0, slash)), to_u64(text.substr(slash + 1))};
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) return {to_u64(text), 1};
  const auto whole = text.substr(0, dot);
  const auto frac = text.substr(dot + 1);
  if (frac.size() > 18) throw std::invalid_argument(fmt::format("'{}' has too many decimals", text));
  std::uint64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::uint64_t num = (whole.empty() ? 0 : to_u64(whole)) * den + (frac.empty() ? 0 : to_u64(frac));
  const auto g = std::gcd(num, den);
  return {num / g, den / g};
}

ExactTvCheck verify_tv_exact(const IqpConstruction& c) {
  ExactTvCheck out;
  const cpp_int total = cpp_int(1) << c.n_m;
  cpp_int sum = 0;
  for (auto x : c.counts) sum += x;
  out.counts_conserved = (sum == total);

  out.per_outcome_within_one = true;
  cpp_rational tv = 0;
  for (std::size_t b = 0; b < c.counts.size(); ++b) {
    const cpp_rational qb = c.target_exact.empty()
                                ? exact(c.target_q[b])
                                : cpp_rational(cpp_int(c.target_exact[b].num), cpp_int(c.target_exact[b].den));
    const cpp_rational scaled = qb * cpp_rational(total);
    cpp_rational diff = scaled - cpp_rational(cpp_int(c.counts[b]));
    if (diff < 0) diff = -diff;
    if (diff > 1) out.per_outcome_within_one = false;
    tv += diff;
  }
  tv /= cpp_rational(total) * 2;
  const cpp_rational bound(cpp_int(1), cpp_int(1) << (c.n_m - c.n_a + 1));
  out.tv_within_bound = tv <= bound;
  out.bound_within_half_eps = bound <= exact(c.epsilon) / 2;
  out.tv_exact = tv.str();
  out.bound_exact = bound.str();
  return out;
}

Circuit iqp_circuit(const IqpConstruction& c) {
  const int n = c.n_a + c.n_m;
  Circuit circ(n);
  for (int q = 0; q < n; ++q) circ.add(gate::Hadamard{q});
  gate::DiagonalPhase phases;
  phases.phases.assign(std::size_t{1} << n, 0.0);
  for (std::uint64_t j = 0; j < c.ancilla_dim(); ++j)
    for (std::uint64_t k = 0; k < c.hidden_dim(); ++k)
      if (c.phase_parity(j, k)) phases.phases[(j << c.n_m) | k] = std::numbers::pi;
  circ.add(std::move(phases));
  for (int q = 0; q < c.n_a; ++q) circ.add(gate::Hadamard{q});
  return circ;
}

StateVector logical_model_state(const IqpConstruction& c) {
  const int n = c.n_a + c.n_m;
  check_width(n);
  std::vector<Complex> amps(std::size_t{1} << n);
  const double a = 1.0 / std::sqrt(static_cast<double>(c.hidden_dim()));
  for (std::uint64_t k = 0; k < c.hidden_dim(); ++k) amps[(static_cast<std::uint64_t>(c.mapping_v[k]) << c.n_m) | k] = a;
  return StateVector::from_amplitudes(std::move(amps));
}

StateVector logical_model_state_via_iqp(const IqpConstruction& c) {
  return run_circuit(StateVector(c.n_a + c.n_m), iqp_circuit(c));
}

CMatrix state_transport_unitary(std::span<const Complex> src, std::span<const Complex> dst) {
  if (src.size() != dst.size()) throw std::invalid_argument("source and destination dimensions differ");
  const CMatrix a = unitary_completion(src);
  const CMatrix b = unitary_completion(dst);
  return multiply(b, adjoint(a));
}

MpeGenerator assemble_generator(const DeltaNet& net, double epsilon, int n_d, std::optional<int> n_m) {
  if (net.centers.empty()) throw std::invalid_argument("net has no centers");
  if (net.weights.size() != net.centers.size()) throw std::invalid_argument("net weights and centers differ in length");
  for (const auto& s : net.centers)
    if (s.num_qubits() != n_d) throw std::invalid_argument("net centers do not have n_d qubits");

  const int n_a = std::max(1, ceil_log2(net.centers.size()));
  const int required = std::max(n_a + precision_qubits(epsilon), n_d);
  if (n_m && *n_m < n_d) throw std::invalid_argument(fmt::format("n_d = {} exceeds n_m = {}", n_d, *n_m));
  if (n_m && *n_m < required)
    throw std::invalid_argument(fmt::format("n_m = {} is below the required {} hidden qubits", *n_m, required));

  MpeGenerator g;
  g.iqp = build_iqp_construction(net.weights, epsilon, n_m.value_or(required));
  g.n_d = n_d;
  g.centers = net.centers;
  const int n_total = g.iqp.n_a + g.iqp.n_m;
  for (int q = 0; q < g.iqp.n_a; ++q) g.ancilla_qubits.push_back(q);
  for (int q = g.iqp.n_a; q < n_total; ++q) g.hidden_qubits.push_back(q);
  g.data_qubits.assign(g.hidden_qubits.begin(), g.hidden_qubits.begin() + n_d);

  const auto p = g.iqp.probabilities();
  g.branch_probabilities.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(net.centers.size()));

  std::vector<Complex> amps;
  {
    const StateVector loaded = logical_model_state_via_iqp(g.iqp);
    amps.assign(loaded.amplitudes().begin(), loaded.amplitudes().end());
  }
  const std::uint64_t hidden_dim = g.iqp.hidden_dim();
  const int rest = g.iqp.n_m - n_d;
  for (std::uint64_t b = 0; b < g.iqp.ancilla_dim(); ++b) {
    const std::uint64_t cb = g.iqp.counts[b];
    if (cb == 0) continue;
    if (b >= net.centers.size()) throw std::logic_error("padded outcome received a nonzero count");
    std::vector<Complex> src(hidden_dim);
    const double amp = 1.0 / std::sqrt(static_cast<double>(cb));
    for (std::uint64_t k = g.iqp.block_start[b]; k < g.iqp.block_start[b] + cb; ++k) src[k] = amp;
    std::vector<Complex> dst(hidden_dim);
    const auto center = net.centers[b].amplitudes();
    for (std::uint64_t d = 0; d < center.size(); ++d) dst[d << rest] = center[d];

    gate::ControlledPrep cu{g.ancilla_qubits, format_bitstring(b, g.iqp.n_a), g.hidden_qubits,
                            state_transport_unitary(src, dst)};
    validate_gate(cu, n_total);
    detail::apply_inplace(amps, n_total, cu);
    g.controlled_unitaries.push_back(std::move(cu));
  }
  g.generator_state = StateVector::from_amplitudes(std::move(amps));
  return g;
}

StateVector generator_branch(const MpeGenerator& gen, std::uint64_t b) {
  std::vector<int> fixed = gen.ancilla_qubits;
  fixed.insert(fixed.end(), gen.hidden_qubits.begin() + gen.n_d, gen.hidden_qubits.end());
  const int rest = gen.iqp.n_m - gen.n_d;
  return branch_state(gen.generator_state, fixed, b << rest);
}

GeneratorCheck check_generator(const MpeGenerator& gen) {
  GeneratorCheck out;
  for (std::uint64_t b = 0; b < gen.iqp.ancilla_dim(); ++b) {
    if (gen.iqp.counts[b] == 0) continue;
    const double pb = gen.branch_probabilities[b];
    double kept = 0.0;
    const StateVector data = [&] {
      std::vector<int> fixed = gen.ancilla_qubits;
      fixed.insert(fixed.end(), gen.hidden_qubits.begin() + gen.n_d, gen.hidden_qubits.end());
      return branch_state(gen.generator_state, fixed, b << (gen.iqp.n_m - gen.n_d), &kept);
    }();
    out.max_leak = std::max(out.max_leak, std::abs(pb - kept));
    out.max_infidelity = std::max(out.max_infidelity, 1.0 - fidelity(data, gen.centers[b]));
  }
  return out;
}

GeneratedSamples sample_generated(const MpeGenerator& gen, std::size_t count, Rng& rng) {
  const auto probs = outcome_probabilities(gen.generator_state, gen.ancilla_qubits);
  std::vector<std::optional<StateVector>> cache(probs.size());
  GeneratedSamples out;
  std::vector<StateVector> states;
  states.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Inverse CDF over the Born distribution of the ancilla register.
    const double u = rng.uniform();
    double acc = 0.0;
    std::uint64_t b = 0, last = 0;
    bool found = false;
    for (std::uint64_t z = 0; z < probs.size(); ++z) {
      if (!(probs[z] > kDegenerateBranch)) continue;
      last = z;
      acc += probs[z];
      if (u < acc) {
        b = z;
        found = true;
        break;
      }
    }
    if (!found) b = last;
    if (!cache[b]) cache[b] = generator_branch(gen, b);
    out.outcomes.push_back(b);
    states.push_back(*cache[b]);
  }
  out.ensemble = WeightedEnsemble::uniform(std::move(states));
  return out;
}

double certify_epsilon(std::span<const StateVector> target_samples, const MpeGenerator& gen, std::size_t n_draws,
                       Rng& rng) {
  if (target_samples.empty() || n_draws == 0) throw std::invalid_argument("certificate needs samples and draws");
  const auto target = merge_duplicates(
      WeightedEnsemble::uniform(std::vector<StateVector>(target_samples.begin(), target_samples.end())));
  const auto drawn = merge_duplicates(sample_generated(gen, n_draws, rng).ensemble);
  return wasserstein1(target, drawn, GroundCost::trace_distance).value;
}

CertificateReport certify_pipeline(std::span<const StateVector> target_samples, double delta, double epsilon,
                                   std::size_t n_draws, std::uint64_t seed) {
  Rng net_rng(derive_seed(seed, {1}));
  const DeltaNet net = greedy_delta_net(target_samples, delta, net_rng);
  const MpeGenerator gen = assemble_generator(net, epsilon, target_samples.front().num_qubits());
  Rng draw_rng(derive_seed(seed, {2}));

  CertificateReport r;
  r.delta_net = delta;
  r.epsilon = epsilon;
  r.n_a = gen.iqp.n_a;
  r.n_m = gen.iqp.n_m;
  r.tv_bound = gen.iqp.tv_bound();
  r.tv_actual = total_variation(gen.iqp.probabilities(), gen.iqp.target_q);
  r.w1_certificate = certify_epsilon(target_samples, gen, n_draws, draw_rng);
  r.n_draws = n_draws;
  r.seed = seed;
  return r;
}

}  // namespace mpe
