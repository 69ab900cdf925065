#include "mpe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

namespace mpe {

double trace_distance_pure(const StateVector& a, const StateVector& b) {
  return std::sqrt(std::max(0.0, 1.0 - fidelity(a, b)));
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument(fmt::format("length mismatch: {} vs {}", p.size(), q.size()));
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw std::invalid_argument(fmt::format("probability vectors must sum to 1 (got {} and {})", sp, sq));
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

RMatrix kernel_matrix(std::span<const StateVector> xs, std::span<const StateVector> ys) {
  RMatrix k(xs.size(), ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) k(i, j) = fidelity(xs[i], ys[j]);
  return k;
}

namespace {

double weighted_mean_kernel(const WeightedEnsemble& x, const WeightedEnsemble& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) s += x.prob(i) * y.prob(j) * fidelity(x.state(i), y.state(j));
  return s;
}

}  // namespace

double mmd(const WeightedEnsemble& x, const WeightedEnsemble& y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("MMD needs nonempty ensembles");
  if (x.num_qubits() != y.num_qubits()) throw std::invalid_argument("ensembles have different widths");
  return weighted_mean_kernel(x, x) + weighted_mean_kernel(y, y) - 2.0 * weighted_mean_kernel(x, y);
}

W1Result wasserstein1(const WeightedEnsemble& x, const WeightedEnsemble& y, GroundCost ground) {
  if (x.empty() || y.empty()) throw std::invalid_argument("Wasserstein distance needs nonempty ensembles");
  if (x.num_qubits() != y.num_qubits()) throw std::invalid_argument("ensembles have different widths");
  RMatrix c = kernel_matrix(x.states(), y.states());
  for (auto& e : c.data()) {
    const double infid = std::max(0.0, 1.0 - e);
    e = ground == GroundCost::infidelity ? infid : std::sqrt(infid);
  }
  W1Result r;
  r.transport = solve_transport(x.probs(), y.probs(), c);
  r.value = r.transport.cost;
  return r;
}

std::vector<double> sym_eigenvalues(const RMatrix& k) {
  const std::size_t n = k.rows();
  if (k.cols() != n) throw std::invalid_argument("eigenvalue input must be square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(k(i, j) - k(j, i)) > 1e-10) throw std::invalid_argument("eigenvalue input is not symmetric");

  RMatrix a = k;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (k(i, j) + k(j, i));

  double frob = 0.0;
  for (double x : a.data()) frob += x * x;
  const double threshold = 1e-12 * std::max(1.0, std::sqrt(frob));
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  while (off_norm() >= threshold) {
    if (++sweep > kMaxSweeps) throw std::runtime_error("Jacobi eigensolver did not converge in 100 sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rutishauser's stable rotation, applied to the symmetric pair of
        // rows/columns only.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        double* rp = &a(p, 0);
        double* rq = &a(q, 0);
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = rp[r], arq = rq[r];
          rp[r] = a(r, p) = c * arp - s * arq;
          rq[r] = a(r, q) = s * arp + c * arq;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

double vendi_score(std::span<const StateVector> xs) {
  if (xs.empty()) throw std::invalid_argument("Vendi score needs at least one state");
  const double n = static_cast<double>(xs.size());
  RMatrix k(xs.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    k(i, i) = 1.0 / n;
    for (std::size_t j = i + 1; j < xs.size(); ++j) k(i, j) = k(j, i) = fidelity(xs[i], xs[j]) / n;
  }
  double entropy = 0.0;
  for (double l : sym_eigenvalues(k))
    if (l > 0.0) entropy -= l * std::log(l);
  return std::exp(entropy);
}

double vendi_score(const WeightedEnsemble& x) { return vendi_score(x.states()); }

}  // namespace mpe
