#include "mpe/covering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "mpe/metrics.hpp"

namespace mpe {

VoronoiCells voronoi_assign(std::span<const StateVector> samples, std::span<const StateVector> centers) {
  if (centers.empty()) throw std::invalid_argument("Voronoi assignment needs at least one center");
  VoronoiCells cells;
  cells.assignments.resize(samples.size());
  cells.weights.assign(centers.size(), 0.0);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    std::size_t best = 0;
    double best_d = trace_distance_pure(samples[s], centers[0]);
    for (std::size_t c = 1; c < centers.size(); ++c) {
      const double d = trace_distance_pure(samples[s], centers[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    cells.assignments[s] = best;
    cells.weights[best] += 1.0;
  }
  if (!samples.empty())
    for (auto& w : cells.weights) w /= static_cast<double>(samples.size());
  return cells;
}

DeltaNet greedy_delta_net(std::span<const StateVector> samples, double delta, Rng& rng) {
  if (samples.empty()) throw std::invalid_argument("delta-net needs at least one sample");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument(fmt::format("delta must lie in (0, 1], got {}", delta));

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates with the project RNG so the order is portable.
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  DeltaNet net;
  net.delta = delta;
  for (std::size_t idx : order) {
    const auto& s = samples[idx];
    const bool covered = std::any_of(net.centers.begin(), net.centers.end(),
                                     [&](const StateVector& c) { return trace_distance_pure(s, c) <= delta; });
    if (!covered) {
      net.centers.push_back(s);
      net.center_sample_index.push_back(idx);
    }
  }
  auto cells = voronoi_assign(samples, net.centers);
  net.assignments = std::move(cells.assignments);
  net.weights = std::move(cells.weights);
  return net;
}

double net_coverage_radius(std::span<const StateVector> samples, std::span<const StateVector> centers) {
  double worst = 0.0;
  for (const auto& s : samples) {
    double best = INFINITY;
    for (const auto& c : centers) best = std::min(best, trace_distance_pure(s, c));
    worst = std::max(worst, best);
  }
  return worst;
}

CoveringBound covering_bound(int dimension, double delta) {
  if (dimension < 2) throw std::invalid_argument(fmt::format("dimension must be >= 2, got {}", dimension));
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument(fmt::format("delta must lie in (0, 1], got {}", delta));
  const double d = dimension;
  const double lower = std::pow(1.0 / delta, 2.0 * (d - 1.0));
  return {lower, 5.0 * d * std::log(d) * lower};
}

MonteCarloEstimate ball_volume_mc(int dimension, double delta, std::size_t n_samples, Rng& rng) {
  if (dimension < 2) throw std::invalid_argument(fmt::format("dimension must be >= 2, got {}", dimension));
  if (n_samples < 1000) throw std::invalid_argument("ball volume estimate needs at least 1000 samples");
  // d(psi, e0) < delta  <=>  1 - |psi_0|^2 < delta^2.
  const double limit = delta * delta;
  std::size_t inside = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    double total = 0.0, first = 0.0;
    for (int k = 0; k < dimension; ++k) {
      const double re = rng.normal();
      const double im = rng.normal();
      const double w = re * re + im * im;
      if (k == 0) first = w;
      total += w;
    }
    if (1.0 - first / total < limit) ++inside;
  }
  const double p = static_cast<double>(inside) / static_cast<double>(n_samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples)), n_samples};
}

}  // namespace mpe
