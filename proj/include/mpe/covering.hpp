#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpe/rng.hpp"
#include "mpe/state.hpp"

namespace mpe {

/// Finite delta-net over a sample set, with Voronoi cell weights.
struct DeltaNet {
  double delta = 0.0;
  std::vector<StateVector> centers;
  std::vector<double> weights;           // q_j = (samples assigned to j) / (sample count)
  std::vector<std::size_t> assignments;  // nearest center of each input sample
  std::vector<std::size_t> center_sample_index;  // which sample each center came from
};

struct VoronoiCells {
  std::vector<std::size_t> assignments;
  std::vector<double> weights;
};

/// Nearest center in trace distance; ties go to the lowest center index.
VoronoiCells voronoi_assign(std::span<const StateVector> samples, std::span<const StateVector> centers);

/// Greedy net: scan the samples in a seeded shuffled order and promote a
/// sample to a center whenever it is farther than `delta` from every center
/// chosen so far. Requires a nonempty sample set and 0 < delta <= 1.
DeltaNet greedy_delta_net(std::span<const StateVector> samples, double delta, Rng& rng);

/// Smallest distance from each sample to the net, maximized over samples.
double net_coverage_radius(std::span<const StateVector> samples, std::span<const StateVector> centers);

struct CoveringBound {
  double lower = 0.0;  // delta^{-2(D-1)}
  double upper = 0.0;  // 5 D ln(D) delta^{-2(D-1)}
};

/// Bounds on the delta-covering number of pure states in C^D under the trace
/// distance. Requires D >= 2 and 0 < delta <= 1.
CoveringBound covering_bound(int dimension, double delta);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Fraction of Haar-random pure states in C^D lying strictly within trace
/// distance `delta` of a fixed reference state, with its binomial standard
/// error. Requires D >= 2 and n_samples >= 1000.
MonteCarloEstimate ball_volume_mc(int dimension, double delta, std::size_t n_samples, Rng& rng);

}  // namespace mpe
