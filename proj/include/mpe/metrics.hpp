#pragma once

#include <span>
#include <vector>

#include "mpe/linalg.hpp"
#include "mpe/measurement.hpp"
#include "mpe/state.hpp"
#include "mpe/transport.hpp"

namespace mpe {

/// Ground cost for the 1-Wasserstein distance between pure states.
enum class GroundCost {
  infidelity,      // 1 - |<a|b>|^2, used for training and evaluation
  trace_distance,  // sqrt(1 - |<a|b>|^2)
};

/// sqrt(1 - |<a|b>|^2): trace distance between pure states.
double trace_distance_pure(const StateVector& a, const StateVector& b);

/// Half the L1 distance between two probability vectors. Both must sum to 1
/// within 1e-9 and have the same length.
double total_variation(std::span<const double> p, std::span<const double> q);

/// K_ij = |<x_i|y_j>|^2.
RMatrix kernel_matrix(std::span<const StateVector> xs, std::span<const StateVector> ys);

/// kbar(X,X) + kbar(Y,Y) - 2 kbar(X,Y), each kbar weighted by the ensemble
/// probabilities.
double mmd(const WeightedEnsemble& x, const WeightedEnsemble& y);

struct W1Result {
  double value = 0.0;
  TransportPlan transport;
};

/// Exact optimal transport between the ensembles, marginals taken from their
/// probabilities.
W1Result wasserstein1(const WeightedEnsemble& x, const WeightedEnsemble& y,
                      GroundCost ground = GroundCost::infidelity);

/// Eigenvalues of a real symmetric matrix, descending, by cyclic Jacobi
/// rotations. Converges when the off-diagonal Frobenius norm drops below 1e-12
/// (relative to the matrix norm when that exceeds 1). Throws
/// std::invalid_argument if the input is not symmetric within 1e-10 and
/// std::runtime_error after 100 sweeps.
std::vector<double> sym_eigenvalues(const RMatrix& k);

/// exp(-sum lambda log lambda) over eigenvalues of K/N, K_ij = |<x_i|x_j>|^2,
/// with uniform 1/N weighting and 0 log 0 = 0.
double vendi_score(std::span<const StateVector> xs);
/// Ensemble overload; probabilities are ignored.
double vendi_score(const WeightedEnsemble& x);

}  // namespace mpe
