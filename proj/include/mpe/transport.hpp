#pragma once

#include <span>
#include <vector>

#include "mpe/linalg.hpp"

namespace mpe {

/// Optimal coupling of a balanced transportation problem together with the
/// dual potentials (u_i + v_j <= C_ij, equality on basic cells).
struct TransportPlan {
  RMatrix plan;
  double cost = 0.0;
  std::vector<double> row_duals;
  std::vector<double> col_duals;
  int pivots = 0;
};

enum class TransportMethod {
  automatic,   // assignment when both marginals are the same uniform vector, simplex otherwise
  simplex,
  assignment,  // square problems with identical uniform marginals only
};

/// Exact transportation simplex: northwest-corner start, MODI (u-v) pricing
/// with Dantzig's rule, spanning-tree basis.
///
/// Degeneracy is broken by Orden's perturbation: every supply is raised by
/// 1e-12 and the last demand by m * 1e-12. The optimal basis is then re-solved
/// against the unperturbed marginals, so the returned plan meets the original
/// constraints. Ties for the entering and leaving cell go to the lowest (i, j).
///
/// Throws std::invalid_argument for negative or unbalanced marginals (sums
/// differing by more than 1e-9) and std::runtime_error if the pivot cap is hit.
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand, const RMatrix& cost,
                             TransportMethod method = TransportMethod::automatic);

/// Uniform square case as a min-cost perfect matching (shortest augmenting
/// paths with potentials, O(n^3)). Plan entries are 1/n on the matching.
TransportPlan solve_assignment(const RMatrix& cost);

/// Largest violation of primal feasibility, dual feasibility and
/// complementary slackness; 0 for an exactly optimal pair.
double optimality_gap(const TransportPlan& t, std::span<const double> supply, std::span<const double> demand,
                      const RMatrix& cost);

}  // namespace mpe
