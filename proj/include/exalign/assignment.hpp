#pragma once

#include <Eigen/Core>
#include <vector>

namespace exalign {

/// M x N profit matrix over source positions (rows) and target positions
/// (columns). Entries must be finite; both dimensions must be >= 1.
using ProfitMatrix = Eigen::MatrixXd;

/// One aligned (source, target) position pair. Indices are 0-based in the
/// API; command-line and report output use 1-based positions.
struct AssignedPair {
  Eigen::Index source = 0;
  Eigen::Index target = 0;

  friend bool operator==(const AssignedPair&, const AssignedPair&) = default;
};

/// Injective pairing of size min(M, N): no source index and no target index
/// appears twice. Pairs are sorted by source index.
struct Assignment {
  std::vector<AssignedPair> pairs;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Exact solver for the rectangular assignment problem, maximization.
/// Kuhn-Munkres with potentials, O(n^2 m); maximization runs the
/// minimization core on the negated matrix. When M > N the matrix is
/// transposed internally and the result mapped back, so callers never
/// pre-swap. Deterministic: ties are resolved by the algorithm's fixed
/// scan order.
///
/// Throws std::invalid_argument on empty matrices or non-finite entries.
Assignment solve_max_assignment(const ProfitMatrix& profit);

/// Minimization core behind solve_max_assignment, exposed so the negation
/// duality (max over w == -min over -w) can be exercised directly.
Assignment solve_min_assignment(const ProfitMatrix& cost);

/// Exhaustive enumeration oracle. Walks every injective assignment of size
/// min(M, N) and returns one achieving the maximum total (first found in
/// scan order). Rejects inputs whose enumeration count exceeds the bound
/// (min(M, N) <= 8 and at most 1e7 candidates).
Assignment brute_force_assignment(const ProfitMatrix& profit);

/// Sum of w[g_i, h_i] over the assignment's pairs. Throws on out-of-range
/// indices.
double assignment_total(const ProfitMatrix& w, const Assignment& a);

}  // namespace exalign
