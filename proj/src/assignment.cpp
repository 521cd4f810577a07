#include "exalign/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace exalign {

namespace {

void validate_matrix(const ProfitMatrix& w) {
  if (w.rows() < 1 || w.cols() < 1) {
    throw std::invalid_argument("assignment: matrix must be at least 1x1");
  }
  if (!w.allFinite()) {
    throw std::invalid_argument("assignment: matrix contains non-finite entries");
  }
}

// Kuhn-Munkres with row/column potentials, minimization, requires
// rows <= cols. Returns row -> column. 1-based internally; p[j] holds the
// row matched to column j, column 0 is the virtual start of the
// augmenting path.
std::vector<Eigen::Index> km_minimize(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<Eigen::Index> p(m + 1, 0), way(m + 1, 0);

  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = p[j0];
      Eigen::Index j1 = 0;
      double delta = inf;
      for (Eigen::Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Eigen::Index> row_to_col(n, -1);
  for (Eigen::Index j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

Assignment from_row_map(const std::vector<Eigen::Index>& row_to_col, bool transposed) {
  Assignment a;
  a.pairs.reserve(row_to_col.size());
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(row_to_col.size()); ++r) {
    if (transposed) {
      a.pairs.push_back({row_to_col[r], r});
    } else {
      a.pairs.push_back({r, row_to_col[r]});
    }
  }
  if (transposed) {
    std::sort(a.pairs.begin(), a.pairs.end(),
              [](const AssignedPair& l, const AssignedPair& r) { return l.source < r.source; });
  }
  return a;
}

}  // namespace

Assignment solve_min_assignment(const ProfitMatrix& cost) {
  validate_matrix(cost);
  if (cost.rows() <= cost.cols()) {
    return from_row_map(km_minimize(cost), false);
  }
  return from_row_map(km_minimize(cost.transpose()), true);
}

Assignment solve_max_assignment(const ProfitMatrix& profit) {
  validate_matrix(profit);
  return solve_min_assignment(-profit);
}

Assignment brute_force_assignment(const ProfitMatrix& profit) {
  validate_matrix(profit);
  const bool transposed = profit.rows() > profit.cols();
  Eigen::MatrixXd w = profit;
  if (transposed) w = profit.transpose();
  const Eigen::Index n = w.rows();
  const Eigen::Index m = w.cols();

  if (n > 8) {
    throw std::invalid_argument("brute_force_assignment: min(M, N) must be <= 8, got " +
                                std::to_string(n));
  }
  double candidates = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) candidates *= static_cast<double>(m - k);
  if (candidates > 1e7) {
    throw std::invalid_argument("brute_force_assignment: enumeration would visit " +
                                std::to_string(candidates) + " assignments");
  }

  std::vector<Eigen::Index> current(n, -1), best(n, -1);
  std::vector<char> used(m, 0);
  double best_total = -std::numeric_limits<double>::infinity();

  auto recurse = [&](auto&& self, Eigen::Index row, double total) -> void {
    if (row == n) {
      if (total > best_total) {
        best_total = total;
        best = current;
      }
      return;
    }
    for (Eigen::Index col = 0; col < m; ++col) {
      if (used[col]) continue;
      used[col] = 1;
      current[row] = col;
      self(self, row + 1, total + w(row, col));
      used[col] = 0;
    }
  };
  recurse(recurse, 0, 0.0);

  return from_row_map(best, transposed);
}

double assignment_total(const ProfitMatrix& w, const Assignment& a) {
  double total = 0.0;
  for (const AssignedPair& p : a.pairs) {
    if (p.source < 0 || p.source >= w.rows() || p.target < 0 || p.target >= w.cols()) {
      throw std::out_of_range("assignment_total: pair (" + std::to_string(p.source) + ", " +
                              std::to_string(p.target) + ") outside " +
                              std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
    }
    total += w(p.source, p.target);
  }
  return total;
}

}  // namespace exalign
