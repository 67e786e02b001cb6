#include <cmath>
#include <limits>
#include <vector>

#include "idm/errors.hpp"
#include "idm/metrics.hpp"

namespace idm {

// Shortest augmenting path Hungarian method with row/column potentials,
// O(n^3). Row i is inserted in turn; a Dijkstra-like sweep over columns
// finds the cheapest augmenting path under reduced costs.
std::vector<int> solve_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != cost.rows()) throw UnsupportedError("assignment needs a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based; column 0 is a virtual start node.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> min_v(n + 1);
  std::vector<char> used(n + 1);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(min_v.begin(), min_v.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < min_v[j]) {
          min_v[j] = reduced;
          way[j] = j0;
        }
        if (min_v[j] < delta) {
          delta = min_v[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_v[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

double exact_w1_small(const PointsRef& a, const PointsRef& b) {
  if (a.rows() != b.rows()) throw UnsupportedError("exact W1 oracle needs equal-size point sets");
  if (a.rows() > 512) throw UnsupportedError("exact W1 oracle is limited to 512 points");
  if (a.cols() != b.cols()) throw ConfigurationError("point sets live in different dimensions");
  const Eigen::Index n = a.rows();
  if (n == 0) throw ConfigurationError("exact W1 oracle needs nonempty point sets");
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).norm();
  const std::vector<int> assignment = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, assignment[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(n);
}

}  // namespace idm
