#include "tsw/assignment.hpp"

#include <limits>

namespace tsw {

double solve_assignment(const Matrix& cost, std::vector<Index>& row_to_col) {
  const Index n = cost.rows();
  require(cost.cols() == n, "solve_assignment: matrix must be square");
  require(n >= 1, "solve_assignment: empty problem");
  const double inf = std::numeric_limits<double>::infinity();

  // Columns are 1-indexed internally; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<Index> p(n + 1, -1), way(n + 1, 0);
  std::vector<bool> used(n + 1, false);

  for (Index i = 0; i < n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j - 1) - u[i0 + 1] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j] + 1] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != -1);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  row_to_col.assign(n, -1);
  double total = 0.0;
  for (Index j = 1; j <= n; ++j) {
    row_to_col[p[j]] = j - 1;
    total += cost(p[j], j - 1);
  }
  return total;
}

}  // namespace tsw
