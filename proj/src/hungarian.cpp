#include "gtrack/hungarian.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gtrack {

namespace {

// Shortest-augmenting-path assignment with dual potentials, for n <= m.
// Returns row -> col (0-indexed), every row matched.
std::vector<int> solve_wide(const std::vector<double>& a, int n, int m) {
  const double inf = std::numeric_limits<double>::infinity();
  // 1-indexed arrays; p[j] = row matched to column j (0 = none).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

AssignmentResult solve_assignment(const std::vector<double>& cost, int rows,
                                  int cols) {
  if (rows < 0 || cols < 0) {
    throw ContractError("solve_assignment: negative dimensions");
  }
  if (cost.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeError("solve_assignment: cost has " +
                     std::to_string(cost.size()) + " entries, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (double c : cost) {
    if (!std::isfinite(c)) {
      throw ContractError("solve_assignment: non-finite cost entry");
    }
  }

  AssignmentResult res;
  res.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return res;

  if (rows <= cols) {
    res.row_to_col = solve_wide(cost, rows, cols);
  } else {
    std::vector<double> t(static_cast<std::size_t>(cols) * rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        t[static_cast<std::size_t>(j) * rows + i] =
            cost[static_cast<std::size_t>(i) * cols + j];
      }
    }
    const std::vector<int> col_to_row = solve_wide(t, cols, rows);
    for (int j = 0; j < cols; ++j) res.row_to_col[col_to_row[j]] = j;
  }

  res.cost = 0.0;
  for (int i = 0; i < rows; ++i) {
    if (res.row_to_col[i] >= 0) {
      res.cost += cost[static_cast<std::size_t>(i) * cols + res.row_to_col[i]];
    }
  }
  return res;
}

}  // namespace gtrack
