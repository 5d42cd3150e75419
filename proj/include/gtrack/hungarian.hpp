#pragma once

#include <vector>

#include "gtrack/common.hpp"

namespace gtrack {

/// Result of a min-cost assignment. row_to_col[i] is the column matched to
/// row i, or -1 when rows outnumber columns and row i is left unmatched.
/// cost is the sum of the selected cost entries (exact re-summation, not the
/// solver's internal accumulator).
struct AssignmentResult {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Min-cost bipartite assignment (Jonker-Volgenant style shortest augmenting
/// paths with potentials, O(n^3)). cost is row-major with `cols` entries per
/// row; every entry must be finite. When rows <= cols each row is matched;
/// when rows > cols exactly `cols` rows are matched (solved on the transpose).
/// Ties are broken deterministically by scan order (lower index wins).
AssignmentResult solve_assignment(const std::vector<double>& cost, int rows,
                                  int cols);

}  // namespace gtrack
