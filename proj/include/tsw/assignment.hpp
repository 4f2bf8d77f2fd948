#pragma once

#include <vector>

#include "tsw/types.hpp"

namespace tsw {

// Exact linear assignment (Jonker-Volgenant style shortest augmenting paths,
// dense O(n^3)). Fills row_to_col with the optimal permutation and returns
// the total cost.
double solve_assignment(const Matrix& cost, std::vector<Index>& row_to_col);

}  // namespace tsw
