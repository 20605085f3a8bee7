#pragma once

#include <cstddef>
#include <vector>

namespace viewsyn {

/// Sets the OpenMP team size used by all kernels. n <= 0 restores the default.
void set_num_threads(int n);
int num_threads();

/// Sums per-row partials in row order. Kernels reduce into one slot per
/// image row and finish here, so results do not depend on the team size.
double ordered_sum(const std::vector<double>& partials);

}  // namespace viewsyn
