#include "viewsyn/parallel.hpp"

#include <omp.h>

namespace viewsyn {

namespace {
int g_default_threads = -1;
}

void set_num_threads(int n) {
  if (g_default_threads < 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : g_default_threads);
}

int num_threads() { return omp_get_max_threads(); }

double ordered_sum(const std::vector<double>& partials) {
  double total = 0.0;
  for (double p : partials) total += p;
  return total;
}

}  // namespace viewsyn
