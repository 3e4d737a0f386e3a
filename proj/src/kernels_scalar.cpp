#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>

namespace netform::kernels::scalar {

void logistic(const double* x, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double e = std::exp(-std::abs(x[k]));
    const double r = 1.0 / (1.0 + e);
    out[k] = x[k] >= 0.0 ? r : e * r;
  }
}

void tally_by_type(const std::uint8_t* row, const std::uint8_t* types,
                   std::size_t n, std::size_t n_types, std::int64_t* counts) {
  std::fill(counts, counts + n_types, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (row[j] != 0 && types[j] < n_types) ++counts[types[j]];
  }
}

void bernoulli_row(const double* u, const double* p, std::uint8_t* out,
                   std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = u[k] < p[k] ? 1 : 0;
}

}  // namespace netform::kernels::scalar
