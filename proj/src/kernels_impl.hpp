#pragma once

#include <cstddef>
#include <cstdint>

namespace netform::kernels {

namespace scalar {
void logistic(const double* x, double* out, std::size_t n);
void tally_by_type(const std::uint8_t* row, const std::uint8_t* types,
                   std::size_t n, std::size_t n_types, std::int64_t* counts);
void bernoulli_row(const double* u, const double* p, std::uint8_t* out,
                   std::size_t n);
}  // namespace scalar

#ifdef NETFORM_HAVE_AVX2
namespace avx2 {
void logistic(const double* x, double* out, std::size_t n);
void tally_by_type(const std::uint8_t* row, const std::uint8_t* types,
                   std::size_t n, std::size_t n_types, std::int64_t* counts);
void bernoulli_row(const double* u, const double* p, std::uint8_t* out,
                   std::size_t n);
}  // namespace avx2
#endif

}  // namespace netform::kernels
