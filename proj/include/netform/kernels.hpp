#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and, on
// x86-64, an AVX2 variant. The variant is picked once at first use from the
// CPU features; NETFORM_KERNELS=scalar|avx2 overrides the choice.
//
// tally_by_type and bernoulli_row are exact in both variants. logistic agrees
// with the scalar reference to a few ulp.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace netform::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // out[k] = 1 / (1 + exp(-x[k]))
  void (*logistic)(const double* x, double* out, std::size_t n);
  // counts[t] = #{j : row[j] != 0 and types[j] == t} for t < n_types
  void (*tally_by_type)(const std::uint8_t* row, const std::uint8_t* types,
                        std::size_t n, std::size_t n_types, std::int64_t* counts);
  // out[k] = u[k] < p[k]
  void (*bernoulli_row)(const double* u, const double* p, std::uint8_t* out,
                        std::size_t n);
};

const KernelTable& scalar_table();
bool avx2_available();
// Throws std::runtime_error when the ISA is not compiled in or not supported.
const KernelTable& table(Isa isa);
const KernelTable& active();
std::string_view name(Isa isa);

void logistic(std::span<const double> x, std::span<double> out);
void tally_by_type(std::span<const std::uint8_t> row,
                   std::span<const std::uint8_t> types,
                   std::span<std::int64_t> counts);
void bernoulli_row(std::span<const double> u, std::span<const double> p,
                   std::span<std::uint8_t> out);

}  // namespace netform::kernels
