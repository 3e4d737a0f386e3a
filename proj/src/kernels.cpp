#include "netform/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace netform::kernels {
namespace {

const KernelTable kScalar{Isa::scalar, &scalar::logistic, &scalar::tally_by_type,
                          &scalar::bernoulli_row};
#ifdef NETFORM_HAVE_AVX2
const KernelTable kAvx2{Isa::avx2, &avx2::logistic, &avx2::tally_by_type,
                        &avx2::bernoulli_row};
#endif

const KernelTable& select() {
  const char* env = std::getenv("NETFORM_KERNELS");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return kScalar;
  if (choice == "avx2") return table(Isa::avx2);
  return avx2_available() ? table(Isa::avx2) : kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

bool avx2_available() {
#if defined(NETFORM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table(Isa isa) {
  if (isa == Isa::scalar) return kScalar;
#ifdef NETFORM_HAVE_AVX2
  if (avx2_available()) return kAvx2;
#endif
  throw std::runtime_error("AVX2 kernels are not available on this build or CPU");
}

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

std::string_view name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void logistic(std::span<const double> x, std::span<double> out) {
  active().logistic(x.data(), out.data(), x.size());
}

void tally_by_type(std::span<const std::uint8_t> row,
                   std::span<const std::uint8_t> types,
                   std::span<std::int64_t> counts) {
  active().tally_by_type(row.data(), types.data(), row.size(), counts.size(),
                         counts.data());
}

void bernoulli_row(std::span<const double> u, std::span<const double> p,
                   std::span<std::uint8_t> out) {
  active().bernoulli_row(u.data(), p.data(), out.data(), u.size());
}

}  // namespace netform::kernels
