#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "netform/core.hpp"
#include "netform/kernels.hpp"

using namespace netform;

namespace {

std::vector<const kernels::KernelTable*> variants() {
  std::vector<const kernels::KernelTable*> out{&kernels::scalar_table()};
  if (kernels::avx2_available()) out.push_back(&kernels::table(kernels::Isa::avx2));
  return out;
}

}  // namespace

TEST_CASE("kernels: logistic variants agree with the scalar formula") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-60.0, 60.0);
  // Odd length exercises the tail loop.
  std::vector<double> x(1031), out(x.size());
  for (auto& v : x) v = unif(rng);
  x[0] = 0.0;
  x[1] = -745.0;
  x[2] = 745.0;
  for (const auto* k : variants()) {
    CAPTURE(kernels::name(k->isa));
    k->logistic(x.data(), out.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ref = logistic(x[i]);
      CHECK(std::abs(out[i] - ref) <= 1e-15 * ref);
    }
  }
}

TEST_CASE("kernels: tally_by_type is exact") {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 7u, 31u, 32u, 33u, 100u, 1000u}) {
    for (std::size_t types : {1u, 2u, 3u, 7u}) {
      std::vector<std::uint8_t> row(n), ty(n);
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = static_cast<std::uint8_t>(rng() & 1);
        ty[j] = static_cast<std::uint8_t>(rng() % types);
      }
      std::vector<std::int64_t> ref(types, 0);
      for (std::size_t j = 0; j < n; ++j) ref[ty[j]] += row[j];
      for (const auto* k : variants()) {
        std::vector<std::int64_t> got(types, -1);
        k->tally_by_type(row.data(), ty.data(), n, types, got.data());
        CHECK(got == ref);
      }
    }
  }
}

TEST_CASE("kernels: bernoulli_row matches the threshold rule bit for bit") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> u(517), p(517);
  for (std::size_t j = 0; j < u.size(); ++j) {
    u[j] = unif(rng);
    p[j] = (j % 5 == 0) ? u[j] : unif(rng);  // ties must give 0
  }
  std::vector<std::uint8_t> ref(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) ref[j] = u[j] < p[j];
  for (const auto* k : variants()) {
    std::vector<std::uint8_t> got(u.size(), 7);
    k->bernoulli_row(u.data(), p.data(), got.data(), u.size());
    CHECK(got == ref);
  }
}

TEST_CASE("kernels: dispatch reports a usable table") {
  const auto& active = kernels::active();
  CHECK((active.isa == kernels::Isa::scalar || kernels::avx2_available()));
  CHECK_FALSE(kernels::name(active.isa).empty());
}
