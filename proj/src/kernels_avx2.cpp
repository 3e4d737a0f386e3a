// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>

#include "kernels_impl.hpp"

namespace netform::kernels::avx2 {
namespace {

// exp(x) for x <= 0, Cephes rational approximation on [-ln2/2, ln2/2].
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.0);
  x = _mm256_max_pd(x, lo);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

  __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, c1, x);
  r = _mm256_fnmadd_pd(k, c2, r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009e0));

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // 2^k: put k + 1023 in the low mantissa bits, then shift into the exponent.
  const __m256d bias = _mm256_set1_pd(4503599627370496.0 + 1023.0);
  const __m256i bits = _mm256_slli_epi64(_mm256_castpd_si256(_mm256_add_pd(k, bias)), 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
}

}  // namespace

void logistic(const double* x, double* out, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d floor = _mm256_set1_pd(-708.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d v = _mm256_loadu_pd(x + k);
    const __m256d neg_abs = _mm256_or_pd(v, sign);
    const __m256d e = exp_nonpositive(neg_abs);
    const __m256d r = _mm256_div_pd(one, _mm256_add_pd(one, e));
    const __m256d nonneg = _mm256_cmp_pd(v, zero, _CMP_GE_OQ);
    _mm256_storeu_pd(out + k, _mm256_blendv_pd(_mm256_mul_pd(e, r), r, nonneg));
    // Subnormal results: the 2^k scaling above cannot reach them.
    if (_mm256_movemask_pd(_mm256_cmp_pd(v, floor, _CMP_LT_OQ)) != 0) {
      scalar::logistic(x + k, out + k, 4);
    }
  }
  if (k < n) {
    alignas(32) double in[4] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double res[4];
    std::copy(x + k, x + n, in);
    logistic(in, res, 4);
    std::copy(res, res + (n - k), out + k);
  }
}

void tally_by_type(const std::uint8_t* row, const std::uint8_t* types,
                   std::size_t n, std::size_t n_types, std::int64_t* counts) {
  const __m256i zero = _mm256_setzero_si256();
  for (std::size_t t = 0; t < n_types; ++t) {
    const __m256i target = _mm256_set1_epi8(static_cast<char>(t));
    __m256i acc = zero;
    std::size_t j = 0;
    for (; j + 32 <= n; j += 32) {
      const __m256i ty = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(types + j));
      const __m256i g = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + j));
      const __m256i hit = _mm256_and_si256(_mm256_cmpeq_epi8(ty, target),
                                           _mm256_min_epu8(g, _mm256_set1_epi8(1)));
      acc = _mm256_add_epi64(acc, _mm256_sad_epu8(hit, zero));
    }
    alignas(32) std::int64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    std::int64_t c = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; j < n; ++j) c += (row[j] != 0 && types[j] == t) ? 1 : 0;
    counts[t] = c;
  }
}

void bernoulli_row(const double* u, const double* p, std::uint8_t* out,
                   std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d lt = _mm256_cmp_pd(_mm256_loadu_pd(u + k), _mm256_loadu_pd(p + k), _CMP_LT_OQ);
    const int mask = _mm256_movemask_pd(lt);
    out[k] = mask & 1;
    out[k + 1] = (mask >> 1) & 1;
    out[k + 2] = (mask >> 2) & 1;
    out[k + 3] = (mask >> 3) & 1;
  }
  for (; k < n; ++k) out[k] = u[k] < p[k] ? 1 : 0;
}

}  // namespace netform::kernels::avx2
