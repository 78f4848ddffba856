// AVX2/FMA variants of the likelihood kernels. This translation unit is built
// with -mavx2 -mfma and is only entered after a CPUID check.

#include "kernels_internal.hpp"

#if defined(POLYFA_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cmath>

namespace polyfa::kernels {
namespace {

inline __m256d pow2_int(__m256d n) {
  // n integral in [-1022, 1023]: build the biased exponent directly
  const __m256d shifted = _mm256_add_pd(_mm256_add_pd(n, _mm256_set1_pd(1023.0)),
                                        _mm256_set1_pd(0x1p52));
  return _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_castpd_si256(shifted), 52));
}

/// exp with ~1 ulp accuracy over the whole double range, inf/0 at overflow.
inline __m256d exp_pd(__m256d x) {
  const __m256d over = _mm256_cmp_pd(x, _mm256_set1_pd(709.78), _CMP_GT_OQ);
  const __m256d under = _mm256_cmp_pd(x, _mm256_set1_pd(-745.13), _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-745.13)), _mm256_set1_pd(709.78));

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  // Taylor series to r^13; |r| <= ln(2)/2
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // two-step scaling keeps each factor a normal power of two
  const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
  const __m256d n2 = _mm256_sub_pd(n, n1);
  __m256d result = _mm256_mul_pd(_mm256_mul_pd(p, pow2_int(n1)), pow2_int(n2));
  result = _mm256_blendv_pd(result, _mm256_set1_pd(INFINITY), over);
  result = _mm256_blendv_pd(result, _mm256_setzero_pd(), under);
  return result;
}

/// Natural log for positive normal doubles.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  const __m256i ebits = _mm256_srli_epi64(bits, 52);
  const __m256d magic = _mm256_set1_pd(0x1p52);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(ebits, _mm256_castpd_si256(magic))), magic);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(M_SQRT2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_blendv_pd(e, _mm256_add_pd(e, _mm256_set1_pd(1.0)), big);

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s2 = _mm256_mul_pd(s, s);
  // 2 atanh(s) = 2 (s + s^3/3 + ... + s^21/21); |s| <= 0.1716
  __m256d poly = _mm256_set1_pd(1.0 / 21.0);
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 19.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 17.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 15.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 13.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 11.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 9.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 7.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 5.0));
  poly = _mm256_fmadd_pd(poly, s2, _mm256_set1_pd(1.0 / 3.0));
  poly = _mm256_fmadd_pd(poly, s2, one);
  const __m256d log_m = _mm256_mul_pd(_mm256_add_pd(s, s), poly);

  const __m256d low = _mm256_fmadd_pd(e, _mm256_set1_pd(1.90821492927058770002e-10), log_m);
  return _mm256_fmadd_pd(e, _mm256_set1_pd(6.93147180369123816490e-01), low);
}

inline void reflect_pd(__m256d& lo, __m256d& hi) {
  const __m256d upper_tail = _mm256_cmp_pd(lo, _mm256_setzero_pd(), _CMP_GT_OQ);
  const __m256d neg_hi = _mm256_sub_pd(_mm256_setzero_pd(), hi);
  const __m256d neg_lo = _mm256_sub_pd(_mm256_setzero_pd(), lo);
  lo = _mm256_blendv_pd(lo, neg_hi, upper_tail);
  hi = _mm256_blendv_pd(hi, neg_lo, upper_tail);
}

void linear_predictor_avx2(const double* beta, std::size_t q, const double* factors,
                           std::size_t n, double* eta) {
  const std::size_t vec_end = n - n % 4;
  if (q == 0) {
    for (std::size_t i = 0; i < n; ++i) eta[i] = 0.0;
    return;
  }
  {
    const __m256d b = _mm256_set1_pd(beta[0]);
    for (std::size_t i = 0; i < vec_end; i += 4)
      _mm256_storeu_pd(eta + i, _mm256_mul_pd(b, _mm256_loadu_pd(factors + i)));
    for (std::size_t i = vec_end; i < n; ++i) eta[i] = beta[0] * factors[i];
  }
  for (std::size_t l = 1; l < q; ++l) {
    const __m256d b = _mm256_set1_pd(beta[l]);
    const double* f = factors + l * n;
    for (std::size_t i = 0; i < vec_end; i += 4)
      _mm256_storeu_pd(eta + i, _mm256_fmadd_pd(b, _mm256_loadu_pd(f + i),
                                                _mm256_loadu_pd(eta + i)));
    for (std::size_t i = vec_end; i < n; ++i) eta[i] += beta[l] * f[i];
  }
}

void ordinal_logprob_avx2(LinkKind link, const double* lower, const double* upper,
                          const double* eta, double inv_sigma, std::size_t n,
                          double* out) {
  const std::size_t vec_end = n - n % 4;
  const __m256d s = _mm256_set1_pd(inv_sigma);
  const __m256d floor_v = _mm256_set1_pd(kProbFloor);
  const __m256d one = _mm256_set1_pd(1.0);
  for (std::size_t i = 0; i < vec_end; i += 4) {
    const __m256d e = _mm256_loadu_pd(eta + i);
    __m256d lo = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(lower + i), e), s);
    __m256d hi = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(upper + i), e), s);
    reflect_pd(lo, hi);
    __m256d prob;
    if (link == LinkKind::probit) {
      // erfc has no vector form here; evaluate per lane
      alignas(32) double l4[4];
      alignas(32) double h4[4];
      const __m256d c = _mm256_set1_pd(-kInvSqrt2);
      _mm256_store_pd(l4, _mm256_mul_pd(lo, c));
      _mm256_store_pd(h4, _mm256_mul_pd(hi, c));
      for (int k = 0; k < 4; ++k) {
        l4[k] = std::erfc(l4[k]);
        h4[k] = std::erfc(h4[k]);
      }
      prob = _mm256_mul_pd(_mm256_set1_pd(0.5),
                           _mm256_sub_pd(_mm256_load_pd(h4), _mm256_load_pd(l4)));
    } else {
      const __m256d zero = _mm256_setzero_pd();
      const __m256d fh = _mm256_div_pd(one, _mm256_add_pd(one, exp_pd(_mm256_sub_pd(zero, hi))));
      const __m256d fl = _mm256_div_pd(one, _mm256_add_pd(one, exp_pd(_mm256_sub_pd(zero, lo))));
      prob = _mm256_sub_pd(fh, fl);
    }
    _mm256_storeu_pd(out + i, log_pd(_mm256_max_pd(prob, floor_v)));
  }
  for (std::size_t i = vec_end; i < n; ++i)
    out[i] = detail::ordinal_cell(link, lower[i], upper[i], eta[i], inv_sigma);
}

void nominal_logprob_avx2(const double* scores, std::size_t categories, const int* y,
                          std::size_t n, double* out) {
  const std::size_t m = categories - 1;
  const std::size_t vec_end = n - n % 4;
  const __m256d zero = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vec_end; i += 4) {
    __m256d top = zero;
    for (std::size_t k = 0; k < m; ++k)
      top = _mm256_max_pd(top, _mm256_loadu_pd(scores + k * n + i));
    __m256d sum = exp_pd(_mm256_sub_pd(zero, top));
    __m256d picked = zero;
    const __m256i yi = _mm256_cvtepi32_epi64(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(y + i)));
    for (std::size_t k = 0; k < m; ++k) {
      const __m256d sk = _mm256_loadu_pd(scores + k * n + i);
      sum = _mm256_add_pd(sum, exp_pd(_mm256_sub_pd(sk, top)));
      const __m256d hit = _mm256_castsi256_pd(
          _mm256_cmpeq_epi64(yi, _mm256_set1_epi64x(static_cast<long long>(k + 2))));
      picked = _mm256_blendv_pd(picked, sk, hit);
    }
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_sub_pd(picked, top), log_pd(sum)));
  }
  for (std::size_t i = vec_end; i < n; ++i)
    out[i] = detail::nominal_cell(scores, n, m, y[i], i);
}

double sum_avx2(const double* x, std::size_t n) {
  const std::size_t block_end = n - n % 16;
  __m256d a0 = _mm256_setzero_pd(), a1 = a0, a2 = a0, a3 = a0;
  for (std::size_t i = 0; i < block_end; i += 16) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    a2 = _mm256_add_pd(a2, _mm256_loadu_pd(x + i + 8));
    a3 = _mm256_add_pd(a3, _mm256_loadu_pd(x + i + 12));
  }
  const __m256d acc = _mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (std::size_t i = block_end; i < n; ++i) s += x[i];
  return s;
}

}  // namespace

const KernelTable kAvx2Table{
    linear_predictor_avx2,
    ordinal_logprob_avx2,
    nominal_logprob_avx2,
    sum_avx2,
};

}  // namespace polyfa::kernels

#endif
