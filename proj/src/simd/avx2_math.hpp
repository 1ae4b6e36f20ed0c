#pragma once

#include <cmath>
#include <immintrin.h>

// 4-lane double precision exp/log for the AVX2 kernels. Cody-Waite reduction
// with split ln2, degree-13 Taylor for exp, atanh-form series for log.
// Accuracy is a few ulp; the SIMD/scalar equivalence tests pin the bound.

namespace pgd::simd::avx2m {

inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d hi_cut = _mm256_set1_pd(709.782712893384);
  const __m256d lo_cut = _mm256_set1_pd(-745.51332191019412);

  const __m256d over = _mm256_cmp_pd(x, hi_cut, _CMP_GT_OQ);
  const __m256d under = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
  // clamp so the reduction below stays in range; masked lanes fixed up at the end
  __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_cut), hi_cut);

  const __m256d k = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, xc);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  // 1 + r + r^2/2! + ... + r^13/13!
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);           // 1/13!
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

  // scale by 2^k in two halves so subnormal results survive
  const __m128i ki = _mm256_cvtpd_epi32(k);
  const __m128i k1 = _mm_srai_epi32(ki, 1);
  const __m128i k2 = _mm_sub_epi32(ki, k1);
  const __m128i bias = _mm_set1_epi32(1023);
  const __m256i e1 = _mm256_slli_epi64(_mm256_cvtepi32_epi64(_mm_add_epi32(k1, bias)), 52);
  const __m256i e2 = _mm256_slli_epi64(_mm256_cvtepi32_epi64(_mm_add_epi32(k2, bias)), 52);
  __m256d out = _mm256_mul_pd(_mm256_mul_pd(p, _mm256_castsi256_pd(e1)),
                              _mm256_castsi256_pd(e2));

  out = _mm256_blendv_pd(out, _mm256_set1_pd(HUGE_VAL), over);
  out = _mm256_blendv_pd(out, _mm256_setzero_pd(), under);
  return out;
}

// log of strictly positive, finite inputs; other lanes must be masked by the caller.
inline __m256d log_pd(__m256d x) {
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  const __m256d sqrt2 = _mm256_set1_pd(1.41421356237309504880);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

  // subnormal inputs carry no usable exponent bits: scale them up by 2^54
  // and fold the shift into e below
  const __m256d tiny = _mm256_cmp_pd(x, _mm256_set1_pd(2.2250738585072014e-308), _CMP_LT_OQ);
  x = _mm256_blendv_pd(x, _mm256_mul_pd(x, _mm256_set1_pd(0x1.0p54)), tiny);
  const __m256d e_shift = _mm256_and_pd(tiny, _mm256_set1_pd(54.0));

  const __m256i bits = _mm256_castpd_si256(x);
  // biased exponent of each lane -> double
  const __m256i exp64 = _mm256_srli_epi64(bits, 52);
  const __m256i pack_idx = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
  const __m128i exp32 = _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(exp64, pack_idx));
  __m256d e = _mm256_sub_pd(_mm256_cvtepi32_pd(_mm_sub_epi32(exp32, _mm_set1_epi32(1023))),
                            e_shift);

  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  const __m256d too_big = _mm256_cmp_pd(m, sqrt2, _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), too_big);
  e = _mm256_add_pd(e, _mm256_and_pd(too_big, _mm256_set1_pd(1.0)));

  // log m = 2 atanh(s), s = (m-1)/(m+1), |s| <= (sqrt2-1)/(sqrt2+1)
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d t = _mm256_mul_pd(s, s);

  __m256d q = _mm256_set1_pd(1.0 / 19.0);
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 17.0));
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 15.0));
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 13.0));
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 11.0));
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 9.0));
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 7.0));
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 5.0));
  q = _mm256_fmadd_pd(q, t, _mm256_set1_pd(1.0 / 3.0));

  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d logm = _mm256_fmadd_pd(_mm256_mul_pd(two_s, t), q, two_s);

  return _mm256_fmadd_pd(e, ln2_hi, _mm256_fmadd_pd(e, ln2_lo, logm));
}

} // namespace pgd::simd::avx2m
