#include <cmath>
#include <cstddef>
#include <immintrin.h>

#include "pgd/simd/kernels.hpp"
#include "avx2_math.hpp"

// AVX2 variants of the inner-loop kernels. Tails of length n % 4 fall back
// to the same per-element logic as the scalar reference.

namespace pgd::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
const __m256d kSignMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x8000000000000000LL));

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double max_abs_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_max_pd(acc, _mm256_and_pd(_mm256_loadu_pd(x + i), kAbsMask));
  }
  double m = hmax(acc);
  for (; i < n; ++i) {
    const double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

// |v|^e for non-negative lanes; zero lanes produce zero (e > 0 assumed here;
// the e == 0 case is handled by the scalar wrappers before dispatch).
inline __m256d pow_abs_pd(__m256d av, double e) {
  const __m256d zero_mask = _mm256_cmp_pd(av, _mm256_setzero_pd(), _CMP_EQ_OQ);
  const __m256d safe = _mm256_blendv_pd(av, _mm256_set1_pd(1.0), zero_mask);
  const __m256d r = avx2m::exp_pd(_mm256_mul_pd(_mm256_set1_pd(e), avx2m::log_pd(safe)));
  return _mm256_andnot_pd(zero_mask, r);
}

inline double pow_abs_tail(double a, double e) {
  if (a == 0.0) return e == 0.0 ? 1.0 : 0.0;
  if (e == 1.0) return a;
  if (e == 2.0) return a * a;
  if (e == 0.5) return std::sqrt(a);
  return std::exp(e * std::log(a));
}

double pow_accum_avx2(const double* x, std::size_t n, double scale, double e) {
  const __m256d vs = _mm256_set1_pd(scale);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  if (e == 2.0) {
    for (; i + 4 <= n; i += 4) {
      const __m256d a = _mm256_mul_pd(_mm256_loadu_pd(x + i), vs);
      acc = _mm256_fmadd_pd(a, a, acc);
    }
  } else if (e == 1.0) {
    for (; i + 4 <= n; i += 4) {
      acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_mul_pd(_mm256_loadu_pd(x + i), vs), kAbsMask));
    }
  } else if (e == 0.5) {
    for (; i + 4 <= n; i += 4) {
      const __m256d a = _mm256_and_pd(_mm256_mul_pd(_mm256_loadu_pd(x + i), vs), kAbsMask);
      acc = _mm256_add_pd(acc, _mm256_sqrt_pd(a));
    }
  } else {
    for (; i + 4 <= n; i += 4) {
      const __m256d a = _mm256_and_pd(_mm256_mul_pd(_mm256_loadu_pd(x + i), vs), kAbsMask);
      acc = _mm256_add_pd(acc, pow_abs_pd(a, e));
    }
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += pow_abs_tail(std::fabs(x[i]) * scale, e);
  return s;
}

inline __m256d signed_pow_pd(__m256d v, double e) {
  const __m256d sign = _mm256_and_pd(v, kSignMask);
  const __m256d av = _mm256_and_pd(v, kAbsMask);
  __m256d mag;
  if (e == 1.0) {
    mag = av;
  } else if (e == 2.0) {
    mag = _mm256_mul_pd(av, av);
  } else if (e == 0.5) {
    mag = _mm256_sqrt_pd(av);
  } else {
    mag = pow_abs_pd(av, e);
  }
  return _mm256_or_pd(mag, sign);
}

inline double signed_pow_tail(double v, double e) {
  if (v == 0.0) return 0.0;
  const double mag = pow_abs_tail(std::fabs(v), e);
  return v < 0.0 ? -mag : mag;
}

void signed_pow_avx2(const double* x, std::size_t n, double e, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, signed_pow_pd(_mm256_loadu_pd(x + i), e));
  }
  for (; i < n; ++i) out[i] = signed_pow_tail(x[i], e);
}

double dual_step_avx2(const double* w, const double* g, std::size_t n,
                      double pm1, double inv_pm1, double eta, double* out) {
  const __m256d veta = _mm256_set1_pd(eta);
  __m256d vmax = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d z = _mm256_sub_pd(signed_pow_pd(_mm256_loadu_pd(w + i), pm1),
                                    _mm256_mul_pd(veta, _mm256_loadu_pd(g + i)));
    vmax = _mm256_max_pd(vmax, _mm256_and_pd(z, kAbsMask));
    _mm256_storeu_pd(out + i, signed_pow_pd(z, inv_pm1));
  }
  double dual_max = hmax(vmax);
  for (; i < n; ++i) {
    const double z = signed_pow_tail(w[i], pm1) - eta * g[i];
    const double az = std::fabs(z);
    if (az > dual_max) dual_max = az;
    out[i] = signed_pow_tail(z, inv_pm1);
  }
  return dual_max;
}

} // namespace

const Kernels& avx2_kernels() {
  static const Kernels k = {
      "avx2",         dot_avx2,        axpy_avx2, max_abs_avx2,
      pow_accum_avx2, signed_pow_avx2, dual_step_avx2,
  };
  return k;
}

} // namespace pgd::simd
