// AVX2 + FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; it calls nothing inline from other headers on its vector
// paths so no wide-ISA code leaks into shared inline instantiations.

#include "kernels_internal.hpp"

#if defined(CRITDRIFT_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

namespace critdrift::simd {
namespace {

constexpr double kLog2e = 1.4426950408889634074;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
// exp_core is exact-range only on [kExpLo, kExpHi]; lanes outside fall back.
constexpr double kExpLo = -708.0;
constexpr double kExpHi = 709.0;

// 1/k! for k = 0..14
constexpr double kInvFact[15] = {
    1.0,
    1.0,
    0.5,
    1.6666666666666666574e-01,
    4.1666666666666664354e-02,
    8.3333333333333332177e-03,
    1.3888888888888889419e-03,
    1.9841269841269841253e-04,
    2.4801587301587301566e-05,
    2.7557319223985892511e-06,
    2.7557319223985888276e-07,
    2.5052108385441720224e-08,
    2.0876756987868098979e-09,
    1.6059043836821614599e-10,
    1.1470745597729724714e-11,
};

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

// Neumaier accumulation of v into (s, c), lane-wise.
inline void neumaier_add(__m256d& s, __m256d& c, __m256d v) {
  const __m256d t = _mm256_add_pd(s, v);
  const __m256d s_big = _mm256_cmp_pd(abs_pd(s), abs_pd(v), _CMP_GE_OQ);
  const __m256d a = _mm256_add_pd(_mm256_sub_pd(s, t), v);
  const __m256d b = _mm256_add_pd(_mm256_sub_pd(v, t), s);
  c = _mm256_add_pd(c, _mm256_blendv_pd(b, a, s_big));
  s = t;
}

struct ScalarNeumaier {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::fabs(s) >= std::fabs(x)) {
      c += (s - t) + x;
    } else {
      c += (x - t) + s;
    }
    s = t;
  }
};

// Folds the lane accumulators into a scalar compensated sum.
inline ScalarNeumaier fold(__m256d s, __m256d c) {
  alignas(32) double sl[4];
  alignas(32) double cl[4];
  _mm256_store_pd(sl, s);
  _mm256_store_pd(cl, c);
  ScalarNeumaier acc;
  for (double v : sl) acc.add(v);
  for (double v : cl) acc.add(v);
  return acc;
}

// e^x for x in [kExpLo, kExpHi].
inline __m256d exp_core(__m256d x) {
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Lo), r);
  __m256d p = _mm256_set1_pd(kInvFact[13]);
  for (int i = 12; i >= 0; --i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[i]));
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  __m256i k64 = _mm256_cvtepi32_epi64(k32);
  k64 = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(k64));
}

// e^x - 1 for |x| < 0.5 via the Taylor series to degree 14.
inline __m256d expm1_small(__m256d x) {
  __m256d p = _mm256_set1_pd(kInvFact[14]);
  for (int i = 13; i >= 1; --i) p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(kInvFact[i]));
  return _mm256_mul_pd(p, x);
}

// Φ(y) = cosh(y) - 1 written as em^2 / (2 (1 + em)), em = expm1(|y|).
// Valid for |y| <= kPhiLargeArg; callers route other lanes to the scalar path.
inline __m256d phi_core(__m256d y) {
  const __m256d a = abs_pd(y);
  const __m256d small = _mm256_cmp_pd(a, _mm256_set1_pd(0.5), _CMP_LT_OQ);
  const __m256d em_small = expm1_small(a);
  const __m256d em_large = _mm256_sub_pd(exp_core(_mm256_min_pd(a, _mm256_set1_pd(kExpHi))),
                                         _mm256_set1_pd(1.0));
  const __m256d em = _mm256_blendv_pd(em_large, em_small, small);
  const __m256d den = _mm256_mul_pd(_mm256_set1_pd(2.0), _mm256_add_pd(_mm256_set1_pd(1.0), em));
  return _mm256_div_pd(_mm256_mul_pd(em, em), den);
}

inline bool phi_in_range(__m256d y) {
  const __m256d ok = _mm256_cmp_pd(abs_pd(y), _mm256_set1_pd(kPhiLargeArg), _CMP_LE_OQ);
  return _mm256_movemask_pd(ok) == 0xF;
}

inline bool exp_in_range(__m256d x) {
  const __m256d lo = _mm256_cmp_pd(x, _mm256_set1_pd(kExpLo), _CMP_GE_OQ);
  const __m256d hi = _mm256_cmp_pd(x, _mm256_set1_pd(kExpHi), _CMP_LE_OQ);
  return _mm256_movemask_pd(_mm256_and_pd(lo, hi)) == 0xF;
}

double sum(const double* x, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) neumaier_add(s, c, _mm256_loadu_pd(x + i));
  ScalarNeumaier acc = fold(s, c);
  for (; i < n; ++i) acc.add(x[i]);
  return acc.s + acc.c;
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    neumaier_add(s, c, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  ScalarNeumaier acc = fold(s, c);
  for (; i < n; ++i) acc.add(x[i] * y[i]);
  return acc.s + acc.c;
}

double dot3(const double* x, const double* y, const double* z, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xy = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    neumaier_add(s, c, _mm256_mul_pd(xy, _mm256_loadu_pd(z + i)));
  }
  ScalarNeumaier acc = fold(s, c);
  for (; i < n; ++i) acc.add(x[i] * y[i] * z[i]);
  return acc.s + acc.c;
}

double max_abs(const double* x, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  __m256d nan = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    nan = _mm256_or_pd(nan, _mm256_cmp_pd(v, v, _CMP_UNORD_Q));
    m = _mm256_max_pd(m, abs_pd(v));
  }
  if (_mm256_movemask_pd(nan) != 0) return std::numeric_limits<double>::quiet_NaN();
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = lanes[0];
  for (int l = 1; l < 4; ++l) r = lanes[l] > r ? lanes[l] : r;
  for (; i < n; ++i) {
    const double a = std::fabs(x[i]);
    if (std::isnan(a)) return a;
    if (a > r) r = a;
  }
  return r;
}

double phi_sum(const double* x, std::size_t n, double scale) {
  const __m256d sv = _mm256_set1_pd(scale);
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  ScalarNeumaier spill;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_mul_pd(_mm256_loadu_pd(x + i), sv);
    if (phi_in_range(y)) {
      neumaier_add(s, c, phi_core(y));
    } else {
      for (std::size_t l = 0; l < 4; ++l) spill.add(phi_scalar(x[i + l] * scale));
    }
  }
  ScalarNeumaier acc = fold(s, c);
  acc.add(spill.s);
  acc.add(spill.c);
  for (; i < n; ++i) acc.add(phi_scalar(x[i] * scale));
  return acc.s + acc.c;
}

void phi(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_loadu_pd(x + i);
    if (phi_in_range(y)) {
      _mm256_storeu_pd(out + i, phi_core(y));
    } else {
      for (std::size_t l = 0; l < 4; ++l) out[i + l] = phi_scalar(x[i + l]);
    }
  }
  for (; i < n; ++i) out[i] = phi_scalar(x[i]);
}

void exp(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    if (exp_in_range(v)) {
      _mm256_storeu_pd(out + i, exp_core(v));
    } else {
      for (std::size_t l = 0; l < 4; ++l) out[i + l] = std::exp(x[i + l]);
    }
  }
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_add(const double* x, const double* y, double* acc, std::size_t n) {
  std::size_t i = 0;
  // Separate multiply and add (no FMA contraction) so the result is bitwise
  // identical to the scalar reference.
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), prod));
  }
  for (; i < n; ++i) acc[i] += x[i] * y[i];
}

void scale_complex(double* z, const double* m, std::size_t n) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d mm = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(m + k)), 0x50);
    _mm256_storeu_pd(z + 2 * k, _mm256_mul_pd(_mm256_loadu_pd(z + 2 * k), mm));
  }
  for (; k < n; ++k) {
    z[2 * k] *= m[k];
    z[2 * k + 1] *= m[k];
  }
}

void scale_complex_imag(const double* z, const double* m, double* out, std::size_t n) {
  const __m256d sign = _mm256_set_pd(0.0, -0.0, 0.0, -0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d mm = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(m + k)), 0x50);
    const __m256d swapped = _mm256_permute_pd(_mm256_loadu_pd(z + 2 * k), 0x5);
    _mm256_storeu_pd(out + 2 * k, _mm256_xor_pd(_mm256_mul_pd(swapped, mm), sign));
  }
  for (; k < n; ++k) {
    const double re = z[2 * k];
    const double im = z[2 * k + 1];
    out[2 * k] = -im * m[k];
    out[2 * k + 1] = re * m[k];
  }
}

}  // namespace

const KernelTable kAvx2Table{
    "avx2", sum, dot, dot3, max_abs, phi_sum, phi, exp, mul, mul_add, scale_complex, scale_complex_imag,
};

}  // namespace critdrift::simd

#endif  // CRITDRIFT_HAVE_AVX2_TU
