#pragma once

#include "critdrift/simd.hpp"

namespace critdrift::simd {

inline constexpr double kLn2 = 0.69314718055994530942;
// Above this argument em*em in the expm1 form would overflow, so Φ switches
// to exp(a - ln 2).
inline constexpr double kPhiLargeArg = 350.0;

extern const KernelTable kScalarTable;
#if defined(CRITDRIFT_HAVE_AVX2_TU)
extern const KernelTable kAvx2Table;
#endif

}  // namespace critdrift::simd
