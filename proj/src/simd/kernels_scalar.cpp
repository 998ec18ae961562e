#include "critdrift/simd.hpp"
#include "kernels_internal.hpp"

#include <cmath>
#include <limits>

namespace critdrift::simd {

double phi_scalar(double y) {
  const double a = std::fabs(y);
  if (!(a <= kPhiLargeArg)) {
    if (std::isnan(a)) return a;
    // e^a/2 dominates; the subtraction of ln 2 keeps the exponent in range
    // up to the cosh overflow threshold.
    return std::exp(a - kLn2);
  }
  const double em = std::expm1(a);
  return em * em / (2.0 * (1.0 + em));
}

namespace {

struct Neumaier {
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
  double value() const { return s + c; }
};

double sum(const double* x, std::size_t n) {
  Neumaier acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(x[i]);
  return acc.value();
}

double dot(const double* x, const double* y, std::size_t n) {
  Neumaier acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(x[i] * y[i]);
  return acc.value();
}

double dot3(const double* x, const double* y, const double* z, std::size_t n) {
  Neumaier acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(x[i] * y[i] * z[i]);
  return acc.value();
}

double max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(x[i]);
    if (std::isnan(a)) return a;
    if (a > m) m = a;
  }
  return m;
}

double phi_sum(const double* x, std::size_t n, double scale) {
  Neumaier acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(phi_scalar(x[i] * scale));
  return acc.value();
}

void phi(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = phi_scalar(x[i]);
}

void exp(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_add(const double* x, const double* y, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * y[i];
}

void scale_complex(double* z, const double* m, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    z[2 * k] *= m[k];
    z[2 * k + 1] *= m[k];
  }
}

void scale_complex_imag(const double* z, const double* m, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double re = z[2 * k];
    const double im = z[2 * k + 1];
    out[2 * k] = -im * m[k];
    out[2 * k + 1] = re * m[k];
  }
}

}  // namespace

const KernelTable kScalarTable{
    "scalar", sum, dot, dot3, max_abs, phi_sum, phi, exp, mul, mul_add, scale_complex, scale_complex_imag,
};

}  // namespace critdrift::simd
