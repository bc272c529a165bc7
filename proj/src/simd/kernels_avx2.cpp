// Built with -mavx2 -mfma. Only reached through the dispatch table after a
// CPUID check, so nothing in here may be inlined into generic code.

#include <immintrin.h>

#include <algorithm>

#include "nvs/simd/kernels.hpp"

namespace nvs::simd::avx2 {

namespace {

// Two complex products per register: (x0, x1) * (y0, y1) lane-wise.
// fmaddsub subtracts in even (real) lanes and adds in odd (imaginary) lanes.
inline __m256d cmul2(__m256d x, __m256d y_re, __m256d y_im) {
  const __m256d x_swap = _mm256_permute_pd(x, 0b0101);
  return _mm256_fmaddsub_pd(x, y_re, _mm256_mul_pd(x_swap, y_im));
}

inline const double* dp(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* dp(cplx* p) { return reinterpret_cast<double*>(p); }

}  // namespace

void cgemm(std::size_t n, const cplx* a, const cplx* b, cplx* c) noexcept {
  std::fill(c, c + n * n, cplx{});
  const std::size_t n2 = n & ~std::size_t{1};
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = dp(c + i * n);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx aik = a[i * n + k];
      if (aik.real() == 0.0 && aik.imag() == 0.0) continue;
      const __m256d are = _mm256_set1_pd(aik.real());
      const __m256d aim = _mm256_set1_pd(aik.imag());
      const double* brow = dp(b + k * n);
      std::size_t j = 0;
      for (; j < n2; j += 2) {
        const __m256d bv = _mm256_loadu_pd(brow + 2 * j);
        const __m256d cv = _mm256_loadu_pd(crow + 2 * j);
        _mm256_storeu_pd(crow + 2 * j, _mm256_add_pd(cv, cmul2(bv, are, aim)));
      }
      for (; j < n; ++j) {
        const double br = brow[2 * j];
        const double bi = brow[2 * j + 1];
        crow[2 * j] += aik.real() * br - aik.imag() * bi;
        crow[2 * j + 1] += aik.real() * bi + aik.imag() * br;
      }
    }
  }
}

void cgemv(std::size_t n, const cplx* a, const cplx* x, cplx* y) noexcept {
  const std::size_t n2 = n & ~std::size_t{1};
  const double* xd = dp(x);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = dp(a + i * n);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k < n2; k += 2) {
      const __m256d av = _mm256_loadu_pd(row + 2 * k);
      const __m256d xv = _mm256_loadu_pd(xd + 2 * k);
      const __m256d x_re = _mm256_movedup_pd(xv);
      const __m256d x_im = _mm256_permute_pd(xv, 0b1111);
      acc = _mm256_add_pd(acc, cmul2(av, x_re, x_im));
    }
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    alignas(16) double s[2];
    _mm_store_pd(s, _mm_add_pd(lo, hi));
    for (; k < n; ++k) {
      const double ar = row[2 * k];
      const double ai = row[2 * k + 1];
      s[0] += ar * xd[2 * k] - ai * xd[2 * k + 1];
      s[1] += ar * xd[2 * k + 1] + ai * xd[2 * k];
    }
    y[i] = {s[0], s[1]};
  }
}

void caxpy(std::size_t len, cplx alpha, const cplx* x, cplx* y) noexcept {
  const __m256d are = _mm256_set1_pd(alpha.real());
  const __m256d aim = _mm256_set1_pd(alpha.imag());
  const std::size_t len2 = len & ~std::size_t{1};
  const double* xd = dp(x);
  double* yd = dp(y);
  std::size_t i = 0;
  for (; i < len2; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    const __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, cmul2(xv, are, aim)));
  }
  for (; i < len; ++i) {
    y[i] = {y[i].real() + alpha.real() * x[i].real() - alpha.imag() * x[i].imag(),
            y[i].imag() + alpha.real() * x[i].imag() + alpha.imag() * x[i].real()};
  }
}

}  // namespace nvs::simd::avx2
