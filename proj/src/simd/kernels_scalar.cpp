#include "nvs/simd/kernels.hpp"

#include <algorithm>

namespace nvs::simd::scalar {

// Reference kernels. Complex products are spelled out on the real and
// imaginary parts so the compiler does not emit the C99 Annex G NaN checks.

void cgemm(std::size_t n, const cplx* a, const cplx* b, cplx* c) noexcept {
  std::fill(c, c + n * n, cplx{});
  for (std::size_t i = 0; i < n; ++i) {
    cplx* crow = c + i * n;
    for (std::size_t k = 0; k < n; ++k) {
      const double ar = a[i * n + k].real();
      const double ai = a[i * n + k].imag();
      if (ar == 0.0 && ai == 0.0) continue;
      const cplx* brow = b + k * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double br = brow[j].real();
        const double bi = brow[j].imag();
        crow[j] = {crow[j].real() + ar * br - ai * bi, crow[j].imag() + ar * bi + ai * br};
      }
    }
  }
}

void cgemv(std::size_t n, const cplx* a, const cplx* x, cplx* y) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    double sr = 0.0;
    double si = 0.0;
    const cplx* row = a + i * n;
    for (std::size_t k = 0; k < n; ++k) {
      sr += row[k].real() * x[k].real() - row[k].imag() * x[k].imag();
      si += row[k].real() * x[k].imag() + row[k].imag() * x[k].real();
    }
    y[i] = {sr, si};
  }
}

void caxpy(std::size_t len, cplx alpha, const cplx* x, cplx* y) noexcept {
  const double ar = alpha.real();
  const double ai = alpha.imag();
  for (std::size_t i = 0; i < len; ++i) {
    y[i] = {y[i].real() + ar * x[i].real() - ai * x[i].imag(),
            y[i].imag() + ar * x[i].imag() + ai * x[i].real()};
  }
}

}  // namespace nvs::simd::scalar
