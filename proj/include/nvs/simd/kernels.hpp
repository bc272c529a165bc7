#pragma once
// Complex double-precision inner kernels with runtime ISA selection.
//
// Every kernel has a portable scalar reference in nvs::simd::scalar and, on
// x86-64, an AVX2+FMA variant in nvs::simd::avx2. The free functions in
// nvs::simd dispatch through a table chosen once at startup from CPUID; the
// NVS_ISA environment variable ("scalar" or "avx2") or set_isa() overrides it.
//
// Matrices are dense, square, row-major, stored as interleaved (re, im) pairs.

#include <complex>
#include <cstddef>
#include <string_view>

namespace nvs::simd {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best ISA the running CPU supports and the binary was built with.
Isa detected_isa() noexcept;

/// ISA currently used by the dispatching kernels.
Isa active_isa() noexcept;

/// Force a kernel family. Throws InputError if the CPU or build lacks it.
void set_isa(Isa isa);

bool isa_available(Isa isa) noexcept;

// c = a * b for n x n matrices. c must not alias a or b.
void cgemm(std::size_t n, const cplx* a, const cplx* b, cplx* c) noexcept;

// y = a * x for an n x n matrix. y must not alias x.
void cgemv(std::size_t n, const cplx* a, const cplx* x, cplx* y) noexcept;

// y += alpha * x over len elements.
void caxpy(std::size_t len, cplx alpha, const cplx* x, cplx* y) noexcept;

namespace scalar {
void cgemm(std::size_t n, const cplx* a, const cplx* b, cplx* c) noexcept;
void cgemv(std::size_t n, const cplx* a, const cplx* x, cplx* y) noexcept;
void caxpy(std::size_t len, cplx alpha, const cplx* x, cplx* y) noexcept;
}  // namespace scalar

#if defined(NVS_HAVE_AVX2)
namespace avx2 {
void cgemm(std::size_t n, const cplx* a, const cplx* b, cplx* c) noexcept;
void cgemv(std::size_t n, const cplx* a, const cplx* x, cplx* y) noexcept;
void caxpy(std::size_t len, cplx alpha, const cplx* x, cplx* y) noexcept;
}  // namespace avx2
#endif

}  // namespace nvs::simd
