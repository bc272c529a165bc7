#include <atomic>
#include <cstdlib>
#include <string>

#include "nvs/errors.hpp"
#include "nvs/simd/kernels.hpp"

namespace nvs::simd {

namespace {

struct KernelTable {
  void (*cgemm)(std::size_t, const cplx*, const cplx*, cplx*) noexcept;
  void (*cgemv)(std::size_t, const cplx*, const cplx*, cplx*) noexcept;
  void (*caxpy)(std::size_t, cplx, const cplx*, cplx*) noexcept;
};

constexpr KernelTable kScalarTable{&scalar::cgemm, &scalar::cgemv, &scalar::caxpy};
#if defined(NVS_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::cgemm, &avx2::cgemv, &avx2::caxpy};
#endif

bool cpu_has_avx2() noexcept {
#if defined(NVS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) noexcept {
#if defined(NVS_HAVE_AVX2)
  if (isa == Isa::avx2) return &kAvx2Table;
#endif
  (void)isa;
  return &kScalarTable;
}

Isa initial_isa() noexcept {
  Isa isa = detected_isa();
  if (const char* env = std::getenv("NVS_ISA")) {
    const std::string want(env);
    if (want == "scalar") isa = Isa::scalar;
    // An "avx2" request on a machine without it falls back silently.
  }
  return isa;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

Isa detected_isa() noexcept { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

bool isa_available(Isa isa) noexcept { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw InputError("ISA " + std::string(isa_name(isa)) + " is not available on this machine");
  }
  current().store(isa, std::memory_order_relaxed);
}

void cgemm(std::size_t n, const cplx* a, const cplx* b, cplx* c) noexcept {
  table_for(active_isa())->cgemm(n, a, b, c);
}

void cgemv(std::size_t n, const cplx* a, const cplx* x, cplx* y) noexcept {
  table_for(active_isa())->cgemv(n, a, x, y);
}

void caxpy(std::size_t len, cplx alpha, const cplx* x, cplx* y) noexcept {
  table_for(active_isa())->caxpy(len, alpha, x, y);
}

}  // namespace nvs::simd
