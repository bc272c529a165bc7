#include <doctest.h>

#include <random>
#include <vector>

#include "nvs/errors.hpp"
#include "nvs/linalg/cmatrix.hpp"
#include "nvs/simd/kernels.hpp"
#include "test_util.hpp"

using nvs::cplx;
namespace simd = nvs::simd;

namespace {

std::vector<cplx> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

std::vector<cplx> naive_gemm(std::size_t n, const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      cplx s = 0;
      for (std::size_t k = 0; k < n; ++k) s += a[i * n + k] * b[k * n + j];
      c[i * n + j] = s;
    }
  return c;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct IsaGuard {
  simd::Isa saved = simd::active_isa();
  ~IsaGuard() { simd::set_isa(saved); }
};

}  // namespace

TEST_CASE("scalar cgemm matches the naive triple loop") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 2u, 3u, 4u, 7u, 16u, 33u}) {
    const auto a = random_vec(n * n, rng), b = random_vec(n * n, rng);
    std::vector<cplx> c(n * n);
    simd::scalar::cgemm(n, a.data(), b.data(), c.data());
    CHECK(max_diff(c, naive_gemm(n, a, b)) < 1e-12 * double(n));
  }
}

TEST_CASE("scalar cgemv and caxpy") {
  std::mt19937_64 rng(12);
  const std::size_t n = 9;
  const auto a = random_vec(n * n, rng), x = random_vec(n, rng);
  std::vector<cplx> y(n);
  simd::scalar::cgemv(n, a.data(), x.data(), y.data());
  for (std::size_t i = 0; i < n; ++i) {
    cplx s = 0;
    for (std::size_t k = 0; k < n; ++k) s += a[i * n + k] * x[k];
    CHECK(std::abs(y[i] - s) < 1e-12);
  }
  auto z = x;
  const cplx alpha{0.5, -2.0};
  simd::scalar::caxpy(n, alpha, a.data(), z.data());
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(z[i] - (x[i] + alpha * a[i])) < 1e-14);
}

#if defined(NVS_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::isa_available(simd::Isa::avx2)) {
    MESSAGE("CPU lacks AVX2/FMA; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(13);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 8u, 15u, 16u, 31u, 64u, 65u}) {
    const auto a = random_vec(n * n, rng), b = random_vec(n * n, rng), x = random_vec(n, rng);
    std::vector<cplx> c_s(n * n), c_v(n * n), y_s(n), y_v(n);
    simd::scalar::cgemm(n, a.data(), b.data(), c_s.data());
    simd::avx2::cgemm(n, a.data(), b.data(), c_v.data());
    CHECK(max_diff(c_s, c_v) < 1e-12 * double(n));
    simd::scalar::cgemv(n, a.data(), x.data(), y_s.data());
    simd::avx2::cgemv(n, a.data(), x.data(), y_v.data());
    CHECK(max_diff(y_s, y_v) < 1e-12 * double(n));
    auto p = b, q = b;
    simd::scalar::caxpy(n * n, {1.5, 0.25}, a.data(), p.data());
    simd::avx2::caxpy(n * n, {1.5, 0.25}, a.data(), q.data());
    CHECK(max_diff(p, q) < 1e-13);
  }
}

TEST_CASE("dispatch follows set_isa and matrix products agree across ISAs") {
  if (!simd::isa_available(simd::Isa::avx2)) return;
  IsaGuard guard;
  std::mt19937_64 rng(14);
  const auto a = nvs::testing::random_matrix(24, rng), b = nvs::testing::random_matrix(24, rng);
  simd::set_isa(simd::Isa::scalar);
  CHECK(simd::active_isa() == simd::Isa::scalar);
  const nvs::CMatrix p_s = a * b;
  simd::set_isa(simd::Isa::avx2);
  CHECK(simd::active_isa() == simd::Isa::avx2);
  const nvs::CMatrix p_v = a * b;
  CHECK(nvs::max_abs_diff(p_s, p_v) < 1e-11);
}
#endif

TEST_CASE("isa names and the scalar family are always available") {
  CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
  CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
  CHECK(simd::isa_available(simd::Isa::scalar));
  IsaGuard guard;
  CHECK_NOTHROW(simd::set_isa(simd::Isa::scalar));
  if (!simd::isa_available(simd::Isa::avx2)) CHECK_THROWS_AS(simd::set_isa(simd::Isa::avx2), nvs::InputError);
}
