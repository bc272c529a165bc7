#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nvs/entanglement.hpp"
#include "nvs/errors.hpp"
#include "nvs/linalg/cmatrix.hpp"
#include "nvs/linalg/ops.hpp"
#include "test_util.hpp"

using namespace nvs;
using namespace nvs::testing;

namespace {

CMatrix singlet_projector() {
  const auto s = state_singlet();
  return CMatrix::projector(s);
}

}  // namespace

TEST_CASE("kron") {
  CHECK(kron(CMatrix::identity(2), CMatrix::identity(2)) == CMatrix::identity(4));
  CHECK(kron(CMatrix::diagonal({1.0, 0.0}), CMatrix::diagonal({1.0, 0.0})) ==
        CMatrix::diagonal({1.0, 0.0, 0.0, 0.0}));

  const CMatrix a = pauli_x(), b = pauli_z();
  const CMatrix k = kron(a, b);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t q = 0; q < 2; ++q) CHECK(k(i * 2 + p, j * 2 + q) == a(i, j) * b(p, q));

  std::mt19937_64 rng(1);
  const auto x = random_matrix(2, rng), y = random_matrix(3, rng), z = random_matrix(2, rng);
  CHECK(max_abs_diff(kron(kron(x, y), z), kron(x, kron(y, z))) < 1e-12);
}

TEST_CASE("partial_trace") {
  std::mt19937_64 rng(2);
  SUBCASE("factorized input") {
    const auto a = random_matrix(2, rng), b = random_matrix(2, rng);
    const CMatrix r = partial_trace(kron(a, b), SubsystemDims{2, 2}, {0});
    CHECK(max_abs_diff(r, a * b.trace()) < 1e-12);
  }
  SUBCASE("singlet reductions are maximally mixed") {
    const CMatrix s = singlet_projector();
    const CMatrix half = CMatrix::identity(2) * cplx(0.5);
    CHECK(max_abs_diff(partial_trace(s, SubsystemDims{2, 2}, {0}), half) < 1e-15);
    CHECK(max_abs_diff(partial_trace(s, SubsystemDims{2, 2}, {1}), half) < 1e-15);
  }
  SUBCASE("index-sum oracle for (2,2,2) keep {0,2}") {
    const CMatrix rho = random_density(8, rng);
    const CMatrix r = partial_trace(rho, SubsystemDims{2, 2, 2}, {0, 2});
    REQUIRE(r.dim() == 4);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t a2 = 0; a2 < 2; ++a2)
          for (std::size_t c2 = 0; c2 < 2; ++c2) {
            cplx s = 0;
            for (std::size_t b = 0; b < 2; ++b) s += rho(a * 4 + b * 2 + c, a2 * 4 + b * 2 + c2);
            CHECK(std::abs(r(a * 2 + c, a2 * 2 + c2) - s) < 1e-12);
          }
    CHECK(std::abs(r.trace() - rho.trace()) < 1e-12);
    CHECK(min_eigenvalue(r) > -1e-10);
  }
  SUBCASE("keep order does not matter") {
    const CMatrix rho = random_density(8, rng);
    const std::vector<std::size_t> fwd{0, 2}, rev{2, 0};
    CHECK(partial_trace(rho, SubsystemDims{2, 2, 2}, fwd) == partial_trace(rho, SubsystemDims{2, 2, 2}, rev));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(partial_trace(CMatrix::identity(4), SubsystemDims{2, 2, 2}, {0}), InputError);
    CHECK_THROWS_AS(partial_trace(CMatrix::identity(4), SubsystemDims{2, 2}, {5}), InputError);
    CHECK_THROWS_AS(SubsystemDims({2, 1}), InputError);
  }
}

TEST_CASE("partial_transpose") {
  std::mt19937_64 rng(3);
  const auto ra = random_density(2, rng), rb = random_density(2, rng);
  CHECK(max_abs_diff(partial_transpose(kron(ra, rb), SubsystemDims{2, 2}, 1), kron(ra, rb.transpose())) < 1e-15);

  const auto ev = herm_eig(partial_transpose(singlet_projector(), SubsystemDims{2, 2}, 1)).values;
  CHECK(ev[0] == doctest::Approx(-0.5).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) CHECK(ev[i] == doctest::Approx(0.5).epsilon(1e-12));

  const auto rho = random_density(4, rng);
  const SubsystemDims d{2, 2};
  CHECK(partial_transpose(partial_transpose(rho, d, 0), d, 0) == rho);
  CHECK(partial_transpose(partial_transpose(rho, d, 1), d, 1) == rho);
  const auto pt = partial_transpose(rho, d, 1);
  CHECK(std::abs(pt.trace() - rho.trace()) < 1e-14);
  CHECK(pt.hermiticity_defect() < 1e-14);

  const auto rho3 = random_density(12, rng);
  const SubsystemDims d3{2, 3, 2};
  CHECK(partial_transpose(partial_transpose(rho3, d3, 1), d3, 1) == rho3);
  CHECK_THROWS_AS(partial_transpose(rho3, d, 0), InputError);
}

TEST_CASE("herm_eig") {
  const auto e = herm_eig(CMatrix::diagonal({3.0, 1.0, 2.0}));
  CHECK(e.values == std::vector<double>{1.0, 2.0, 3.0});

  const auto x = herm_eig(pauli_x());
  CHECK(x.values[0] == doctest::Approx(-1.0));
  CHECK(x.values[1] == doctest::Approx(1.0));
  // (|0> - |1>)/sqrt2 up to phase
  CHECK(std::abs(x.vectors(0, 0) + x.vectors(1, 0)) < 1e-12);
  CHECK(std::abs(std::abs(x.vectors(0, 0)) - std::sqrt(0.5)) < 1e-12);
  CHECK(std::abs(x.vectors(0, 1) - x.vectors(1, 1)) < 1e-12);

  std::mt19937_64 rng(4);
  const auto h = random_hermitian(16, rng);
  const auto r = herm_eig(h);
  CHECK(std::is_sorted(r.values.begin(), r.values.end()));
  std::vector<cplx> diag(r.values.begin(), r.values.end());
  const CMatrix recon = r.vectors * CMatrix::diagonal(diag) * r.vectors.adjoint();
  CHECK(max_abs_diff(recon, h) < 1e-10);
  CHECK(max_abs_diff(r.vectors.adjoint() * r.vectors, CMatrix::identity(16)) < 1e-10);

  const auto rho = random_density(8, rng);
  double sum = 0;
  for (double v : herm_eig(rho).values) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));

  auto skew = h;
  skew(0, 1) += 1e-3;
  CHECK_THROWS_AS(herm_eig(skew), InputError);
  auto nearly = h;
  nearly(0, 1) += 1e-14;
  CHECK_NOTHROW(herm_eig(nearly));
}

TEST_CASE("expm_unitary") {
  std::mt19937_64 rng(5);
  const auto h = random_hermitian(8, rng);
  CHECK(max_abs_diff(expm_unitary(h, 0.0), CMatrix::identity(8)) < 1e-14);

  const double w = 2 * std::numbers::pi * 1e3, t = 1e-3;
  const CMatrix u = expm_unitary(pauli_z() * cplx(w / 2), t);
  CHECK(std::abs(u(0, 0) - std::exp(cplx(0, -w * t / 2))) < 1e-12);
  CHECK(std::abs(u(1, 1) - std::exp(cplx(0, w * t / 2))) < 1e-12);
  CHECK(std::abs(u(0, 1)) < 1e-15);

  const CMatrix u1 = expm_unitary(h, 0.3), u2 = expm_unitary(h, 0.45);
  CHECK(max_abs_diff(u1.adjoint() * u1, CMatrix::identity(8)) < 1e-10);
  CHECK(max_abs_diff(u1 * u2, expm_unitary(h, 0.75)) < 1e-9);

  // unitarity for ||h t|| up to 1e3
  const CMatrix big = expm_unitary(h * cplx(1e3 / h.max_abs()), 1.0);
  CHECK(max_abs_diff(big.adjoint() * big, CMatrix::identity(8)) < 1e-10);
}

TEST_CASE("general_eig") {
  const auto d = general_eig(CMatrix::diagonal({cplx(1, 2), cplx(3, 0)}));
  REQUIRE(d.values.size() == 2);
  CHECK(std::abs(d.values[0] - cplx(1, 2)) < 1e-14);
  CHECK(std::abs(d.values[1] - cplx(3, 0)) < 1e-14);

  const auto j = general_eig(CMatrix{{0.0, 1.0}, {0.0, 0.0}});
  for (auto v : j.values) CHECK(std::abs(v) < 1e-12);

  std::mt19937_64 rng(6);
  const auto a = random_matrix(64, rng);
  const auto r = general_eig(a);
  const double scale = a.max_abs();
  for (std::size_t k = 0; k < 64; ++k) {
    std::vector<cplx> v(64);
    for (std::size_t i = 0; i < 64; ++i) v[i] = r.vectors(i, k);
    auto av = a.apply(v);
    for (std::size_t i = 0; i < 64; ++i) av[i] -= r.values[k] * v[i];
    CHECK(vector_norm(av) <= 1e-8 * scale * vector_norm(v));
  }
  for (std::size_t k = 1; k < 64; ++k) {
    const auto p = r.values[k - 1], q = r.values[k];
    CHECK((p.real() < q.real() || (p.real() == q.real() && p.imag() <= q.imag())));
  }
  CHECK(general_eig(a).values == r.values);
  const auto only = general_eigenvalues(a);
  for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(only[k] - r.values[k]) < 1e-9 * scale);
}

TEST_CASE("trace_norm and trace_distance") {
  std::mt19937_64 rng(7);
  CHECK(trace_norm(random_density(4, rng)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trace_norm(partial_transpose(singlet_projector(), SubsystemDims{2, 2}, 1)) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(trace_norm(CMatrix::diagonal({-3.0, 4.0})) == doctest::Approx(7.0));
  const auto up = CMatrix::diagonal({1.0, 0.0}), down = CMatrix::diagonal({0.0, 1.0});
  CHECK(trace_distance(up, down) == doctest::Approx(1.0));
  CHECK(trace_distance(up, up) == 0.0);
}

TEST_CASE("vec, unvec, solve and the Taylor exponential") {
  std::mt19937_64 rng(8);
  const auto a = random_matrix(3, rng), x = random_matrix(3, rng), b = random_matrix(3, rng);
  const auto lhs = vec(a * x * b);
  const auto rhs = kron(b.transpose(), a).apply(vec(x));
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) < 1e-12);
  CHECK(unvec(vec(x), 3) == x);
  CHECK(vec(x)[1] == x(1, 0));

  const auto m = random_matrix(6, rng);
  const auto rhs_b = random_state(6, rng);
  const auto sol = solve_linear(m, rhs_b);
  const auto back = m.apply(sol);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(back[i] - rhs_b[i]) < 1e-10);
  CHECK_THROWS_AS(solve_linear(CMatrix(3), std::span<const cplx>(rhs_b).first(3)), NumericalError);

  const auto h = random_hermitian(5, rng);
  CHECK(max_abs_diff(expm_general(h * cplx(0, -0.7)), expm_unitary(h, 0.7)) < 1e-11);
  const CMatrix nil{{0.0, 2.0}, {0.0, 0.0}};
  CHECK(max_abs_diff(expm_general(nil), CMatrix{{1.0, 2.0}, {0.0, 1.0}}) < 1e-14);
}
