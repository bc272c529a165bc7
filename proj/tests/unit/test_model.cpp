#include <doctest.h>

#include <cmath>
#include <random>

#include "nvs/entanglement.hpp"
#include "nvs/errors.hpp"
#include "nvs/linalg/ops.hpp"
#include "nvs/model.hpp"
#include "test_util.hpp"

using namespace nvs;
using namespace nvs::testing;

namespace {

constexpr double kKhz = kTwoPi * 1e3;

NuclearSpin nucleus(double a_par_khz, double a_perp_khz, const char* label = "") {
  return {a_par_khz * kKhz, a_perp_khz * kKhz, std::nullopt, label};
}

// Two nuclei at (2,16) and (4,16) kHz, carrier midway, Omega_rf = 8 Delta.
SpinSystem fig2a_system() { return SpinSystem({nucleus(2, 16, "C1"), nucleus(4, 16, "C2")}, {0, 1}); }

DriveParams fig2a_drive(const SpinSystem& sys) {
  DriveParams d;
  d.b0 = 0.01;
  d.omega_rf = sys.constants().gamma_n * d.b0 + (sys.nucleus(0).a_par + sys.nucleus(1).a_par) / 4.0;
  d.omega_mw = d.omega_rf;
  d.omega_rf_rabi = 8 * 0.5 * kKhz;
  return d;
}

DriveParams overridden(double d1, double d2, double rabi) {
  DriveParams d;
  d.detuning_overrides = {d1, d2};
  d.omega_rf_rabi = rabi;
  return d;
}

std::vector<cplx> column(const std::array<cplx, 4>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("detuning_of") {
  const auto sys = fig2a_system();
  const auto drive = fig2a_drive(sys);
  const auto d = static_detunings(sys, drive);
  CHECK(d[0] == doctest::Approx(-0.5 * kKhz).epsilon(1e-9));
  CHECK(d[1] == doctest::Approx(0.5 * kKhz).epsilon(1e-9));
  CHECK(pair_imbalance(sys, drive) == doctest::Approx(0.5 * kKhz).epsilon(1e-9));

  DriveParams res = drive;
  res.omega_rf = sys.constants().gamma_n * res.b0 + sys.nucleus(0).a_par / 2.0;
  res.omega_mw = res.omega_rf;
  CHECK(detuning_of(sys.nucleus(0), res, sys.constants()) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

  // Carrier placed so that Delta_1 = -0.10 kHz for a_par = (-6.39, -2.77) kHz:
  // the couplings alone then fix Delta_2 at -0.10 + 1.81 = 1.71 kHz.
  const SpinSystem f3({nucleus(-6.39, 0), nucleus(-2.77, 0)}, {0, 1});
  DriveParams d3;
  d3.b0 = 0.01;
  d3.omega_rf = f3.constants().gamma_n * d3.b0 + f3.nucleus(0).a_par / 2.0 + 0.10 * kKhz;
  d3.omega_mw = d3.omega_rf;
  const auto dd = static_detunings(f3, d3);
  CHECK(dd[0] / kKhz == doctest::Approx(-0.10).epsilon(1e-9));
  CHECK(dd[1] / kKhz == doctest::Approx(1.71).epsilon(1e-9));
}

TEST_CASE("detuning schedule") {
  const SpinSystem sys({nucleus(2, 16), nucleus(4, 16), nucleus(20, 4)}, {0, 1});
  auto drive = fig2a_drive(sys);
  const auto base = static_detunings(sys, drive);
  CHECK(detunings_at(sys, drive, 0.37) == base);

  drive.schedule = DetuningSchedule::exponential(3.5 * kKhz, 2500.0, 0.5 * kKhz);
  for (double t : {0.0, 1e-4, 1e-3, 1e-2}) {
    const auto d = detunings_at(sys, drive, t);
    const double imb = 0.5 * kKhz + 3.5 * kKhz * std::exp(-2500.0 * t);
    CHECK((d[1] - d[0]) / 2 == doctest::Approx(imb).epsilon(1e-12));
    CHECK(d[0] + d[1] == doctest::Approx(base[0] + base[1]).epsilon(1e-12));
    CHECK(d[2] == base[2]);
  }
  CHECK_THROWS_AS(DetuningSchedule::exponential(1.0, -1.0, 0.0), InputError);
}

TEST_CASE("site operators") {
  const SpinSystem one({nucleus(0, 0)}, {0, 0});
  CHECK(site_operator(OpKind::Iz, 1, one) == kron(CMatrix::identity(2), CMatrix::diagonal({0.5, -0.5})));

  const SpinSystem three({nucleus(1, 1), nucleus(2, 2), nucleus(3, 3)}, {0, 2});
  for (std::size_t s = 1; s <= 3; ++s) {
    const auto ip = site_operator(OpKind::Iplus, s, three), im = site_operator(OpKind::Iminus, s, three);
    const auto iz = site_operator(OpKind::Iz, s, three);
    CHECK(max_abs_diff(commutator(ip, im), iz * cplx(2)) < 1e-15);
    CHECK((ip * ip).max_abs() == 0.0);
    const auto ix = site_operator(OpKind::Ix, s, three), iy = site_operator(OpKind::Iy, s, three);
    CHECK(max_abs_diff(ix + iy * kI, ip) < 1e-15);
    CHECK(max_abs_diff(commutator(ix, iy), iz * kI) < 1e-15);
  }
  // sigma_+ raises |-x> (index 1) to |+x> (index 0)
  const auto sp = site_operator(OpKind::sigma_plus, 0, one);
  CHECK(sp(0, 2) == cplx(1.0));
  CHECK(sp.max_abs() == 1.0);
  CHECK_THROWS_AS(site_operator(OpKind::sigma_z, 1, one), InputError);
  CHECK_THROWS_AS(site_operator(OpKind::Iz, 0, one), InputError);
  CHECK_THROWS_AS(site_operator(OpKind::Iz, 2, one), InputError);
}

TEST_CASE("full Hamiltonian") {
  const SpinSystem zero({nucleus(0, 0)}, {0, 0});
  DriveParams d;
  d.detuning_overrides = {0.0};
  CHECK(build_full_hamiltonian(zero, d, 0.0).max_abs() == 0.0);

  const auto sys = fig2a_system();
  const auto drive = fig2a_drive(sys);
  const auto h = build_full_hamiltonian(sys, drive, 0.0);
  CHECK(h.hermiticity_defect() == 0.0);
  // <+x, down up | H | -x, up up> = a_perp / 4
  CHECK(std::abs(h(2, 4) - cplx(4 * kKhz)) < 1e-9);
  CHECK(std::abs(h(1, 4) - cplx(4 * kKhz)) < 1e-9);

  // NV frozen in |-x> (rows 4..7): what remains is the local Hamiltonian.
  SpinSystem dip = sys;
  dip.set_dipolar(0, 1, 4.2 * kKhz);
  for (const SpinSystem* s : std::initializer_list<const SpinSystem*>{&sys, &dip}) {
    const auto hf = build_full_hamiltonian(*s, drive, 0.0);
    const auto hl = build_local_hamiltonian(*s, drive, 0.0);
    CMatrix block(4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) block(i, j) = hf(4 + i, 4 + j);
    CHECK(max_abs_diff(block, hl) < 1e-12);
  }

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int k = 0; k < 10; ++k) {
    SpinSystem r({nucleus(u(rng), std::abs(u(rng))), nucleus(u(rng), std::abs(u(rng))),
                  nucleus(u(rng), std::abs(u(rng)))},
                 {0, 2});
    r.set_dipolar(0, 1, u(rng) * kKhz);
    r.set_dipolar(1, 2, u(rng) * kKhz);
    auto dr = fig2a_drive(r);
    CHECK(build_full_hamiltonian(r, dr, 0.0).hermiticity_defect() == 0.0);
    CHECK(build_local_hamiltonian(r, dr, 0.0).hermiticity_defect() == 0.0);
  }
}

TEST_CASE("local Hamiltonian") {
  const SpinSystem sys({nucleus(0, 16), nucleus(0, 16)}, {0, 1});
  const double d0 = 1.3 * kKhz;
  const auto h = build_local_hamiltonian(sys, overridden(d0, d0, 0.0), 0.0);
  const auto z = nuclear_operator(OpKind::Iz, 0, 2) + nuclear_operator(OpKind::Iz, 1, 2);
  CHECK(max_abs_diff(h, z * cplx(d0)) < 1e-12);
  const auto ps = CMatrix::projector(column(state_singlet()));
  CHECK(commutator(h, ps).max_abs() < 1e-12);

  for (double ratio : {0.125, 0.5, 1.0, 3.0}) {
    const double omega = 4 * kKhz, d1 = ratio * omega;
    const auto ht = build_local_hamiltonian(sys, overridden(d1, -d1, omega), 0.0);
    const auto psi = column(analytic_steady_state(d1, omega));
    CHECK(vector_norm(ht.apply(psi)) < 1e-10 * omega);
    const auto jumps = build_jump_operators(sys, overridden(d1, -d1, omega), 25500.0, NoiseParams::none(),
                                            AlphaPhase::common);
    REQUIRE(jumps.size() == 1);
    CHECK(vector_norm(jumps[0].apply(psi)) < 1e-10);
  }
}

TEST_CASE("dimer term spectrum") {
  SpinSystem sys({nucleus(0, 0), nucleus(0, 0)}, {0, 1});
  sys.set_dipolar(0, 1, 1.0);
  const auto h = build_local_hamiltonian(sys, overridden(0.0, 0.0, 0.0), 0.0);
  // Explicit 4x4 oracle: Iz Iz - (Ix Ix + Iy Iy)/2 = Iz Iz - (I+ I- + I- I+)/4.
  const CMatrix oracle{{0.25, 0, 0, 0}, {0, -0.25, -0.25, 0}, {0, -0.25, -0.25, 0}, {0, 0, 0, 0.25}};
  CHECK(max_abs_diff(h, oracle) < 1e-15);
  const auto s = column(state_singlet());
  CHECK(vector_norm(h.apply(s)) < 1e-15);  // eigenvalue 0
  const auto t0 = column(state_triplet0());
  const auto ht0 = h.apply(t0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(ht0[i] + 0.5 * t0[i]) < 1e-15);
  const auto ev = herm_eig(h).values;
  CHECK(ev[0] == doctest::Approx(-0.5));
  CHECK(ev[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(ev[2] == doctest::Approx(0.25));
  CHECK(ev[3] == doctest::Approx(0.25));
}

TEST_CASE("gamma_reset and alpha") {
  CHECK(gamma_reset(40e-6, 2e-3) == doctest::Approx(25500.0).epsilon(1e-12));
  CHECK(gamma_reset(50e-6, 2e-3) == doctest::Approx(20500.0).epsilon(1e-12));
  CHECK(gamma_reset(40e-6) == doctest::Approx(25000.0).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_reset(0.0, 1.0), InputError);
  CHECK_THROWS_AS(gamma_reset(1e-5, -1.0), InputError);

  const double a = 16 * kKhz, gn = 25500.0;
  CHECK(std::norm(alpha_coefficient(a, 0.0, gn)) == doctest::Approx(a * a / (4 * gn)).epsilon(1e-12));
  CHECK(std::abs(alpha_coefficient(0.0, 3.0, gn)) == 0.0);
  for (double d : {0.1, 0.5, 2.0, 10.0}) {
    const auto p = alpha_coefficient(a, d * kKhz, gn), m = alpha_coefficient(a, -d * kKhz, gn);
    CHECK(std::abs(p) == doctest::Approx(std::abs(m)).epsilon(1e-14));
    // Phase measured from the resonant value flips with the sign of Delta.
    const auto a0 = alpha_coefficient(a, 0.0, gn);
    CHECK(std::arg(p / a0) == doctest::Approx(-std::arg(m / a0)).epsilon(1e-12));
    CHECK(std::abs(m + std::conj(p)) < 1e-9 * std::abs(p));
    CHECK(std::norm(p) == doctest::Approx(gn * a * a / 16 / (d * kKhz * d * kKhz + gn * gn / 4)).epsilon(1e-12));
  }
  const double alpha_sq = std::norm(alpha_coefficient(a, 0.5 * kKhz, gn));
  const double approx = a * a * 40e-6 / 4;
  CHECK(std::abs(alpha_sq / approx - 1.0) < 0.3);
  CHECK_THROWS_AS(alpha_coefficient(a, 0.0, 0.0), InputError);
}

TEST_CASE("jump operators") {
  const auto sys = fig2a_system();
  const auto drive = fig2a_drive(sys);
  const auto jumps = build_jump_operators(sys, drive, 25500.0, NoiseParams::none());
  REQUIRE(jumps.size() == 1);
  const auto l = jumps[0];
  // <down_j | L | up up> = alpha_j
  const auto d = static_detunings(sys, drive);
  CHECK(std::abs(l(2, 0) - alpha_coefficient(16 * kKhz, d[0], 25500.0)) < 1e-12);
  CHECK(std::abs(l(1, 0) - alpha_coefficient(16 * kKhz, d[1], 25500.0)) < 1e-12);

  const auto s = column(state_singlet()), t = column(state_triplet0());
  const double ratio = vector_norm(l.apply(s)) / vector_norm(l.apply(t));
  CHECK(ratio > 0.0);
  CHECK(ratio < 0.3);
  const auto lc = build_jump_operators(sys, drive, 25500.0, NoiseParams::none(), AlphaPhase::common)[0];
  CHECK(vector_norm(lc.apply(s)) < 1e-12 * vector_norm(lc.apply(t)));

  const SpinSystem eq({nucleus(3, 10), nucleus(3, 10)}, {0, 1});
  const auto le = build_jump_operators(eq, overridden(0.7 * kKhz, 0.7 * kKhz, 0.0), 25000.0, {})[0];
  CHECK(vector_norm(le.apply(s)) < 1e-12);

  NoiseParams noise;
  noise.gamma = {2.0, 0.0};
  noise.dephasing = {0.0, 3.0};
  const auto js = build_jump_operators(sys, drive, 25500.0, noise);
  REQUIRE(js.size() == 3);
  CHECK(max_abs_diff(js[1], nuclear_operator(OpKind::Iminus, 0, 2) * cplx(std::sqrt(2.0))) < 1e-15);
  CHECK(max_abs_diff(js[2], nuclear_operator(OpKind::Iz, 1, 2) * cplx(std::sqrt(6.0))) < 1e-15);

  noise.gamma = {-1.0};
  CHECK_THROWS_AS(build_jump_operators(sys, drive, 25500.0, noise), InputError);
  const std::vector<cplx> short_alpha{1.0};
  CHECK_THROWS_AS(build_jump_operators(sys, short_alpha, {}), InputError);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(SpinSystem({nucleus(1, 1), nucleus(1, 1)}, {0, 0}), InputError);
  CHECK_THROWS_AS(SpinSystem({nucleus(1, 1), nucleus(1, 1)}, {0, 2}), InputError);
  CHECK_THROWS_AS(SpinSystem({nucleus(1, -1)}, {0, 0}), InputError);
  CHECK_THROWS_AS(SpinSystem({}, {0, 0}), InputError);
  std::vector<NuclearSpin> seven(7, nucleus(1, 1));
  CHECK_THROWS_AS(SpinSystem(seven, {0, 1}), InputError);
  NuclearSpin close = nucleus(1, 1);
  close.position = Vec3{0.2e-9, 0.0, 0.0};
  CHECK_THROWS_AS(SpinSystem({close}, {0, 0}), InputError);

  SpinSystem sys = fig2a_system();
  CHECK_THROWS_AS(sys.set_dipolar(0, 0, 1.0), InputError);
  sys.set_dipolar(1, 0, 2.5);
  CHECK(sys.dipolar(0, 1) == 2.5);
  CHECK(sys.has_dipolar());

  auto drive = fig2a_drive(sys);
  CHECK_NOTHROW(drive.validate(sys));
  drive.omega_mw *= 1.01;
  CHECK_THROWS_AS(drive.validate(sys), InputError);
  drive.enforce_lock = false;
  CHECK_NOTHROW(drive.validate(sys));
}
