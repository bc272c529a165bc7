#include "nvs/model.hpp"

#include <cmath>
#include <string>

#include "nvs/errors.hpp"
#include "nvs/linalg/ops.hpp"

namespace nvs {

void PhysicalConstants::validate() const {
  if (!(gamma_n > 0 && gamma_e > 0 && mu0_over_4pi > 0 && hbar > 0)) {
    throw InputError("PhysicalConstants: all constants must be strictly positive");
  }
}

void NuclearSpin::validate() const {
  if (!std::isfinite(a_par) || !std::isfinite(a_perp)) throw InputError("nucleus " + label + ": non-finite coupling");
  if (a_perp < 0) throw InputError("nucleus " + label + ": a_perp must be >= 0");
  if (position) {
    const auto& p = *position;
    const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (!(r > 0.3e-9)) throw InputError("nucleus " + label + ": position closer than 0.3 nm to the NV");
  }
}

SpinSystem::SpinSystem(std::vector<NuclearSpin> nuclei, std::pair<std::size_t, std::size_t> pair,
                       PhysicalConstants constants)
    : nuclei_(std::move(nuclei)), pair_(pair), constants_(constants) {
  if (nuclei_.empty() || nuclei_.size() > kMaxNuclei) {
    throw InputError("SpinSystem: nuclei count must be in [1, " + std::to_string(kMaxNuclei) + "]");
  }
  for (const auto& n : nuclei_) n.validate();
  constants_.validate();
  // A single nucleus has no pair; pair == (0, 0) is accepted only then.
  if (nuclei_.size() == 1) {
    if (pair_.first != 0 || pair_.second != 0) throw InputError("SpinSystem: invalid pair for a single nucleus");
  } else if (pair_.first >= nuclei_.size() || pair_.second >= nuclei_.size() || pair_.first == pair_.second) {
    throw InputError("SpinSystem: pair indices must be valid and distinct");
  }
  dipolar_.assign(nuclei_.size() * nuclei_.size(), 0.0);
}

void SpinSystem::set_dipolar(std::size_t i, std::size_t j, double g) {
  if (i >= size() || j >= size()) throw InputError("set_dipolar: index out of range");
  if (i == j) throw InputError("set_dipolar: diagonal coupling is not allowed");
  if (!std::isfinite(g)) throw InputError("set_dipolar: non-finite coupling");
  dipolar_[i * size() + j] = g;
  dipolar_[j * size() + i] = g;
}

double SpinSystem::dipolar(std::size_t i, std::size_t j) const {
  if (i >= size() || j >= size()) throw InputError("dipolar: index out of range");
  return dipolar_[i * size() + j];
}

bool SpinSystem::has_dipolar() const noexcept {
  for (double g : dipolar_)
    if (g != 0.0) return true;
  return false;
}

DetuningSchedule DetuningSchedule::exponential(double delta0, double rate, double delta_inf) {
  DetuningSchedule s{Kind::exponential, delta0, rate, delta_inf};
  s.validate();
  return s;
}

double DetuningSchedule::imbalance(double t) const noexcept { return delta_inf + delta0 * std::exp(-rate * t); }

void DetuningSchedule::validate() const {
  if (kind == Kind::exponential) {
    if (!(rate >= 0)) throw InputError("DetuningSchedule: rate must be >= 0");
    if (!std::isfinite(delta0) || !std::isfinite(delta_inf)) throw InputError("DetuningSchedule: non-finite values");
  }
}

void DriveParams::validate(const SpinSystem& system) const {
  for (double v : {omega_mw, omega_rf_rabi, b0, omega_rf}) {
    if (!std::isfinite(v)) throw InputError("DriveParams: non-finite value");
  }
  if (enforce_lock) {
    const double scale = std::max({std::abs(omega_rf), std::abs(omega_mw), 1.0});
    if (std::abs(omega_rf - omega_mw) > 1e-12 * scale) {
      throw InputError("DriveParams: rf carrier must equal the MW Rabi frequency (omega_rf = Omega_mw)");
    }
  }
  if (detuning_overrides.size() > system.size()) throw InputError("DriveParams: more detuning overrides than nuclei");
  schedule.validate();
  for (double d : static_detunings(system, *this)) {
    if (!std::isfinite(d)) throw InputError("DriveParams: derived detuning is not finite");
  }
}

void NoiseParams::validate(std::size_t n_nuclei) const {
  if (gamma.size() > n_nuclei || dephasing.size() > n_nuclei) throw InputError("NoiseParams: more rates than nuclei");
  for (double g : gamma)
    if (!(g >= 0) || !std::isfinite(g)) throw InputError("NoiseParams: rates must be finite and >= 0");
  for (double g : dephasing)
    if (!(g >= 0) || !std::isfinite(g)) throw InputError("NoiseParams: rates must be finite and >= 0");
}

double detuning_of(const NuclearSpin& nucleus, const DriveParams& drive, const PhysicalConstants& constants) {
  return constants.gamma_n * drive.b0 + nucleus.a_par / 2.0 - drive.omega_rf;
}

std::vector<double> static_detunings(const SpinSystem& system, const DriveParams& drive) {
  std::vector<double> out(system.size());
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (i < drive.detuning_overrides.size() && drive.detuning_overrides[i]) {
      out[i] = *drive.detuning_overrides[i];
    } else {
      out[i] = detuning_of(system.nucleus(i), drive, system.constants());
    }
  }
  return out;
}

std::vector<double> detunings_at(const SpinSystem& system, const DriveParams& drive, double t) {
  auto out = static_detunings(system, drive);
  if (!drive.schedule.time_dependent() || system.size() < 2) return out;
  const auto [a, b] = system.pair();
  const double mean = 0.5 * (out[a] + out[b]);
  const double orientation = out[b] >= out[a] ? 1.0 : -1.0;
  const double imbalance = drive.schedule.imbalance(t);
  out[a] = mean - orientation * imbalance;
  out[b] = mean + orientation * imbalance;
  return out;
}

double pair_imbalance(const SpinSystem& system, const DriveParams& drive) {
  if (system.size() < 2) return 0.0;
  const auto d = static_detunings(system, drive);
  return std::abs(d[system.pair().first] - d[system.pair().second]) / 2.0;
}

namespace {

CMatrix local_spin_half(OpKind kind) {
  // Spin-1/2 with basis {|0>, |1>} = {|up>, |down>} for nuclei and
  // {|+x>, |-x>} for the NV; raising maps index 1 -> 0.
  switch (kind) {
    case OpKind::Ix: return {{0.0, 0.5}, {0.5, 0.0}};
    case OpKind::Iy: return {{0.0, -0.5 * kI}, {0.5 * kI, 0.0}};
    case OpKind::Iz:
    case OpKind::sigma_z: return {{0.5, 0.0}, {0.0, -0.5}};
    case OpKind::Iplus:
    case OpKind::sigma_plus: return {{0.0, 1.0}, {0.0, 0.0}};
    case OpKind::Iminus:
    case OpKind::sigma_minus: return {{0.0, 0.0}, {1.0, 0.0}};
  }
  throw InputError("unknown operator kind");
}

bool is_nv_kind(OpKind kind) {
  return kind == OpKind::sigma_z || kind == OpKind::sigma_plus || kind == OpKind::sigma_minus;
}

CMatrix embed(const CMatrix& local, std::size_t factor, std::size_t n_factors) {
  CMatrix out = factor == 0 ? local : CMatrix::identity(2);
  for (std::size_t k = 1; k < n_factors; ++k) out = kron(out, k == factor ? local : CMatrix::identity(2));
  return out;
}

/// g [Iz Iz - (Ix Ix + Iy Iy)/2] between factors fi and fj of an n-factor space.
CMatrix dipolar_term(double g, std::size_t fi, std::size_t fj, std::size_t n_factors) {
  auto op = [&](OpKind k, std::size_t f) { return embed(local_spin_half(k), f, n_factors); };
  CMatrix zz = op(OpKind::Iz, fi) * op(OpKind::Iz, fj);
  CMatrix xx = op(OpKind::Ix, fi) * op(OpKind::Ix, fj);
  CMatrix yy = op(OpKind::Iy, fi) * op(OpKind::Iy, fj);
  zz.add_scaled(-0.5, xx);
  zz.add_scaled(-0.5, yy);
  return zz * cplx(g);
}

/// Nuclear part shared by the full and local Hamiltonians; `offset` is the
/// factor index of nucleus 0 (1 in the full space, 0 in the local one).
CMatrix nuclear_terms(const SpinSystem& system, const DriveParams& drive, double t, std::size_t offset) {
  const std::size_t n_factors = system.size() + offset;
  const auto delta = detunings_at(system, drive, t);
  CMatrix h(std::size_t{1} << n_factors);
  for (std::size_t i = 0; i < system.size(); ++i) {
    h.add_scaled(delta[i], embed(local_spin_half(OpKind::Iz), i + offset, n_factors));
    h.add_scaled(drive.omega_rf_rabi, embed(local_spin_half(OpKind::Ix), i + offset, n_factors));
  }
  for (std::size_t i = 0; i < system.size(); ++i)
    for (std::size_t j = i + 1; j < system.size(); ++j) {
      const double g = system.dipolar(i, j);
      if (g != 0.0) h += dipolar_term(g, i + offset, j + offset, n_factors);
    }
  return h;
}

}  // namespace

CMatrix site_operator(OpKind kind, std::size_t site, const SpinSystem& system) {
  const std::size_t n_factors = system.size() + 1;
  if (site >= n_factors) throw InputError("site_operator: site out of range");
  if ((site == 0) != is_nv_kind(kind)) {
    throw InputError("site_operator: sigma_* kinds act on site 0 (NV), I* kinds on nuclear sites");
  }
  return embed(local_spin_half(kind), site, n_factors);
}

CMatrix nuclear_operator(OpKind kind, std::size_t nucleus, std::size_t n_nuclei) {
  if (is_nv_kind(kind)) throw InputError("nuclear_operator: NV operator kind requested");
  if (nucleus >= n_nuclei) throw InputError("nuclear_operator: nucleus out of range");
  return embed(local_spin_half(kind), nucleus, n_nuclei);
}

CMatrix build_full_hamiltonian(const SpinSystem& system, const DriveParams& drive, double t) {
  CMatrix h = nuclear_terms(system, drive, t, 1);
  const CMatrix sp = site_operator(OpKind::sigma_plus, 0, system);
  for (std::size_t i = 0; i < system.size(); ++i) {
    const double coupling = system.nucleus(i).a_perp / 4.0;
    if (coupling == 0.0) continue;
    // (a_perp/4) sigma_+ I^-; the Hermitian part below adds the conjugate term.
    CMatrix flip = sp * site_operator(OpKind::Iminus, i + 1, system);
    h.add_scaled(2.0 * coupling, flip);
  }
  return h.hermitian_part();
}

CMatrix build_local_hamiltonian(const SpinSystem& system, const DriveParams& drive, double t) {
  return nuclear_terms(system, drive, t, 0).hermitian_part();
}

double gamma_reset(double t_re, double t1_rho) {
  if (!(t_re > 0) || !std::isfinite(t_re)) throw InputError("gamma_reset: t_re must be positive and finite");
  if (!(t1_rho > 0)) throw InputError("gamma_reset: T1rho must be positive (or infinite)");
  return 1.0 / t1_rho + 1.0 / t_re;
}

cplx alpha_coefficient(double a_perp, double delta, double gamma_n_reset) {
  if (!(gamma_n_reset > 0)) throw InputError("alpha_coefficient: Gamma_N must be positive");
  return std::sqrt(gamma_n_reset) * (a_perp / 4.0) / cplx(-delta, gamma_n_reset / 2.0);
}

CMatrix collective_lowering(std::span<const cplx> alphas) {
  const std::size_t n = alphas.size();
  CMatrix l(std::size_t{1} << n);
  for (std::size_t i = 0; i < n; ++i) {
    if (alphas[i] != cplx{}) l.add_scaled(alphas[i], nuclear_operator(OpKind::Iminus, i, n));
  }
  return l;
}

std::vector<CMatrix> build_jump_operators(const SpinSystem& system, const DriveParams& drive,
                                          double gamma_n_reset, const NoiseParams& noise,
                                          AlphaPhase phase, double t) {
  const auto delta = detunings_at(system, drive, t);
  std::vector<cplx> alphas(system.size());
  for (std::size_t i = 0; i < system.size(); ++i) {
    alphas[i] = alpha_coefficient(system.nucleus(i).a_perp, delta[i], gamma_n_reset);
    if (phase == AlphaPhase::common) alphas[i] = std::abs(alphas[i]);
  }
  return build_jump_operators(system, alphas, noise);
}

std::vector<CMatrix> build_jump_operators(const SpinSystem& system, std::span<const cplx> alphas,
                                          const NoiseParams& noise) {
  noise.validate(system.size());
  if (alphas.size() != system.size()) throw InputError("build_jump_operators: need one alpha per nucleus");
  for (const auto& a : alphas) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw InputError("build_jump_operators: non-finite alpha");
  }
  std::vector<CMatrix> jumps;
  jumps.push_back(collective_lowering(alphas));
  for (std::size_t i = 0; i < system.size(); ++i) {
    const double g = noise.gamma_of(i);
    if (g > 0) jumps.push_back(nuclear_operator(OpKind::Iminus, i, system.size()) * cplx(std::sqrt(g)));
  }
  for (std::size_t i = 0; i < system.size(); ++i) {
    const double g = noise.dephasing_of(i);
    if (g > 0) jumps.push_back(nuclear_operator(OpKind::Iz, i, system.size()) * cplx(std::sqrt(2.0 * g)));
  }
  return jumps;
}

}  // namespace nvs
