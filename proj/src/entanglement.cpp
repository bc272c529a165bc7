#include "nvs/entanglement.hpp"

#include <cmath>
#include <string>

#include "nvs/errors.hpp"
#include "nvs/linalg/ops.hpp"

namespace nvs {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;

double expectation(const CMatrix& rho, const std::array<cplx, 4>& v) {
  cplx s{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) s += std::conj(v[i]) * rho(i, j) * v[j];
  return s.real();
}
}  // namespace

std::array<cplx, 4> state_up_up() { return {1.0, 0.0, 0.0, 0.0}; }
std::array<cplx, 4> state_down_down() { return {0.0, 0.0, 0.0, 1.0}; }
std::array<cplx, 4> state_singlet() { return {0.0, kInvSqrt2, -kInvSqrt2, 0.0}; }
std::array<cplx, 4> state_triplet0() { return {0.0, kInvSqrt2, kInvSqrt2, 0.0}; }

void require_pair_state(const CMatrix& rho, const char* context) {
  if (rho.dim() != 4) throw InputError(std::string(context) + ": expected a 4x4 two-qubit density matrix");
  if (!rho.all_finite()) throw InputError(std::string(context) + ": non-finite entries");
  const cplx tr = rho.trace();
  if (std::abs(tr - 1.0) > 1e-8) {
    throw InputError(std::string(context) + ": trace " + std::to_string(tr.real()) + " differs from 1");
  }
  const double lmin = min_eigenvalue(rho);  // also enforces Hermiticity
  if (lmin < -1e-7) {
    throw InputError(std::string(context) + ": negative eigenvalue " + std::to_string(lmin));
  }
}

double log_negativity(const CMatrix& rho_pair) {
  require_pair_state(rho_pair, "log_negativity");
  const CMatrix pt = partial_transpose(rho_pair.hermitian_part(), SubsystemDims{2, 2}, 1);
  const double norm = trace_norm(pt);
  if (norm <= 1.0 + 1e-12) return 0.0;
  return std::log2(norm);
}

std::array<cplx, 4> analytic_steady_state(double delta1, double omega_rf) {
  const double denom = 2.0 * delta1 * delta1 + omega_rf * omega_rf;
  if (denom == 0.0) throw InputError("analytic_steady_state: Delta_1 and Omega_rf cannot both vanish");
  const double nc = 1.0 / std::sqrt(denom);
  const auto dd = state_down_down();
  const auto s = state_singlet();
  std::array<cplx, 4> psi{};
  for (std::size_t i = 0; i < 4; ++i) psi[i] = nc * (std::sqrt(2.0) * delta1 * dd[i] - omega_rf * s[i]);
  return psi;
}

double analytic_ln(double delta1, double omega_rf) {
  const double denom = 2.0 * delta1 * delta1 + omega_rf * omega_rf;
  if (denom == 0.0) throw InputError("analytic_ln: Delta_1 and Omega_rf cannot both vanish");
  // For a pure state the negativity is 2 s1 s2 over the Schmidt coefficients;
  // here s1 s2 = |det C| = Omega^2 / (2 (2 Delta^2 + Omega^2)).
  return std::log2(1.0 + omega_rf * omega_rf / denom);
}

PairObservables pair_populations(const CMatrix& rho_pair) {
  PairObservables obs;
  obs.ln_value = log_negativity(rho_pair);  // validates
  obs.pop_uu = expectation(rho_pair, state_up_up());
  obs.pop_dd = expectation(rho_pair, state_down_down());
  obs.pop_S = expectation(rho_pair, state_singlet());
  obs.pop_T = expectation(rho_pair, state_triplet0());
  obs.singlet_fidelity = obs.pop_S;
  return obs;
}

double optimal_detuning_ratio(double k) {
  if (!(k >= 0)) throw InputError("optimal_detuning_ratio: k must be >= 0");
  return std::sqrt(k / 2.0);
}

}  // namespace nvs
