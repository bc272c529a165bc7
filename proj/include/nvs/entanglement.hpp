#pragma once

#include <array>

#include "nvs/linalg/cmatrix.hpp"

namespace nvs {

// Pair basis is the computational {|uu>, |ud>, |du>, |dd>}; the named states
// below are the only way observables reach into it.
std::array<cplx, 4> state_up_up();
std::array<cplx, 4> state_down_down();
std::array<cplx, 4> state_singlet();   // (|ud> - |du>)/sqrt2
std::array<cplx, 4> state_triplet0();  // (|ud> + |du>)/sqrt2

struct PairObservables {
  double pop_S = 0.0;
  double pop_T = 0.0;
  double pop_uu = 0.0;
  double pop_dd = 0.0;
  double ln_value = 0.0;
  double singlet_fidelity = 0.0;

  bool operator==(const PairObservables&) const = default;
};

/// Throws InputError unless rho is a 4x4 density matrix (Hermitian, unit trace
/// to 1e-8, smallest eigenvalue >= -1e-7).
void require_pair_state(const CMatrix& rho, const char* context);

/// log2 || rho^{T_B} ||_1, clamped at zero.
double log_negativity(const CMatrix& rho_pair);

/// N (sqrt2 Delta_1 |dd> - Omega_rf |S>), N = 1/sqrt(2 Delta_1^2 + Omega_rf^2).
/// Stationary for equal couplings and Delta_2 = -Delta_1.
std::array<cplx, 4> analytic_steady_state(double delta1, double omega_rf);

/// Logarithmic negativity of analytic_steady_state, in closed form:
/// log2(1 + Omega^2 / (2 Delta_1^2 + Omega^2)).
double analytic_ln(double delta1, double omega_rf);

PairObservables pair_populations(const CMatrix& rho_pair);

/// Detuning-to-drive ratio Delta/Omega_rf = sqrt(k/2) that maximizes the
/// steady-state LN to first order in k = sqrt(Gamma_j)/|alpha_j|.
double optimal_detuning_ratio(double k);

}  // namespace nvs
