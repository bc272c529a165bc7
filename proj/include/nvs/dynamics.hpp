#pragma once
// Two propagation backends for the nuclear pair:
//   * the exact reset map on the joint NV + nuclei space, and
//   * the effective nuclei-only Lindblad master equation,
// plus Liouvillian construction and steady-state analysis.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nvs/entanglement.hpp"
#include "nvs/linalg/cmatrix.hpp"
#include "nvs/model.hpp"

namespace nvs {

enum class ResetImperfection {
  /// NV reinitialized every period to p|-x><-x| + (1-p)|+x><+x|.
  mixed_state,
  /// With probability p the NV is reinitialized to |-x>; otherwise the reset
  /// fails and the NV carries its post-segment state into the next period.
  skipped_reset,
};

struct ResetProtocol {
  double t_re = 0.0;  // s
  double polarization = 1.0;
  double t1_rho = std::numeric_limits<double>::infinity();
  bool nv_decay_in_segment = false;
  ResetImperfection imperfection = ResetImperfection::mixed_state;

  void validate() const;
};

/// p|-x><-x| + (1-p)|+x><+x| in the {|+x>, |-x>} basis.
CMatrix nv_reset_state(double polarization);

struct Trajectory {
  std::vector<double> times;
  std::vector<CMatrix> pair_states;
  std::vector<PairObservables> observables;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return times.size(); }
  void append(double t, CMatrix pair_state);
};

/// Evolution over one reset period on the joint space: unitary, or a
/// superoperator when the NV decays during the segment.
class SegmentPropagator {
 public:
  static SegmentPropagator unitary(CMatrix u);
  static SegmentPropagator superoperator(CMatrix propagator, std::size_t hilbert_dim);

  std::size_t hilbert_dim() const noexcept { return dim_; }
  CMatrix apply(const CMatrix& rho) const;

 private:
  CMatrix op_;
  CMatrix op_adjoint_;
  std::size_t dim_ = 0;
  bool unitary_ = true;
};

/// One period: evolve, trace out the NV, re-tensor with the reset state.
CMatrix reset_step(const CMatrix& rho_joint, const CMatrix& u_segment, const ResetProtocol& protocol);
CMatrix reset_step(const CMatrix& rho_joint, const SegmentPropagator& segment, const ResetProtocol& protocol);

/// Builds the per-period propagator at time t (segment start).
SegmentPropagator make_segment(const SpinSystem& system, const DriveParams& drive,
                               const ResetProtocol& protocol, double t);

/// Reduced state of the target pair from a nuclei-only density matrix, in the
/// order (pair.first, pair.second).
CMatrix reduce_to_pair(const CMatrix& rho_nuclei, const SpinSystem& system);

/// 1 / sqrt(sum a_perp^2); reset periods at or beyond it leave the
/// perturbative regime.
double perturbative_bound(const SpinSystem& system);

Trajectory simulate_full(const SpinSystem& system, const DriveParams& drive, const ResetProtocol& protocol,
                         const CMatrix& rho0_nuclei, double t_total, std::size_t sample_every = 10);

/// Generator under column-major vectorization.
struct Liouvillian {
  std::size_t dim = 0;  // Hilbert-space dimension
  CMatrix matrix;       // dim^2 x dim^2
};

Liouvillian build_liouvillian(const CMatrix& h, const std::vector<CMatrix>& jumps);

/// -i[H, rho] + sum_c D[c] rho, evaluated directly on matrices.
CMatrix lindblad_rhs(const CMatrix& h, const std::vector<CMatrix>& jumps, const CMatrix& rho);

struct EffectiveModel {
  SpinSystem system;
  DriveParams drive;
  double gamma_n_reset = 0.0;
  NoiseParams noise;
  AlphaPhase alpha_phase = AlphaPhase::formula;
  /// When non-empty, used as alpha_j in place of the reset-derived values.
  std::vector<cplx> alpha_override;

  CMatrix hamiltonian(double t) const { return build_local_hamiltonian(system, drive, t); }
  std::vector<CMatrix> jumps(double t) const {
    if (!alpha_override.empty()) return build_jump_operators(system, alpha_override, noise);
    return build_jump_operators(system, drive, gamma_n_reset, noise, alpha_phase, t);
  }
  Liouvillian liouvillian(double t = 0.0) const { return build_liouvillian(hamiltonian(t), jumps(t)); }
};

/// Integrates the effective master equation with exact propagators over
/// steps of at most dt_max; time-dependent schedules are held constant over
/// each step. Samples every `sample_every` steps plus the final time.
Trajectory simulate_effective(const EffectiveModel& model, const CMatrix& rho0_nuclei, double t_total,
                              double dt_max, std::size_t sample_every = 1);

inline constexpr double kZeroModeTolerance = 1e-8;

std::size_t zero_mode_count(const Liouvillian& liouvillian, double tol_rel = kZeroModeTolerance);

/// Unique steady state from the linear system with the trace condition in
/// place of one row. Throws NonUniqueSteadyState if the kernel is not 1-D.
CMatrix steady_state(const Liouvillian& liouvillian);

/// Smallest nonzero |lambda| (the spectral gap), or 0 if every mode is zero.
double spectral_gap(const Liouvillian& liouvillian, double tol_rel = kZeroModeTolerance);

/// First sample time at which LN >= threshold and stays >= threshold - 0.005.
std::optional<double> convergence_time(const Trajectory& trajectory, double threshold = 0.96);

}  // namespace nvs
