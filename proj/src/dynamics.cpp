#include "nvs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvs/errors.hpp"
#include "nvs/linalg/ops.hpp"

namespace nvs {

namespace {

// Joint spaces above this dimension are too large for the superoperator
// segment propagator (dim^2 x dim^2 dense).
constexpr std::size_t kMaxDecayJointDim = 16;

void require_density_matrix(const CMatrix& rho, std::size_t dim, const char* context) {
  if (rho.dim() != dim) {
    throw InputError(std::string(context) + ": initial state has dimension " + std::to_string(rho.dim()) +
                     ", expected " + std::to_string(dim));
  }
  if (!rho.all_finite()) throw InputError(std::string(context) + ": initial state has non-finite entries");
  if (std::abs(rho.trace() - 1.0) > 1e-8) throw InputError(std::string(context) + ": initial state trace != 1");
  const double lmin = min_eigenvalue(rho);
  if (lmin < -1e-8) {
    throw InputError(std::string(context) + ": initial state is not positive (min eigenvalue " +
                     std::to_string(lmin) + ")");
  }
}

CMatrix swap_qubits(const CMatrix& rho) {
  // |ab> -> |ba> on two qubits: exchange indices 1 and 2.
  static constexpr std::size_t perm[4] = {0, 2, 1, 3};
  CMatrix out(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) out(perm[i], perm[j]) = rho(i, j);
  return out;
}

CMatrix trace_out_nv(const CMatrix& rho_joint) {
  return partial_trace(rho_joint, SubsystemDims{2, rho_joint.dim() / 2}, {1});
}

}  // namespace

void ResetProtocol::validate() const {
  if (!(t_re > 0) || !std::isfinite(t_re)) throw InputError("ResetProtocol: t_re must be positive and finite");
  if (!(polarization >= 0.5 && polarization <= 1.0)) throw InputError("ResetProtocol: polarization must lie in [0.5, 1]");
  if (!(t1_rho > 0)) throw InputError("ResetProtocol: T1rho must be positive or infinite");
}

CMatrix nv_reset_state(double polarization) {
  return CMatrix::diagonal({cplx(1.0 - polarization), cplx(polarization)});
}

void Trajectory::append(double t, CMatrix pair_state) {
  pair_state = pair_state.hermitian_part();
  const double tr = pair_state.trace().real();
  const double lmin = min_eigenvalue(pair_state);
  if (std::abs(tr - 1.0) > 1e-8 || lmin < -1e-7) {
    std::ostringstream msg;
    msg << "trajectory state at t = " << t << " s lost validity: trace " << tr << ", min eigenvalue " << lmin;
    throw NumericalError(msg.str());
  }
  observables.push_back(pair_populations(pair_state));
  times.push_back(t);
  pair_states.push_back(std::move(pair_state));
}

SegmentPropagator SegmentPropagator::unitary(CMatrix u) {
  SegmentPropagator s;
  s.dim_ = u.dim();
  s.op_adjoint_ = u.adjoint();
  s.op_ = std::move(u);
  s.unitary_ = true;
  return s;
}

SegmentPropagator SegmentPropagator::superoperator(CMatrix propagator, std::size_t hilbert_dim) {
  if (propagator.dim() != hilbert_dim * hilbert_dim) throw InputError("SegmentPropagator: superoperator size mismatch");
  SegmentPropagator s;
  s.dim_ = hilbert_dim;
  s.op_ = std::move(propagator);
  s.unitary_ = false;
  return s;
}

CMatrix SegmentPropagator::apply(const CMatrix& rho) const {
  if (rho.dim() != dim_) throw InputError("SegmentPropagator: state dimension mismatch");
  if (unitary_) return op_ * rho * op_adjoint_;
  return unvec(op_.apply(vec(rho)), dim_);
}

CMatrix reset_step(const CMatrix& rho_joint, const CMatrix& u_segment, const ResetProtocol& protocol) {
  if (rho_joint.dim() != u_segment.dim()) throw InputError("reset_step: propagator and state dimensions differ");
  return reset_step(rho_joint, SegmentPropagator::unitary(u_segment), protocol);
}

CMatrix reset_step(const CMatrix& rho_joint, const SegmentPropagator& segment, const ResetProtocol& protocol) {
  if (rho_joint.dim() < 4 || rho_joint.dim() % 2 != 0) throw InputError("reset_step: joint state must be NV x nuclei");
  if (rho_joint.dim() != segment.hilbert_dim()) throw InputError("reset_step: propagator and state dimensions differ");
  const CMatrix evolved = segment.apply(rho_joint);
  const CMatrix nuclei = trace_out_nv(evolved);
  switch (protocol.imperfection) {
    case ResetImperfection::mixed_state:
      return kron(nv_reset_state(protocol.polarization), nuclei);
    case ResetImperfection::skipped_reset: {
      CMatrix out = kron(nv_reset_state(1.0), nuclei) * cplx(protocol.polarization);
      out.add_scaled(1.0 - protocol.polarization, evolved);
      return out;
    }
  }
  throw InputError("reset_step: unknown imperfection model");
}

SegmentPropagator make_segment(const SpinSystem& system, const DriveParams& drive, const ResetProtocol& protocol,
                               double t) {
  const CMatrix h = build_full_hamiltonian(system, drive, t);
  if (!protocol.nv_decay_in_segment || !std::isfinite(protocol.t1_rho)) {
    return SegmentPropagator::unitary(expm_unitary(h, protocol.t_re));
  }
  if (system.full_dim() > kMaxDecayJointDim) {
    throw InputError("NV decay within segments supports joint dimensions up to " +
                     std::to_string(kMaxDecayJointDim) + " (three nuclei)");
  }
  // Relaxation of the dressed qubit toward I/2 at rate 1/T1rho.
  const double rate = 1.0 / protocol.t1_rho;
  std::vector<CMatrix> jumps{site_operator(OpKind::sigma_plus, 0, system) * cplx(std::sqrt(rate / 2.0)),
                             site_operator(OpKind::sigma_minus, 0, system) * cplx(std::sqrt(rate / 2.0))};
  const Liouvillian l = build_liouvillian(h, jumps);
  return SegmentPropagator::superoperator(expm_general(l.matrix * cplx(protocol.t_re)), h.dim());
}

CMatrix reduce_to_pair(const CMatrix& rho_nuclei, const SpinSystem& system) {
  if (system.size() < 2) throw InputError("reduce_to_pair: system has no pair");
  const auto [a, b] = system.pair();
  CMatrix pair = system.size() == 2 ? rho_nuclei
                                    : partial_trace(rho_nuclei, SubsystemDims::uniform(system.size()), {a, b});
  return a < b ? pair : swap_qubits(pair);
}

double perturbative_bound(const SpinSystem& system) {
  double s = 0.0;
  for (const auto& n : system.nuclei()) s += n.a_perp * n.a_perp;
  return s > 0 ? 1.0 / std::sqrt(s) : std::numeric_limits<double>::infinity();
}

Trajectory simulate_full(const SpinSystem& system, const DriveParams& drive, const ResetProtocol& protocol,
                         const CMatrix& rho0_nuclei, double t_total, std::size_t sample_every) {
  protocol.validate();
  drive.validate(system);
  if (system.size() < 2) throw InputError("simulate_full: a target pair requires at least two nuclei");
  if (sample_every == 0) throw InputError("simulate_full: sample_every must be >= 1");
  require_density_matrix(rho0_nuclei, system.nuclear_dim(), "simulate_full");
  if (!(t_total >= protocol.t_re * (1.0 - 1e-9))) throw InputError("simulate_full: t_total must be >= t_re");
  const auto n_resets = static_cast<std::size_t>(std::floor(t_total / protocol.t_re + 1e-9));

  Trajectory traj;
  if (protocol.t_re >= perturbative_bound(system)) {
    std::ostringstream w;
    w << "reset period " << protocol.t_re * 1e6 << " us is not below the perturbative bound "
      << perturbative_bound(system) * 1e6 << " us";
    traj.warnings.push_back(w.str());
  }

  const double p0 = protocol.imperfection == ResetImperfection::mixed_state ? protocol.polarization : 1.0;
  CMatrix rho = kron(nv_reset_state(p0), rho0_nuclei.hermitian_part());
  traj.append(0.0, reduce_to_pair(rho0_nuclei, system));

  const bool time_dependent = drive.schedule.time_dependent();
  SegmentPropagator segment = make_segment(system, drive, protocol, 0.0);
  for (std::size_t k = 1; k <= n_resets; ++k) {
    const double t_start = static_cast<double>(k - 1) * protocol.t_re;
    if (time_dependent && k > 1) segment = make_segment(system, drive, protocol, t_start);
    rho = reset_step(rho, segment, protocol);
    if (k % sample_every == 0 || k == n_resets) {
      traj.append(static_cast<double>(k) * protocol.t_re, reduce_to_pair(trace_out_nv(rho), system));
    }
  }
  return traj;
}

Liouvillian build_liouvillian(const CMatrix& h, const std::vector<CMatrix>& jumps) {
  const CMatrix herm = checked_hermitian(h, "build_liouvillian");
  const std::size_t d = herm.dim();
  for (const auto& c : jumps) {
    if (c.dim() != d) throw InputError("build_liouvillian: jump operator dimension differs from Hamiltonian");
  }
  const CMatrix id = CMatrix::identity(d);
  // vec(A X B) = (B^T kron A) vec(X)
  CMatrix l = kron(id, herm) * cplx(0.0, -1.0);
  l.add_scaled(kI, kron(herm.transpose(), id));
  for (const auto& c : jumps) {
    const CMatrix cdc = c.adjoint() * c;
    l += kron(c.conj(), c);
    l.add_scaled(-0.5, kron(id, cdc));
    l.add_scaled(-0.5, kron(cdc.transpose(), id));
  }
  return {d, std::move(l)};
}

CMatrix lindblad_rhs(const CMatrix& h, const std::vector<CMatrix>& jumps, const CMatrix& rho) {
  CMatrix out = commutator(h, rho) * cplx(0.0, -1.0);
  for (const auto& c : jumps) {
    const CMatrix cd = c.adjoint();
    const CMatrix cdc = cd * c;
    out += c * rho * cd;
    out.add_scaled(-0.5, cdc * rho);
    out.add_scaled(-0.5, rho * cdc);
  }
  return out;
}

Trajectory simulate_effective(const EffectiveModel& model, const CMatrix& rho0_nuclei, double t_total,
                              double dt_max, std::size_t sample_every) {
  if (model.system.size() < 2) throw InputError("simulate_effective: a target pair requires at least two nuclei");
  if (!(dt_max > 0)) throw InputError("simulate_effective: dt_max must be positive");
  if (!(t_total > 0)) throw InputError("simulate_effective: t_total must be positive");
  if (sample_every == 0) throw InputError("simulate_effective: sample_every must be >= 1");
  model.drive.validate(model.system);
  model.noise.validate(model.system.size());
  require_density_matrix(rho0_nuclei, model.system.nuclear_dim(), "simulate_effective");

  const auto steps = static_cast<std::size_t>(std::ceil(t_total / dt_max - 1e-9));
  const double dt = t_total / static_cast<double>(steps);
  const std::size_t d = model.system.nuclear_dim();
  const bool time_dependent = model.drive.schedule.time_dependent();

  Trajectory traj;
  std::vector<cplx> v = vec(rho0_nuclei.hermitian_part());
  const double trace0 = rho0_nuclei.trace().real();
  traj.append(0.0, reduce_to_pair(rho0_nuclei, model.system));

  CMatrix propagator = expm_general(model.liouvillian(0.0).matrix * cplx(dt));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_start = static_cast<double>(k - 1) * dt;
    if (time_dependent && k > 1) propagator = expm_general(model.liouvillian(t_start).matrix * cplx(dt));
    v = propagator.apply(v);
    if (k % sample_every == 0 || k == steps) {
      const CMatrix rho = unvec(v, d);
      const double drift = std::abs(rho.trace().real() - trace0);
      if (drift > 1e-6) {
        std::ostringstream msg;
        msg << "simulate_effective: trace drift " << drift << " at step " << k << " (t = " << k * dt
            << " s, dt = " << dt << " s)";
        throw NumericalError(msg.str());
      }
      traj.append(static_cast<double>(k) * dt, reduce_to_pair(rho, model.system));
    }
  }
  return traj;
}

namespace {

std::vector<double> sorted_magnitudes(const Liouvillian& liouvillian) {
  std::vector<double> mags;
  for (const auto& z : general_eigenvalues(liouvillian.matrix)) mags.push_back(std::abs(z));
  std::sort(mags.begin(), mags.end());
  return mags;
}

}  // namespace

std::size_t zero_mode_count(const Liouvillian& liouvillian, double tol_rel) {
  const auto mags = sorted_magnitudes(liouvillian);
  if (mags.empty()) return 0;
  const double scale = mags.back();
  if (scale == 0.0) return mags.size();
  return static_cast<std::size_t>(std::count_if(mags.begin(), mags.end(), [&](double m) { return m <= tol_rel * scale; }));
}

double spectral_gap(const Liouvillian& liouvillian, double tol_rel) {
  const auto mags = sorted_magnitudes(liouvillian);
  if (mags.empty() || mags.back() == 0.0) return 0.0;
  for (double m : mags)
    if (m > tol_rel * mags.back()) return m;
  return 0.0;
}

CMatrix steady_state(const Liouvillian& liouvillian) {
  const std::size_t zeros = zero_mode_count(liouvillian);
  if (zeros != 1) throw NonUniqueSteadyState(zeros);
  const std::size_t d = liouvillian.dim;
  CMatrix a = liouvillian.matrix;
  std::vector<cplx> b(d * d);
  // Row 0 is linearly dependent on the other diagonal rows (trace
  // preservation); replace it by tr(rho) = 1.
  for (std::size_t j = 0; j < d * d; ++j) a(0, j) = 0.0;
  for (std::size_t i = 0; i < d; ++i) a(0, i * (d + 1)) = 1.0;
  b[0] = 1.0;
  CMatrix rho = unvec(solve_linear(a, b), d).hermitian_part();
  rho *= cplx(1.0 / rho.trace().real());
  const double lmin = min_eigenvalue(rho);
  if (lmin < -1e-9) {
    throw NumericalError("steady_state: solution is not positive (min eigenvalue " + std::to_string(lmin) + ")");
  }
  return rho;
}

std::optional<double> convergence_time(const Trajectory& trajectory, double threshold) {
  const auto& obs = trajectory.observables;
  // Scan backwards: the last index after which LN never drops below the band.
  std::optional<double> result;
  for (std::size_t k = obs.size(); k-- > 0;) {
    if (obs[k].ln_value < threshold - 0.005) break;
    if (obs[k].ln_value >= threshold) result = trajectory.times[k];
  }
  return result;
}

}  // namespace nvs
