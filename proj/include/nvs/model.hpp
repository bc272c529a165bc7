#pragma once
// System description and construction of the Hamiltonians and jump operators.
//
// Tensor-factor convention, used everywhere: factor 0 is the NV dressed qubit
// with basis {|+x>, |-x>}, factors 1..N are the nuclei in declaration order
// with basis {|up>, |down>}. Nuclei-only operators drop factor 0.
//
// Units: angular frequencies in rad/s, times in s, lengths in m.

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvs/linalg/cmatrix.hpp"

namespace nvs {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct PhysicalConstants {
  double gamma_n = kTwoPi * 10.7084e6;   // 13C, rad/(s T)
  double gamma_e = kTwoPi * 28.024e9;    // electron, rad/(s T)
  double mu0_over_4pi = 1e-7;            // T^2 m^3 / J
  double hbar = 1.054571817e-34;         // J s

  void validate() const;
};

using Vec3 = std::array<double, 3>;

struct NuclearSpin {
  double a_par = 0.0;   // signed
  double a_perp = 0.0;  // >= 0
  std::optional<Vec3> position;
  std::string label;

  void validate() const;
};

/// NV-dressed qubit plus 1..6 nuclei, a designated target pair and the
/// symmetric internuclear dipolar couplings.
class SpinSystem {
 public:
  static constexpr std::size_t kMaxNuclei = 6;

  SpinSystem(std::vector<NuclearSpin> nuclei, std::pair<std::size_t, std::size_t> pair,
             PhysicalConstants constants = {});

  /// Sets g_ij = g_ji. Diagonal entries are rejected.
  void set_dipolar(std::size_t i, std::size_t j, double g);
  double dipolar(std::size_t i, std::size_t j) const;
  bool has_dipolar() const noexcept;

  const std::vector<NuclearSpin>& nuclei() const noexcept { return nuclei_; }
  const NuclearSpin& nucleus(std::size_t i) const { return nuclei_.at(i); }
  std::size_t size() const noexcept { return nuclei_.size(); }
  std::pair<std::size_t, std::size_t> pair() const noexcept { return pair_; }
  const PhysicalConstants& constants() const noexcept { return constants_; }

  std::size_t nuclear_dim() const noexcept { return std::size_t{1} << nuclei_.size(); }
  std::size_t full_dim() const noexcept { return 2 * nuclear_dim(); }

 private:
  std::vector<NuclearSpin> nuclei_;
  std::pair<std::size_t, std::size_t> pair_;
  std::vector<double> dipolar_;  // row-major size() x size()
  PhysicalConstants constants_;
};

/// Time dependence of the pair's detuning imbalance Delta(t).
struct DetuningSchedule {
  enum class Kind { constant, exponential };
  Kind kind = Kind::constant;
  double delta0 = 0.0;     // rad/s
  double rate = 0.0;       // 1/s
  double delta_inf = 0.0;  // rad/s

  static DetuningSchedule constant() { return {}; }
  static DetuningSchedule exponential(double delta0, double rate, double delta_inf);

  bool time_dependent() const noexcept { return kind == Kind::exponential; }
  /// delta_inf + delta0 exp(-rate t); only meaningful for the exponential kind.
  double imbalance(double t) const noexcept;
  void validate() const;
};

struct DriveParams {
  double omega_mw = 0.0;       // MW Rabi frequency
  double omega_rf_rabi = 0.0;  // rf Rabi frequency
  double b0 = 0.0;             // tesla
  double omega_rf = 0.0;       // rf carrier
  DetuningSchedule schedule;
  /// Per-nucleus detunings that replace the derived value when present.
  std::vector<std::optional<double>> detuning_overrides;
  /// When true, omega_rf must equal omega_mw.
  bool enforce_lock = true;

  void validate(const SpinSystem& system) const;
};

struct NoiseParams {
  std::vector<double> gamma;      // lowering-channel rate per nucleus, 1/s
  std::vector<double> dephasing;  // optional extra Iz channel per nucleus, 1/s

  static NoiseParams none() { return {}; }
  double gamma_of(std::size_t i) const { return i < gamma.size() ? gamma[i] : 0.0; }
  double dephasing_of(std::size_t i) const { return i < dephasing.size() ? dephasing[i] : 0.0; }
  void validate(std::size_t n_nuclei) const;
};

/// gamma_n B0 + a_par / 2 - omega_rf
double detuning_of(const NuclearSpin& nucleus, const DriveParams& drive, const PhysicalConstants& constants);

/// Static detunings with overrides applied.
std::vector<double> static_detunings(const SpinSystem& system, const DriveParams& drive);

/// Detunings at time t: the schedule reshapes the pair's imbalance around its
/// mean, keeping its orientation. Bath nuclei keep their static values.
std::vector<double> detunings_at(const SpinSystem& system, const DriveParams& drive, double t);

/// |Delta_1 - Delta_2| / 2 over the target pair.
double pair_imbalance(const SpinSystem& system, const DriveParams& drive);

enum class OpKind { Ix, Iy, Iz, Iplus, Iminus, sigma_z, sigma_plus, sigma_minus };

/// Single-site operator embedded in the full NV + nuclei space. Site 0 is the
/// NV (sigma_* kinds only), sites 1..N the nuclei (I* kinds only).
CMatrix site_operator(OpKind kind, std::size_t site, const SpinSystem& system);

/// Nuclear operator on the nuclei-only space of n_nuclei spins.
CMatrix nuclear_operator(OpKind kind, std::size_t nucleus, std::size_t n_nuclei);

CMatrix build_full_hamiltonian(const SpinSystem& system, const DriveParams& drive, double t);
CMatrix build_local_hamiltonian(const SpinSystem& system, const DriveParams& drive, double t);

/// 1/T1rho + 1/t_re. t1_rho may be +infinity.
double gamma_reset(double t_re, double t1_rho = std::numeric_limits<double>::infinity());

/// sqrt(Gamma_N) (a_perp/4) / (-Delta + i Gamma_N / 2)
cplx alpha_coefficient(double a_perp, double delta, double gamma_n_reset);

/// How the per-nucleus amplitudes enter L = sum_j alpha_j I^-_j.
///   formula: alpha_j exactly as alpha_coefficient returns it.
///   common:  |alpha_j| with a shared phase, the equal-phase regime in which
///            the dark-state analysis holds.
enum class AlphaPhase { formula, common };

/// sum_j alpha_j I^-_j on the nuclei-only space.
CMatrix collective_lowering(std::span<const cplx> alphas);

/// [L, M_1..M_N, D_1..D_N]: the collective reset-induced jump first, then the
/// nonzero lowering channels sqrt(Gamma_i) I^-_i, then any extra dephasing
/// channels sqrt(2 gamma) I^z_i. Zero-rate channels are omitted.
std::vector<CMatrix> build_jump_operators(const SpinSystem& system, const DriveParams& drive,
                                          double gamma_n_reset, const NoiseParams& noise,
                                          AlphaPhase phase = AlphaPhase::formula, double t = 0.0);

/// Same channel layout with the amplitudes alpha_j given directly.
std::vector<CMatrix> build_jump_operators(const SpinSystem& system, std::span<const cplx> alphas,
                                          const NoiseParams& noise);

}  // namespace nvs
