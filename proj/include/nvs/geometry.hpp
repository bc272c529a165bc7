#pragma once
// Dipolar couplings from positions and Monte Carlo dimer statistics in the
// diamond lattice. Lengths in meters.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nvs/model.hpp"

namespace nvs {

struct LatticeSpec {
  double lattice_constant = 0.357e-9;
  double cc_bond = 0.154e-9;
  Vec3 nv_axis{0.57735026918962576451, 0.57735026918962576451, 0.57735026918962576451};
  double abundance = 0.0055;

  void validate() const;
};

/// (mu0/4pi) hbar gamma_n^2 / r^3 (1 - 3 cos^2 theta), theta between r_vec
/// and b_dir. Signed, rad/s.
double dipolar_coupling(const Vec3& r_vec, const Vec3& b_dir, const PhysicalConstants& constants = {});

struct HyperfineCoupling {
  double a_par = 0.0;   // rad/s, signed
  double a_perp = 0.0;  // rad/s, >= 0
};

/// Point-dipole NV-nucleus coupling: with P = (mu0/4pi) hbar gamma_e gamma_n / r^3,
/// a_par = P (3 cos^2 theta - 1) and a_perp = 3 P |cos theta sin theta|.
HyperfineCoupling hyperfine_from_position(const Vec3& pos, const Vec3& nv_axis,
                                          const PhysicalConstants& constants = {});

struct AbundanceOptions {
  enum class Distance { midpoint, nearer_atom };
  Distance distance = Distance::midpoint;
  /// Bonds are unoriented. When false, only bonds whose outward direction
  /// (nearer atom to farther atom) points along +nv_axis count.
  bool count_antiparallel = true;
  double angle_tolerance_deg = 1.0;
  unsigned threads = 1;
};

struct AbundanceResult {
  double probability = 0.0;
  double std_error = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t candidate_bonds = 0;
  std::size_t lattice_sites = 0;
  std::string rng;
};

/// Lattice bonds that count as a dimer if both sites hold a 13C.
std::vector<std::pair<Vec3, Vec3>> candidate_dimers(const LatticeSpec& spec, double r_min, double r_max,
                                                     const AbundanceOptions& options = {});

inline constexpr std::uint64_t kMinAbundanceTrials = 10000;

/// Fraction of random 13C realizations around the NV holding at least one
/// nearest-neighbour 13C pair with its bond along the NV axis and its distance
/// from the NV in [r_min, r_max]. Deterministic for a fixed seed and
/// independent of the thread count.
AbundanceResult dimer_abundance(const LatticeSpec& spec, double r_min, double r_max, std::uint64_t trials,
                                std::uint64_t seed, const AbundanceOptions& options = {});

}  // namespace nvs
