#include "nvs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>
#include <unordered_map>
#include <vector>

#include "nvs/errors.hpp"

namespace nvs {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 unit(const Vec3& v, const char* what) {
  const double n = norm(v);
  if (!(n > 0) || !std::isfinite(n)) throw InputError(std::string(what) + ": zero or non-finite direction");
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Trials are split into fixed-size chunks, each with its own stream derived
// from (seed, chunk). The thread count then only changes who runs a chunk.
constexpr std::uint64_t kChunk = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Site {
  Vec3 r;
};

struct BondGraph {
  std::vector<Site> sites;
  std::size_t n_sites = 0;
  // adjacency of candidate dimer bonds
  std::vector<std::vector<std::uint32_t>> partners;
  std::size_t bonds = 0;
};

BondGraph build_candidates(const LatticeSpec& spec, double r_min, double r_max, const AbundanceOptions& opt) {
  // Cubic cell sized so that nearest neighbours sit exactly cc_bond apart.
  const double a = 4.0 * spec.cc_bond / std::sqrt(3.0);
  const double reach = r_max + 2.0 * spec.cc_bond;
  const int cells = static_cast<int>(std::ceil(reach / a)) + 1;
  static constexpr double fcc[4][3] = {{0, 0, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}};

  std::vector<Site> sites;
  for (int i = -cells; i <= cells; ++i)
    for (int j = -cells; j <= cells; ++j)
      for (int k = -cells; k <= cells; ++k)
        for (const auto& f : fcc)
          for (int basis = 0; basis < 2; ++basis) {
            const double shift = basis * 0.25;
            const Vec3 r{(i + f[0] + shift) * a, (j + f[1] + shift) * a, (k + f[2] + shift) * a};
            const double d = norm(r);
            if (d < 1e-3 * a || d > reach) continue;  // the NV's own site is not a carbon
            sites.push_back({r});
          }

  const Vec3 axis = unit(spec.nv_axis, "dimer_abundance");
  const double cos_tol = std::cos(opt.angle_tolerance_deg * M_PI / 180.0);

  // Spatial hash on a grid of cc_bond-sized cells for the neighbour search.
  const double cell = spec.cc_bond * 1.05;
  auto key = [&](const Vec3& r) {
    auto q = [&](double x) { return static_cast<std::int64_t>(std::floor(x / cell)) + (1 << 20); };
    return (q(r[0]) << 42) ^ (q(r[1]) << 21) ^ q(r[2]);
  };
  std::unordered_multimap<std::int64_t, std::uint32_t> grid;
  for (std::uint32_t s = 0; s < sites.size(); ++s) grid.emplace(key(sites[s].r), s);

  BondGraph g;
  g.n_sites = sites.size();
  g.sites = sites;
  g.partners.resize(sites.size());
  for (std::uint32_t s = 0; s < sites.size(); ++s) {
    const Vec3& rs = sites[s].r;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const Vec3 probe{rs[0] + dx * cell, rs[1] + dy * cell, rs[2] + dz * cell};
          auto [lo, hi] = grid.equal_range(key(probe));
          for (auto it = lo; it != hi; ++it) {
            const std::uint32_t t = it->second;
            if (t <= s) continue;
            const Vec3 bond = sub(sites[t].r, rs);
            const double len = norm(bond);
            if (std::abs(len - spec.cc_bond) > 1e-6 * spec.cc_bond) continue;
            const double c = dot(bond, axis) / len;
            if (std::abs(c) < cos_tol) continue;
            const double ds = norm(rs);
            const double dt = norm(sites[t].r);
            if (!opt.count_antiparallel) {
              // outward direction: nearer atom to farther atom
              const double outward = (dt >= ds) ? c : -c;
              if (outward < 0) continue;
            }
            double dist = 0.0;
            if (opt.distance == AbundanceOptions::Distance::midpoint) {
              const Vec3 mid{(rs[0] + sites[t].r[0]) / 2, (rs[1] + sites[t].r[1]) / 2, (rs[2] + sites[t].r[2]) / 2};
              dist = norm(mid);
            } else {
              dist = std::min(ds, dt);
            }
            if (dist < r_min || dist > r_max) continue;
            g.partners[s].push_back(t);
            g.partners[t].push_back(s);
            ++g.bonds;
          }
        }
  }
  return g;
}

// Runs one chunk of trials; returns the number of successes.
std::uint64_t run_chunk(const BondGraph& g, double abundance, std::uint64_t seed, std::uint64_t chunk,
                        std::uint64_t n_trials) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(chunk + 1)));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<std::uint8_t> occupied(g.n_sites, 0);
  std::vector<std::uint32_t> filled;
  const double log_q = std::log1p(-abundance);
  std::uint64_t successes = 0;

  for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
    filled.clear();
    if (abundance >= 1.0) {
      for (std::uint32_t s = 0; s < g.n_sites; ++s) filled.push_back(s);
    } else if (abundance > 0.0) {
      // Geometric gaps between occupied sites.
      double pos = -1.0;
      while (true) {
        const double u = 1.0 - uni(rng);  // (0, 1]
        pos += 1.0 + std::floor(std::log(u) / log_q);
        if (pos >= static_cast<double>(g.n_sites)) break;
        filled.push_back(static_cast<std::uint32_t>(pos));
      }
    }
    for (auto s : filled) occupied[s] = 1;
    bool hit = false;
    for (auto s : filled) {
      for (auto t : g.partners[s])
        if (occupied[t]) {
          hit = true;
          break;
        }
      if (hit) break;
    }
    if (hit) ++successes;
    for (auto s : filled) occupied[s] = 0;
  }
  return successes;
}

}  // namespace

void LatticeSpec::validate() const {
  if (!(abundance >= 0.0 && abundance <= 1.0)) throw InputError("LatticeSpec: abundance must lie in [0, 1]");
  if (!(lattice_constant > 0 && cc_bond > 0)) throw InputError("LatticeSpec: lengths must be positive");
  if (std::abs(norm(nv_axis) - 1.0) > 1e-12) throw InputError("LatticeSpec: nv_axis must be a unit vector");
  const double expected_bond = lattice_constant * std::sqrt(3.0) / 4.0;
  if (std::abs(cc_bond - expected_bond) > 0.01 * expected_bond) {
    throw InputError("LatticeSpec: cc_bond inconsistent with lattice_constant * sqrt(3)/4");
  }
}

double dipolar_coupling(const Vec3& r_vec, const Vec3& b_dir, const PhysicalConstants& constants) {
  const double r = norm(r_vec);
  if (!(r > 0.05e-9)) throw InputError("dipolar_coupling: separation below 0.05 nm");
  const Vec3 b = unit(b_dir, "dipolar_coupling");
  const double c = dot(r_vec, b) / r;
  return constants.mu0_over_4pi * constants.hbar * constants.gamma_n * constants.gamma_n / (r * r * r) *
         (1.0 - 3.0 * c * c);
}

HyperfineCoupling hyperfine_from_position(const Vec3& pos, const Vec3& nv_axis, const PhysicalConstants& constants) {
  const double r = norm(pos);
  if (!(r > 0.3e-9)) throw InputError("hyperfine_from_position: position closer than 0.3 nm");
  const Vec3 axis = unit(nv_axis, "hyperfine_from_position");
  const double c = std::clamp(dot(pos, axis) / r, -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double prefactor = constants.mu0_over_4pi * constants.hbar * constants.gamma_e * constants.gamma_n / (r * r * r);
  return {prefactor * (3.0 * c * c - 1.0), 3.0 * prefactor * std::abs(c * s)};
}

std::vector<std::pair<Vec3, Vec3>> candidate_dimers(const LatticeSpec& spec, double r_min, double r_max,
                                                     const AbundanceOptions& options) {
  spec.validate();
  if (!(r_min >= 0 && r_min < r_max)) throw InputError("candidate_dimers: require 0 <= r_min < r_max");
  const BondGraph g = build_candidates(spec, r_min, r_max, options);
  std::vector<std::pair<Vec3, Vec3>> out;
  for (std::uint32_t s = 0; s < g.n_sites; ++s)
    for (auto t : g.partners[s])
      if (t > s) out.emplace_back(g.sites[s].r, g.sites[t].r);
  return out;
}

AbundanceResult dimer_abundance(const LatticeSpec& spec, double r_min, double r_max, std::uint64_t trials,
                                std::uint64_t seed, const AbundanceOptions& options) {
  spec.validate();
  if (!(r_min >= 0 && r_min < r_max)) throw InputError("dimer_abundance: require 0 <= r_min < r_max");
  if (trials < kMinAbundanceTrials) {
    throw InputError("dimer_abundance: at least " + std::to_string(kMinAbundanceTrials) + " trials required");
  }
  if (!(options.angle_tolerance_deg >= 0 && options.angle_tolerance_deg < 90)) {
    throw InputError("dimer_abundance: angle tolerance must lie in [0, 90) degrees");
  }
  const BondGraph graph = build_candidates(spec, r_min, r_max, options);

  const std::uint64_t n_chunks = (trials + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> per_chunk(n_chunks, 0);
  auto work = [&](unsigned worker, unsigned n_workers) {
    for (std::uint64_t c = worker; c < n_chunks; c += n_workers) {
      const std::uint64_t n = std::min(kChunk, trials - c * kChunk);
      per_chunk[c] = run_chunk(graph, spec.abundance, seed, c, n);
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n_chunks)));
  if (n_workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work, w, n_workers);
  }

  AbundanceResult res;
  for (auto c : per_chunk) res.successes += c;  // fixed-order reduction
  res.trials = trials;
  res.seed = seed;
  res.probability = static_cast<double>(res.successes) / static_cast<double>(trials);
  res.std_error = std::sqrt(res.probability * (1.0 - res.probability) / static_cast<double>(trials));
  res.candidate_bonds = graph.bonds;
  res.lattice_sites = graph.n_sites;
  res.rng = "mt19937_64 per 4096-trial chunk, seeded by splitmix64(seed, chunk)";
  return res;
}

}  // namespace nvs
