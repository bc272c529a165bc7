// nvsinglet: run NV-reset singlet generation experiments from JSON configs.

#include <iostream>

#include <CLI11.hpp>

#include "nvs/app/commands.hpp"
#include "nvs/simd/kernels.hpp"

namespace {

void add_overrides(CLI::App* cmd, std::vector<std::string>& overrides) {
  cmd->add_option("--set", overrides, "Override a numeric config field, e.g. protocol.polarization=0.96");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nvs::app;
  CLI::App app{"Dissipative nuclear singlet generation via NV resets"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--isa", isa, "Kernel family: scalar or avx2 (default: best available)");

  EvolveOptions evolve;
  auto* c_evolve = app.add_subcommand("evolve", "Simulate a trajectory and write CSV + JSON record");
  c_evolve->add_option("config", evolve.config, "Config file")->required();
  c_evolve->add_option("--backend", evolve.backend, "full, effective or both");
  c_evolve->add_option("--out", evolve.out, "Output prefix (default: config name)");
  add_overrides(c_evolve, evolve.overrides);

  SteadyOptions steady;
  auto* c_steady = app.add_subcommand("steady", "Steady state of the effective master equation");
  c_steady->add_option("config", steady.config, "Config file")->required();
  c_steady->add_option("--out", steady.out, "Output JSON path");
  add_overrides(c_steady, steady.overrides);

  SweepOptions sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Grid over one or two config fields");
  c_sweep->add_option("config", sweep.config, "Config file")->required();
  c_sweep->add_option("--param", sweep.params, "Dotted field path (repeat for a 2-D grid)")->required();
  c_sweep->add_option("--values", sweep.values, "v1,v2,... or start:stop:count (one per --param)")->required();
  c_sweep->add_option("--jobs", sweep.jobs, "Worker threads (default: available parallelism)");
  c_sweep->add_option("--out", sweep.out, "Output CSV path");
  add_overrides(c_sweep, sweep.overrides);

  FigureOptions figure;
  auto* c_figure = app.add_subcommand("figure", "Run a bundled figure pipeline");
  c_figure->add_option("name", figure.name, "Figure name")->required();
  c_figure->add_option("--out-dir", figure.out_dir, "Output directory");
  c_figure->add_option("--data-dir", figure.data_dir, "Directory holding figures/*.json");
  c_figure->add_option("--jobs", figure.jobs, "Worker threads for sweep figures");
  add_overrides(c_figure, figure.overrides);

  AbundanceOptionsCli abundance;
  std::string distance = "midpoint";
  bool parallel_only = false;
  auto* c_ab = app.add_subcommand("abundance", "Monte Carlo probability of an axial 13C dimer");
  c_ab->add_option("--trials", abundance.trials, "Lattice realizations (>= 10000)");
  c_ab->add_option("--seed", abundance.seed, "RNG seed");
  c_ab->add_option("--rmin", abundance.rmin_nm, "Minimum distance from the NV, nm");
  c_ab->add_option("--rmax", abundance.rmax_nm, "Maximum distance from the NV, nm");
  c_ab->add_option("--abundance", abundance.lattice.abundance, "13C fraction");
  c_ab->add_option("--distance", distance, "midpoint or nearer_atom");
  c_ab->add_flag("--parallel-only", parallel_only, "Count only bonds pointing away from the NV along the axis");
  c_ab->add_option("--angle-tol", abundance.options.angle_tolerance_deg, "Bond angle tolerance, degrees");
  c_ab->add_option("--threads", abundance.options.threads, "Worker threads (result does not depend on it)");
  c_ab->add_option("--out", abundance.out, "Output JSON path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (!isa.empty()) {
    const int rc = guarded(
        [&] {
          if (isa == "scalar") {
            nvs::simd::set_isa(nvs::simd::Isa::scalar);
          } else if (isa == "avx2") {
            nvs::simd::set_isa(nvs::simd::Isa::avx2);
          } else {
            throw nvs::InputError("--isa: expected scalar or avx2");
          }
        },
        std::cerr);
    if (rc != 0) return rc;
  }

  if (*c_evolve) return cmd_evolve(evolve, std::cerr);
  if (*c_steady) return cmd_steady(steady, std::cerr);
  if (*c_sweep) return cmd_sweep(sweep, std::cerr);
  if (*c_figure) return cmd_figure(figure, std::cerr);
  if (*c_ab) {
    if (distance == "midpoint") {
      abundance.options.distance = nvs::AbundanceOptions::Distance::midpoint;
    } else if (distance == "nearer_atom") {
      abundance.options.distance = nvs::AbundanceOptions::Distance::nearer_atom;
    } else {
      std::cerr << "error: --distance: expected midpoint or nearer_atom\n";
      return kExitUsage;
    }
    abundance.options.count_antiparallel = !parallel_only;
    return cmd_abundance(abundance, std::cout, std::cerr);
  }
  return kExitUsage;
}
