#pragma once
// Commands behind the command-line tool. The run_* functions return data and
// throw; the cmd_* functions write files and map failures to exit codes
// (0 success, 2 usage or configuration, 3 numerical failure).

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nvs/app/config.hpp"
#include "nvs/app/records.hpp"
#include "nvs/geometry.hpp"

namespace nvs::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `body`, reporting exceptions on `err` and returning the exit code.
int guarded(const std::function<void()>& body, std::ostream& err);

struct RunResult {
  std::map<std::string, Trajectory> trajectories;  // keyed by backend name
  std::map<std::string, RunSummary> summaries;
  std::optional<double> max_trace_distance;
  std::vector<std::string> warnings;
};

/// I / 2^N on the nuclei.
CMatrix maximally_mixed(const SpinSystem& system);

RunResult run_experiment(const ExperimentConfig& cfg);
RunSummary summarize(const Trajectory& traj, const ExperimentConfig& cfg);
ResultRecord make_record(const ExperimentConfig& cfg, const RunResult& run);

/// Effective-model steady-state analysis as a JSON report. A degenerate
/// kernel is reported through zero_mode_count with a null state.
json steady_report(const ExperimentConfig& cfg);

struct SweepAxis {
  std::string param;
  std::vector<double> values;
};

struct SweepRow {
  std::vector<double> values;
  std::map<std::string, RunSummary> summaries;
  std::string status;  // "ok" or the error message
};

/// Evaluates every grid point (first axis slowest) on up to `jobs` threads.
/// Rows come back in grid order. Per-point failures are recorded in the
/// row's status; an invalid parameter path throws ConfigError up front.
std::vector<SweepRow> run_sweep(const json& base, const std::vector<SweepAxis>& axes, unsigned jobs);
void write_sweep_csv(std::ostream& out, const std::vector<SweepAxis>& axes, const std::vector<SweepRow>& rows);

unsigned default_jobs();

struct EvolveOptions {
  std::filesystem::path config;
  std::optional<std::string> backend;
  std::filesystem::path out;  // output prefix
  std::vector<std::string> overrides;
};
int cmd_evolve(const EvolveOptions& opt, std::ostream& log);

struct SteadyOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::vector<std::string> overrides;
};
int cmd_steady(const SteadyOptions& opt, std::ostream& log);

struct SweepOptions {
  std::filesystem::path config;
  std::vector<std::string> params;
  std::vector<std::string> values;
  unsigned jobs = 0;  // 0: available parallelism
  std::filesystem::path out;
  std::vector<std::string> overrides;
};
int cmd_sweep(const SweepOptions& opt, std::ostream& log);

struct FigureOptions {
  std::string name;
  std::filesystem::path out_dir = ".";
  std::filesystem::path data_dir;  // empty: bundled data directory
  unsigned jobs = 0;
  std::vector<std::string> overrides;
};
const std::vector<std::string>& figure_names();
std::filesystem::path figure_config_path(const std::string& name, const std::filesystem::path& data_dir = {});
int cmd_figure(const FigureOptions& opt, std::ostream& log);

struct AbundanceOptionsCli {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  double rmin_nm = 1.0;
  double rmax_nm = 1.5;
  LatticeSpec lattice;
  AbundanceOptions options;
  std::filesystem::path out;  // empty: stdout
};
json abundance_body(const AbundanceOptionsCli& opt);
int cmd_abundance(const AbundanceOptionsCli& opt, std::ostream& out, std::ostream& log);

}  // namespace nvs::app
