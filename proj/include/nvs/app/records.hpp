#pragma once
// Result serialization: trajectory CSV tables and JSON result records.

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvs/dynamics.hpp"

namespace nvs::app {

using json = nlohmann::json;

inline constexpr const char* kTrajectoryHeader = "t_ms,pop_uu,pop_dd,pop_S,pop_T,LN,fidelity_S";

/// 9 significant digits, the precision of every CSV float.
std::string format_float(double x);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

struct TrajectoryTable {
  std::vector<double> t;  // s
  std::vector<PairObservables> rows;

  static TrajectoryTable from(const Trajectory& traj);
  bool operator==(const TrajectoryTable&) const = default;
};

struct RunSummary {
  double final_ln = 0.0;
  double final_pop_S = 0.0;
  std::optional<double> t_cv;  // s
  double tcv_threshold = 0.96;
  /// <psi|rho_final|psi> with psi the closed-form steady state for the pair's
  /// detuning and drive.
  double steady_state_fidelity = 0.0;

  bool operator==(const RunSummary&) const = default;
};

struct Provenance {
  std::string version;
  std::uint64_t seed = 0;
  std::string backend;
  std::string isa;

  bool operator==(const Provenance&) const = default;
};

struct ResultRecord {
  json config;  // resolved, SI units
  std::map<std::string, TrajectoryTable> trajectories;
  std::map<std::string, RunSummary> summaries;
  std::optional<double> max_trace_distance;  // backend comparison
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  Provenance provenance;

  bool operator==(const ResultRecord&) const = default;
};

json to_json(const ResultRecord& r);
ResultRecord record_from_json(const json& j);

void write_json_file(const std::filesystem::path& path, const json& j);

std::string artifact_version();

}  // namespace nvs::app
