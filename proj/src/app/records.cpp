#include "nvs/app/records.hpp"

#include <cstdio>
#include <fstream>

#include "nvs/errors.hpp"

#ifndef NVS_VERSION
#define NVS_VERSION "0.0.0"
#endif

namespace nvs::app {

namespace {

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json table_to_json(const TrajectoryTable& t) {
  json cols{{"t_s", t.t}};
  std::vector<double> uu, dd, s, tr, ln, f;
  for (const auto& r : t.rows) {
    uu.push_back(r.pop_uu);
    dd.push_back(r.pop_dd);
    s.push_back(r.pop_S);
    tr.push_back(r.pop_T);
    ln.push_back(r.ln_value);
    f.push_back(r.singlet_fidelity);
  }
  cols["pop_uu"] = uu;
  cols["pop_dd"] = dd;
  cols["pop_S"] = s;
  cols["pop_T"] = tr;
  cols["LN"] = ln;
  cols["fidelity_S"] = f;
  return cols;
}

TrajectoryTable table_from_json(const json& j) {
  TrajectoryTable t;
  t.t = j.at("t_s").get<std::vector<double>>();
  const auto uu = j.at("pop_uu").get<std::vector<double>>();
  const auto dd = j.at("pop_dd").get<std::vector<double>>();
  const auto s = j.at("pop_S").get<std::vector<double>>();
  const auto tr = j.at("pop_T").get<std::vector<double>>();
  const auto ln = j.at("LN").get<std::vector<double>>();
  const auto f = j.at("fidelity_S").get<std::vector<double>>();
  const std::size_t n = t.t.size();
  if (uu.size() != n || dd.size() != n || s.size() != n || tr.size() != n || ln.size() != n || f.size() != n) {
    throw InputError("trajectory table: column lengths differ");
  }
  for (std::size_t i = 0; i < n; ++i) t.rows.push_back({s[i], tr[i], uu[i], dd[i], ln[i], f[i]});
  return t;
}

}  // namespace

std::string artifact_version() { return NVS_VERSION; }

std::string format_float(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << kTrajectoryHeader << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& o = traj.observables[i];
    out << format_float(traj.times[i] * 1e3) << ',' << format_float(o.pop_uu) << ',' << format_float(o.pop_dd) << ','
        << format_float(o.pop_S) << ',' << format_float(o.pop_T) << ',' << format_float(o.ln_value) << ','
        << format_float(o.singlet_fidelity) << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_trajectory_csv(out, traj);
}

TrajectoryTable TrajectoryTable::from(const Trajectory& traj) { return {traj.times, traj.observables}; }

json to_json(const ResultRecord& r) {
  json j;
  j["config"] = r.config;
  json trajs = json::object();
  for (const auto& [name, t] : r.trajectories) trajs[name] = table_to_json(t);
  j["trajectories"] = trajs;
  json sums = json::object();
  for (const auto& [name, s] : r.summaries) {
    sums[name] = {{"final_ln", s.final_ln},
                  {"final_pop_S", s.final_pop_S},
                  {"t_cv_s", optional_number(s.t_cv)},
                  {"tcv_threshold", s.tcv_threshold},
                  {"steady_state_fidelity", s.steady_state_fidelity}};
  }
  j["summaries"] = sums;
  j["max_trace_distance"] = optional_number(r.max_trace_distance);
  j["warnings"] = r.warnings;
  j["notes"] = r.notes;
  j["provenance"] = {{"version", r.provenance.version},
                     {"seed", r.provenance.seed},
                     {"backend", r.provenance.backend},
                     {"isa", r.provenance.isa}};
  return j;
}

ResultRecord record_from_json(const json& j) {
  ResultRecord r;
  try {
    r.config = j.at("config");
    for (const auto& [name, t] : j.at("trajectories").items()) r.trajectories[name] = table_from_json(t);
    for (const auto& [name, s] : j.at("summaries").items()) {
      RunSummary sum;
      sum.final_ln = s.at("final_ln").get<double>();
      sum.final_pop_S = s.at("final_pop_S").get<double>();
      sum.t_cv = read_optional(s.at("t_cv_s"));
      sum.tcv_threshold = s.at("tcv_threshold").get<double>();
      sum.steady_state_fidelity = s.at("steady_state_fidelity").get<double>();
      r.summaries[name] = sum;
    }
    r.max_trace_distance = read_optional(j.at("max_trace_distance"));
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    const auto& p = j.at("provenance");
    r.provenance = {p.at("version").get<std::string>(), p.at("seed").get<std::uint64_t>(),
                    p.at("backend").get<std::string>(), p.at("isa").get<std::string>()};
  } catch (const json::exception& e) {
    throw InputError(std::string("result record: ") + e.what());
  }
  return r;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace nvs::app
