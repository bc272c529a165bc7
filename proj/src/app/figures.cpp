#include <algorithm>
#include <cmath>
#include <fstream>

#include "nvs/app/commands.hpp"

#ifndef NVS_DATA_DIR
#define NVS_DATA_DIR "data"
#endif

namespace nvs::app {

namespace {

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  body(out);
}

void write_run(const std::string& name, const ExperimentConfig& cfg, const RunResult& run,
               const std::filesystem::path& dir, std::ostream& log) {
  for (const auto& [backend, traj] : run.trajectories) {
    const auto path = dir / (run.trajectories.size() > 1 ? name + "_" + backend + ".csv" : name + ".csv");
    write_trajectory_csv(path, traj);
    log << "wrote " << path.string() << '\n';
  }
  write_json_file(dir / (name + ".json"), to_json(make_record(cfg, run)));
  for (const auto& [backend, s] : run.summaries) {
    log << name << " [" << backend << "]: final LN " << format_float(s.final_ln) << ", pop_S "
        << format_float(s.final_pop_S);
    if (s.t_cv) log << ", T_Cv(" << s.tcv_threshold << ") " << format_float(*s.t_cv * 1e3) << " ms";
    log << '\n';
  }
}

// Ramp figure: the exponential schedule next to the same run at constant
// detuning.
void figure_ramp(const std::string& name, const json& j, const std::filesystem::path& dir, std::ostream& log) {
  const ExperimentConfig ramp = parse_config(j);
  json base = j;
  base["drive"].erase("schedule");
  base["name"] = ramp.name + "-constant";
  const ExperimentConfig constant = parse_config(base);

  const RunResult r_ramp = run_experiment(ramp);
  const RunResult r_const = run_experiment(constant);
  write_run(name, ramp, r_ramp, dir, log);
  write_run(name + "_constant", constant, r_const, dir, log);
}

// Noise figure: for each T2, the detuning follows Delta/Omega_rf = sqrt(k/2)
// with k = sqrt(Gamma)/|alpha|, and the steady state is compared with the
// one at the base detuning.
void figure_noise(const std::string& name, const json& j, const std::filesystem::path& dir, std::ostream& log) {
  const ExperimentConfig base = parse_config(j);
  if (base.sweep.size() != 1) throw ConfigError("sweep", "expected a single T2 axis");
  const auto& [param, values] = base.sweep.front();
  if (base.alpha_override.empty()) throw ConfigError("effective.alpha_sq_over_omega_rf", "required for this figure");
  const auto [p1, p2] = base.system.pair();
  const double alpha = std::abs(base.alpha_override[p1]);
  const double omega = base.drive.omega_rf_rabi;
  const double base_ratio = pair_imbalance(base.system, base.drive) / omega;

  const auto path = dir / (name + ".csv");
  write_text(path, [&](std::ostream& out) {
    out << "T2_s,gamma_per_s,k,delta_over_omega_rf,fidelity_S,LN,fidelity_S_base_delta,LN_base_delta\n";
    for (double t2 : values) {
      json point = j;
      point.erase("sweep");
      set_numeric(point, param, t2);
      const ExperimentConfig probe = parse_config(point);
      const double gamma = probe.noise.gamma_of(p1);
      const double k = std::sqrt(gamma) / alpha;
      const double ratio = std::sqrt(k / 2.0);
      set_numeric(point, "drive.delta_khz", ratio * omega / (kTwoPi * 1e3));
      const json opt = steady_report(parse_config(point));
      const json ref = steady_report(probe);
      auto field = [](const json& rep, const char* key) {
        return rep["steady_state"].is_null() ? std::nan("") : rep["steady_state"]["observables"][key].get<double>();
      };
      out << format_float(t2) << ',' << format_float(gamma) << ',' << format_float(k) << ',' << format_float(ratio)
          << ',' << format_float(field(opt, "fidelity_S")) << ',' << format_float(field(opt, "LN")) << ','
          << format_float(field(ref, "fidelity_S")) << ',' << format_float(field(ref, "LN")) << '\n';
    }
  });
  log << "wrote " << path.string() << " (base Delta/Omega_rf = " << format_float(base_ratio) << ")\n";
}

}  // namespace

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names = {"fig2a", "fig2a-ramp", "fig2b", "fig2c",     "fig2d",
                                                 "fig2d-bath", "fig2e", "fig3",  "fig3-bath", "fig3-inset"};
  return names;
}

std::filesystem::path figure_config_path(const std::string& name, const std::filesystem::path& data_dir) {
  const std::filesystem::path dir = data_dir.empty() ? std::filesystem::path(NVS_DATA_DIR) : data_dir;
  return dir / "figures" / (name + ".json");
}

int cmd_figure(const FigureOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        const auto& names = figure_names();
        if (std::find(names.begin(), names.end(), opt.name) == names.end()) {
          std::string list;
          for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
          throw ConfigError("figure", "unknown figure '" + opt.name + "'; valid names: " + list);
        }
        json j = read_json_file(figure_config_path(opt.name, opt.data_dir));
        for (const auto& o : opt.overrides) apply_override(j, o);
        std::filesystem::create_directories(opt.out_dir);

        if (opt.name == "fig2a-ramp") {
          figure_ramp(opt.name, j, opt.out_dir, log);
        } else if (opt.name == "fig2e") {
          figure_noise(opt.name, j, opt.out_dir, log);
        } else {
          const ExperimentConfig cfg = parse_config(j);
          if (cfg.sweep.empty()) {
            write_run(opt.name, cfg, run_experiment(cfg), opt.out_dir, log);
          } else {
            std::vector<SweepAxis> axes;
            for (const auto& [p, v] : cfg.sweep) axes.push_back({p, v});
            const auto rows = run_sweep(j, axes, opt.jobs);
            const auto path = opt.out_dir / (opt.name + ".csv");
            write_text(path, [&](std::ostream& out) { write_sweep_csv(out, axes, rows); });
            log << "wrote " << path.string() << " (" << rows.size() << " points)\n";
          }
        }
      },
      log);
}

}  // namespace nvs::app
