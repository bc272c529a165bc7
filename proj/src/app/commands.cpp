#include "nvs/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "nvs/linalg/ops.hpp"
#include "nvs/simd/kernels.hpp"

namespace nvs::app {

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json matrix_part(const CMatrix& m, bool imag) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.dim(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(imag ? m(r, c).imag() : m(r, c).real());
    rows.push_back(row);
  }
  return rows;
}

json observables_json(const PairObservables& o) {
  return {{"pop_uu", o.pop_uu}, {"pop_dd", o.pop_dd}, {"pop_S", o.pop_S},
          {"pop_T", o.pop_T},   {"LN", o.ln_value},   {"fidelity_S", o.singlet_fidelity}};
}

json load_with_overrides(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json j = read_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
  return prefix.parent_path() / (prefix.filename().string() + suffix);
}

// Pair detuning imbalance (signed, first minus second, halved) at time t.
double signed_half_difference(const ExperimentConfig& cfg, double t) {
  const auto det = detunings_at(cfg.system, cfg.drive, t);
  const auto [p1, p2] = cfg.system.pair();
  return 0.5 * (det[p1] - det[p2]);
}

}  // namespace

int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

CMatrix maximally_mixed(const SpinSystem& system) {
  CMatrix rho = CMatrix::identity(system.nuclear_dim());
  rho *= cplx(1.0 / static_cast<double>(system.nuclear_dim()));
  return rho;
}

RunSummary summarize(const Trajectory& traj, const ExperimentConfig& cfg) {
  if (traj.size() == 0) throw NumericalError("summarize: empty trajectory");
  RunSummary s;
  const auto& last = traj.observables.back();
  s.final_ln = last.ln_value;
  s.final_pop_S = last.pop_S;
  s.tcv_threshold = cfg.analysis.tcv_threshold;
  s.t_cv = convergence_time(traj, s.tcv_threshold);
  const double t_end = traj.times.back();
  const auto psi = analytic_steady_state(signed_half_difference(cfg, t_end), cfg.drive.omega_rf_rabi);
  s.steady_state_fidelity = inner(psi, traj.pair_states.back().apply(psi)).real();
  return s;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  if (!(cfg.t_total > 0)) throw ConfigError("t_total", "missing; expected one of t_total_s, t_total_ms, t_total_us");
  const CMatrix rho0 = maximally_mixed(cfg.system);
  const bool want_full = cfg.backend != Backend::effective;
  const bool want_eff = cfg.backend != Backend::full;
  RunResult out;

  if (want_full) {
    if (!cfg.noise.gamma.empty() || !cfg.noise.dephasing.empty()) {
      out.warnings.push_back("nuclear noise channels are ignored by the full backend");
    }
    if (!cfg.alpha_override.empty()) {
      out.warnings.push_back("alpha override applies to the effective backend only");
    }
    auto traj = simulate_full(cfg.system, cfg.drive, cfg.protocol, rho0, cfg.t_total, cfg.sampling.sample_every);
    for (const auto& w : traj.warnings) out.warnings.push_back("full: " + w);
    out.summaries["full"] = summarize(traj, cfg);
    out.trajectories.emplace("full", std::move(traj));
  }
  if (want_eff) {
    double t_total = cfg.t_total;
    double dt_max = cfg.sampling.dt_max.value_or(cfg.protocol.t_re);
    if (cfg.backend == Backend::both) {
      // Align the effective steps with the reset instants so that samples
      // coincide with the full backend's.
      const auto n = std::floor(cfg.t_total / cfg.protocol.t_re + 1e-9);
      t_total = n * cfg.protocol.t_re;
      dt_max = cfg.protocol.t_re;
    }
    auto traj = simulate_effective(cfg.effective_model(), rho0, t_total, dt_max, cfg.sampling.sample_every);
    for (const auto& w : traj.warnings) out.warnings.push_back("effective: " + w);
    out.summaries["effective"] = summarize(traj, cfg);
    out.trajectories.emplace("effective", std::move(traj));
  }
  if (want_full && want_eff) {
    const auto& a = out.trajectories.at("full");
    const auto& b = out.trajectories.at("effective");
    if (a.size() != b.size()) throw NumericalError("backend comparison: sample counts differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1e-12, a.times[i])) {
        throw NumericalError("backend comparison: sample times differ");
      }
      worst = std::max(worst, trace_distance(a.pair_states[i], b.pair_states[i]));
    }
    out.max_trace_distance = worst;
  }
  return out;
}

ResultRecord make_record(const ExperimentConfig& cfg, const RunResult& run) {
  ResultRecord r;
  r.config = cfg.resolved();
  for (const auto& [name, t] : run.trajectories) r.trajectories[name] = TrajectoryTable::from(t);
  r.summaries = run.summaries;
  r.max_trace_distance = run.max_trace_distance;
  r.warnings = run.warnings;
  r.notes = cfg.notes;
  r.provenance = {artifact_version(), cfg.seed, backend_name(cfg.backend),
                  std::string(simd::isa_name(simd::active_isa()))};
  return r;
}

json steady_report(const ExperimentConfig& cfg) {
  const EffectiveModel model = cfg.effective_model();
  const Liouvillian l = model.liouvillian(0.0);
  json rep;
  rep["config"] = cfg.resolved();
  const std::size_t zeros = zero_mode_count(l);
  rep["zero_mode_count"] = zeros;
  rep["unique"] = zeros == 1;
  rep["spectral_gap_per_s"] = spectral_gap(l);
  rep["steady_state"] = nullptr;

  const auto det = detunings_at(cfg.system, cfg.drive, 0.0);
  const auto [p1, p2] = cfg.system.pair();
  const double delta1 = 0.5 * (det[p1] - det[p2]);
  json analytic{{"applicable", false}};

  if (zeros == 1) {
    const CMatrix rho = steady_state(l);
    const CMatrix pair = reduce_to_pair(rho, cfg.system);
    const auto obs = pair_populations(pair);
    rep["steady_state"] = {{"pair_rho_re", matrix_part(pair, false)},
                           {"pair_rho_im", matrix_part(pair, true)},
                           {"observables", observables_json(obs)}};
    rep["LN"] = obs.ln_value;

    // The closed form holds for two nuclei, opposite detunings, equal
    // amplitudes with a shared phase, and no extra channels.
    std::string reason;
    const auto jumps = model.jumps(0.0);
    const CMatrix& lower = jumps.front();
    // <down_j| L |all up> = alpha_j
    const cplx a1 = lower(std::size_t{1} << (cfg.system.size() - 1 - p1), 0);
    const cplx a2 = lower(std::size_t{1} << (cfg.system.size() - 1 - p2), 0);
    const double scale = std::max({std::abs(det[p1]), std::abs(det[p2]), 1e-300});
    if (cfg.system.size() != 2) reason = "more than two nuclei";
    else if (cfg.system.has_dipolar()) reason = "dipolar coupling present";
    else if (jumps.size() != 1) reason = "extra noise channels present";
    else if (std::abs(det[p1] + det[p2]) > 1e-9 * scale) reason = "detunings are not opposite";
    else if (std::abs(a1 - a2) > 1e-9 * std::max(std::abs(a1), std::abs(a2))) reason = "amplitudes differ";
    if (reason.empty()) {
      const auto psi = analytic_steady_state(delta1, cfg.drive.omega_rf_rabi);
      analytic = {{"applicable", true},
                  {"delta1_rad_s", delta1},
                  {"omega_rf_rad_s", cfg.drive.omega_rf_rabi},
                  {"analytic_ln", analytic_ln(delta1, cfg.drive.omega_rf_rabi)},
                  {"fidelity", inner(psi, pair.apply(psi)).real()},
                  {"ln_difference", obs.ln_value - analytic_ln(delta1, cfg.drive.omega_rf_rabi)}};
    } else {
      analytic["reason"] = reason;
    }
  } else {
    analytic["reason"] = "steady state is not unique";
  }
  rep["analytic"] = analytic;
  rep["provenance"] = {{"version", artifact_version()}, {"seed", cfg.seed}, {"backend", "effective"}};
  return rep;
}

std::vector<SweepRow> run_sweep(const json& base, const std::vector<SweepAxis>& axes, unsigned jobs) {
  if (axes.empty() || axes.size() > 2) throw ConfigError("--param", "expected one or two sweep axes");
  std::size_t total = 1;
  for (const auto& a : axes) {
    if (a.values.empty()) throw ConfigError(a.param, "no values");
    total *= a.values.size();
  }
  auto point_values = [&](std::size_t idx) {
    std::vector<double> v(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      v[k] = axes[k].values[idx % axes[k].values.size()];
      idx /= axes[k].values.size();
    }
    return v;
  };
  auto point_config = [&](const std::vector<double>& v) {
    json j = base;
    j.erase("sweep");
    for (std::size_t k = 0; k < axes.size(); ++k) set_numeric(j, axes[k].param, v[k]);
    return j;
  };
  // Path problems surface here, before any work starts. Values that make a
  // single point invalid are reported per row instead.
  json probe = base;
  probe.erase("sweep");
  for (const auto& a : axes) set_numeric(probe, a.param, a.values.front());
  try {
    parse_config(probe);
  } catch (const UnknownFieldError&) {
    throw;
  } catch (const ConfigError&) {
  }

  std::vector<SweepRow> rows(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      SweepRow& row = rows[i];
      row.values = point_values(i);
      try {
        const ExperimentConfig cfg = parse_config(point_config(row.values));
        row.summaries = run_experiment(cfg).summaries;
        row.status = "ok";
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs == 0 ? default_jobs() : jobs, static_cast<unsigned>(total)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepAxis>& axes, const std::vector<SweepRow>& rows) {
  std::vector<std::string> backends;
  for (const auto& r : rows)
    for (const auto& [name, s] : r.summaries)
      if (std::find(backends.begin(), backends.end(), name) == backends.end()) backends.push_back(name);
  std::sort(backends.begin(), backends.end());
  const bool prefix = backends.size() > 1;

  for (const auto& a : axes) out << csv_quote(a.param) << ',';
  for (const auto& b : backends) {
    const std::string p = prefix ? b + "_" : "";
    out << p << "final_LN," << p << "final_pop_S," << p << "T_Cv_ms," << p << "steady_state_fidelity,";
  }
  out << "status\n";
  const std::string nan = "nan";
  for (const auto& r : rows) {
    for (double v : r.values) out << format_float(v) << ',';
    for (const auto& b : backends) {
      auto it = r.summaries.find(b);
      if (it == r.summaries.end()) {
        out << nan << ',' << nan << ',' << nan << ',' << nan << ',';
        continue;
      }
      const auto& s = it->second;
      out << format_float(s.final_ln) << ',' << format_float(s.final_pop_S) << ','
          << (s.t_cv ? format_float(*s.t_cv * 1e3) : nan) << ',' << format_float(s.steady_state_fidelity) << ',';
    }
    out << csv_quote(r.status) << '\n';
  }
}

int cmd_evolve(const EvolveOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        json j = load_with_overrides(opt.config, opt.overrides);
        if (opt.backend) j["backend"] = *opt.backend;
        const ExperimentConfig cfg = parse_config(j);
        const RunResult run = run_experiment(cfg);
        const auto prefix = opt.out.empty() ? std::filesystem::path(cfg.name) : opt.out;
        ensure_parent(prefix);
        for (const auto& [name, traj] : run.trajectories) {
          const auto path = run.trajectories.size() > 1 ? with_suffix(prefix, "_" + name + ".csv")
                                                        : with_suffix(prefix, ".csv");
          write_trajectory_csv(path, traj);
          log << "wrote " << path.string() << '\n';
        }
        write_json_file(with_suffix(prefix, ".json"), to_json(make_record(cfg, run)));
        log << "wrote " << with_suffix(prefix, ".json").string() << '\n';
        for (const auto& [name, s] : run.summaries) {
          log << name << ": final LN " << format_float(s.final_ln) << ", pop_S " << format_float(s.final_pop_S);
          if (s.t_cv) log << ", T_Cv " << format_float(*s.t_cv * 1e3) << " ms";
          log << '\n';
        }
        if (run.max_trace_distance) log << "max trace distance " << format_float(*run.max_trace_distance) << '\n';
        for (const auto& w : run.warnings) log << "warning: " << w << '\n';
      },
      log);
}

int cmd_steady(const SteadyOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        const ExperimentConfig cfg = parse_config(load_with_overrides(opt.config, opt.overrides));
        const json rep = steady_report(cfg);
        const auto path = opt.out.empty() ? std::filesystem::path(cfg.name + "_steady.json") : opt.out;
        ensure_parent(path);
        write_json_file(path, rep);
        log << "wrote " << path.string() << "\nzero modes " << rep["zero_mode_count"].get<std::size_t>();
        if (rep.contains("LN")) log << ", LN " << format_float(rep["LN"].get<double>());
        log << '\n';
      },
      log);
}

int cmd_sweep(const SweepOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        if (opt.params.empty() || opt.params.size() != opt.values.size()) {
          throw ConfigError("--param", "give one --values list per --param");
        }
        const json base = load_with_overrides(opt.config, opt.overrides);
        std::vector<SweepAxis> axes;
        for (std::size_t k = 0; k < opt.params.size(); ++k) axes.push_back({opt.params[k], parse_values(opt.values[k])});
        const auto rows = run_sweep(base, axes, opt.jobs);
        const auto path = opt.out.empty() ? std::filesystem::path("sweep.csv") : opt.out;
        ensure_parent(path);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError("cannot write " + path.string());
        write_sweep_csv(out, axes, rows);
        const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != "ok"; });
        log << "wrote " << path.string() << " (" << rows.size() << " points, " << failed << " failed)\n";
        if (failed == static_cast<long>(rows.size())) throw NumericalError("every sweep point failed");
      },
      log);
}

json abundance_body(const AbundanceOptionsCli& opt) {
  const auto res = dimer_abundance(opt.lattice, opt.rmin_nm * 1e-9, opt.rmax_nm * 1e-9, opt.trials, opt.seed, opt.options);
  return {{"probability", res.probability},
          {"std_error", res.std_error},
          {"successes", res.successes},
          {"trials", res.trials},
          {"seed", res.seed},
          {"r_min_m", opt.rmin_nm * 1e-9},
          {"r_max_m", opt.rmax_nm * 1e-9},
          {"lattice",
           {{"lattice_constant_m", opt.lattice.lattice_constant},
            {"cc_bond_m", opt.lattice.cc_bond},
            {"nv_axis", opt.lattice.nv_axis},
            {"abundance", opt.lattice.abundance}}},
          {"options",
           {{"distance", opt.options.distance == AbundanceOptions::Distance::midpoint ? "midpoint" : "nearer_atom"},
            {"count_antiparallel", opt.options.count_antiparallel},
            {"angle_tolerance_deg", opt.options.angle_tolerance_deg}}},
          {"candidate_bonds", res.candidate_bonds},
          {"lattice_sites", res.lattice_sites},
          {"rng", res.rng},
          {"version", artifact_version()}};
}

int cmd_abundance(const AbundanceOptionsCli& opt, std::ostream& out, std::ostream& log) {
  return guarded(
      [&] {
        const json body = abundance_body(opt);
        if (opt.out.empty()) {
          out << body.dump(2) << '\n';
        } else {
          ensure_parent(opt.out);
          write_json_file(opt.out, body);
        }
        // The timestamp goes to the log only so that bodies compare equal.
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        log << "abundance finished " << stamp << '\n';
      },
      log);
}

}  // namespace nvs::app
