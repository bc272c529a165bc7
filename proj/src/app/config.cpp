#include "nvs/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nvs/geometry.hpp"

namespace nvs::app {

namespace {

struct UnitSuffix {
  const char* suffix;
  double factor;
};

// Each quantity kind lists the accepted key suffixes; the SI one comes first
// and is what resolved() writes.
const std::vector<UnitSuffix> kFrequency = {{"_rad_s", 1.0}, {"_khz", kTwoPi * 1e3}, {"_hz", kTwoPi}};
const std::vector<UnitSuffix> kTime = {{"_s", 1.0}, {"_ms", 1e-3}, {"_us", 1e-6}};
const std::vector<UnitSuffix> kLength = {{"_m", 1.0}, {"_nm", 1e-9}};
const std::vector<UnitSuffix> kRate = {{"_per_s", 1.0}, {"_per_ms", 1e3}};

std::string join_suffixes(const std::string& base, const std::vector<UnitSuffix>& units) {
  std::string out;
  for (const auto& u : units) {
    if (!out.empty()) out += ", ";
    out += base + u.suffix;
  }
  return out;
}

// Object reader that tracks consumed keys so leftovers can be reported.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

  const json* find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    if (it->is_null()) return nullptr;
    return &*it;
  }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  std::optional<double> opt_number(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return as_number(*v, sub(key));
  }
  double number(const std::string& key, double fallback) { return opt_number(key).value_or(fallback); }
  double number(const std::string& key) {
    auto v = opt_number(key);
    if (!v) throw ConfigError(sub(key), "missing");
    return *v;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(sub(key), "expected a string");
    return v->get<std::string>();
  }
  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(sub(key), "expected true or false");
    return v->get<bool>();
  }
  std::optional<std::uint64_t> opt_unsigned(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) {
      if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return v->get<std::uint64_t>();
      throw ConfigError(sub(key), "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  // Quantity with a unit suffix; exactly one spelling may be present.
  std::optional<double> opt_quantity(const std::string& base, const std::vector<UnitSuffix>& units) {
    std::optional<double> out;
    std::string seen;
    for (const auto& u : units) {
      const std::string key = base + u.suffix;
      if (!j_.contains(key)) continue;
      used_.insert(key);
      if (!seen.empty()) throw ConfigError(sub(base), "given twice (" + seen + " and " + key + ")");
      seen = key;
      if (j_.at(key).is_null()) continue;
      out = as_number(j_.at(key), sub(key)) * u.factor;
    }
    return out;
  }
  double quantity(const std::string& base, const std::vector<UnitSuffix>& units) {
    auto v = opt_quantity(base, units);
    if (!v) throw ConfigError(sub(base), "missing; expected one of " + join_suffixes(base, units));
    return *v;
  }

  // Scalar or array of quantities (array entries may be null).
  std::optional<std::vector<std::optional<double>>> opt_quantity_list(const std::string& base,
                                                                      const std::vector<UnitSuffix>& units) {
    std::optional<std::vector<std::optional<double>>> out;
    std::string seen;
    for (const auto& u : units) {
      const std::string key = base + u.suffix;
      if (!j_.contains(key)) continue;
      used_.insert(key);
      if (!seen.empty()) throw ConfigError(sub(base), "given twice (" + seen + " and " + key + ")");
      seen = key;
      const json& v = j_.at(key);
      std::vector<std::optional<double>> vals;
      if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (v[i].is_null()) {
            vals.emplace_back();
          } else {
            vals.emplace_back(as_number(v[i], sub(key) + "." + std::to_string(i)) * u.factor);
          }
        }
      } else if (!v.is_null()) {
        vals.emplace_back(as_number(v, sub(key)) * u.factor);
      }
      out = std::move(vals);
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!it.key().empty() && it.key()[0] == '_') continue;
      if (!used_.count(it.key())) throw UnknownFieldError(sub(it.key()));
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "not finite");
    return x;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Vec3 read_vec3(const json& v, const std::string& path, double factor) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected an array of three numbers");
  Vec3 out{};
  for (std::size_t k = 0; k < 3; ++k) out[k] = Obj::as_number(v[k], path + "." + std::to_string(k)) * factor;
  return out;
}

std::optional<Vec3> opt_vec3(Obj& o, const std::string& base, const std::vector<UnitSuffix>& units) {
  std::optional<Vec3> out;
  for (const auto& u : units) {
    const std::string key = base + u.suffix;
    if (const json* v = o.find(key)) {
      if (out) throw ConfigError(o.sub(base), "given twice");
      out = read_vec3(*v, o.sub(key), u.factor);
    }
  }
  return out;
}

std::size_t read_index(const json& v, const std::string& path, std::size_t bound) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || static_cast<std::size_t>(v.get<std::int64_t>()) >= bound) {
    throw ConfigError(path, "expected an index below " + std::to_string(bound));
  }
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

std::pair<std::size_t, std::size_t> read_pair(const json& v, const std::string& path, std::size_t bound) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected two indices");
  return {read_index(v[0], path + ".0", bound), read_index(v[1], path + ".1", bound)};
}

// Converts InputError from module-level validation into a field-path error.
template <class F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    throw ConfigError(path, e.what());
  }
}

struct ParsedSystem {
  SpinSystem system;
  Vec3 nv_axis;
};

ParsedSystem parse_system(Obj o) {
  Vec3 axis{1.0, 1.0, 1.0};
  if (const json* v = o.find("nv_axis")) axis = read_vec3(*v, o.sub("nv_axis"), 1.0);
  const double axis_norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(axis_norm > 0)) throw ConfigError(o.sub("nv_axis"), "zero vector");
  for (auto& c : axis) c /= axis_norm;

  const json* list = o.find("nuclei");
  if (!list || !list->is_array() || list->empty()) throw ConfigError(o.sub("nuclei"), "expected a non-empty array");
  const PhysicalConstants constants;
  std::vector<NuclearSpin> nuclei;
  for (std::size_t i = 0; i < list->size(); ++i) {
    Obj n((*list)[i], o.sub("nuclei") + "." + std::to_string(i));
    NuclearSpin spin;
    spin.label = n.string("label", "n" + std::to_string(i));
    spin.position = opt_vec3(n, "position", kLength);
    const auto a_par = n.opt_quantity("a_par", kFrequency);
    const auto a_perp = n.opt_quantity("a_perp", kFrequency);
    if (a_par.has_value() != a_perp.has_value()) {
      throw ConfigError(n.sub(a_par ? "a_perp" : "a_par"), "a_par and a_perp must be given together");
    }
    if (a_par) {
      spin.a_par = *a_par;
      spin.a_perp = *a_perp;
    } else if (spin.position) {
      const auto hf = at_path(n.sub("position"), [&] { return hyperfine_from_position(*spin.position, axis, constants); });
      spin.a_par = hf.a_par;
      spin.a_perp = hf.a_perp;
    } else {
      throw ConfigError(n.sub("a_par"), "missing; give a_par and a_perp, or a position");
    }
    n.finish();
    at_path(n.path(), [&] {
      spin.validate();
      return 0;
    });
    nuclei.push_back(std::move(spin));
  }
  std::pair<std::size_t, std::size_t> pair{0, nuclei.size() > 1 ? 1 : 0};
  if (const json* v = o.find("pair")) pair = read_pair(*v, o.sub("pair"), nuclei.size());

  SpinSystem system = at_path(o.sub("nuclei"), [&] { return SpinSystem(nuclei, pair, constants); });

  const bool from_positions = o.boolean("dipolar_from_positions", false);
  if (from_positions) {
    for (std::size_t i = 0; i < system.size(); ++i) {
      for (std::size_t k = i + 1; k < system.size(); ++k) {
        const auto& pi = system.nucleus(i).position;
        const auto& pk = system.nucleus(k).position;
        if (!pi || !pk) throw ConfigError(o.sub("dipolar_from_positions"), "every nucleus needs a position");
        const Vec3 r{(*pk)[0] - (*pi)[0], (*pk)[1] - (*pi)[1], (*pk)[2] - (*pi)[2]};
        system.set_dipolar(i, k, at_path(o.sub("dipolar_from_positions"), [&] { return dipolar_coupling(r, axis, constants); }));
      }
    }
  }
  if (const json* d = o.find("dipolar")) {
    if (!d->is_array()) throw ConfigError(o.sub("dipolar"), "expected an array");
    for (std::size_t k = 0; k < d->size(); ++k) {
      Obj e((*d)[k], o.sub("dipolar") + "." + std::to_string(k));
      const json* p = e.find("pair");
      if (!p) throw ConfigError(e.sub("pair"), "missing");
      const auto ij = read_pair(*p, e.sub("pair"), system.size());
      const double g = e.quantity("g", kFrequency);
      at_path(e.sub("pair"), [&] {
        system.set_dipolar(ij.first, ij.second, g);
        return 0;
      });
      e.finish();
    }
  }
  o.finish();
  return {std::move(system), axis};
}

void parse_drive(Obj o, const SpinSystem& system, DriveParams& drive) {
  const auto& constants = system.constants();
  const auto [p1, p2] = system.pair();
  drive.b0 = o.number("b0_t");

  if (auto c = o.find("carrier")) {
    Obj carrier(*c, o.sub("carrier"));
    const std::string mode = carrier.string("mode", "pair_midpoint");
    if (mode == "pair_midpoint") {
      const double sum = carrier.opt_quantity("detuning_sum", kFrequency).value_or(0.0);
      drive.omega_rf = constants.gamma_n * drive.b0 +
                       (system.nucleus(p1).a_par + system.nucleus(p2).a_par) / 4.0 - sum / 2.0;
    } else if (mode == "explicit") {
      drive.omega_rf = carrier.quantity("omega", kFrequency);
    } else if (mode == "nucleus") {
      const json* idx = carrier.find("nucleus");
      if (!idx) throw ConfigError(carrier.sub("nucleus"), "missing");
      const std::size_t k = read_index(*idx, carrier.sub("nucleus"), system.size());
      const double target = carrier.quantity("detuning", kFrequency);
      drive.omega_rf = constants.gamma_n * drive.b0 + system.nucleus(k).a_par / 2.0 - target;
    } else {
      throw ConfigError(carrier.sub("mode"), "unknown mode '" + mode + "' (pair_midpoint, explicit, nucleus)");
    }
    carrier.finish();
  } else {
    drive.omega_rf = constants.gamma_n * drive.b0 + (system.nucleus(p1).a_par + system.nucleus(p2).a_par) / 4.0;
  }

  drive.detuning_overrides.assign(system.size(), std::nullopt);
  if (auto ov = o.opt_quantity_list("detuning_overrides", kFrequency)) {
    if (ov->size() != system.size()) {
      throw ConfigError(o.sub("detuning_overrides"), "expected one entry (or null) per nucleus");
    }
    drive.detuning_overrides = *ov;
  }

  if (auto delta = o.opt_quantity("delta", kFrequency)) {
    if (*delta < 0) throw ConfigError(o.sub("delta"), "must be >= 0");
    const auto det = at_path(o.path(), [&] { return static_detunings(system, drive); });
    const double mid = 0.5 * (det[p1] + det[p2]);
    const double orient = det[p2] >= det[p1] ? 1.0 : -1.0;
    drive.detuning_overrides[p1] = mid - orient * *delta;
    drive.detuning_overrides[p2] = mid + orient * *delta;
  }

  const auto rabi = o.opt_quantity("omega_rf", kFrequency);
  const auto ratio = o.opt_number("omega_rf_over_delta");
  if (rabi && ratio) throw ConfigError(o.sub("omega_rf"), "give either omega_rf or omega_rf_over_delta");
  if (rabi) {
    drive.omega_rf_rabi = *rabi;
  } else if (ratio) {
    drive.omega_rf_rabi = *ratio * at_path(o.path(), [&] { return pair_imbalance(system, drive); });
  } else {
    throw ConfigError(o.sub("omega_rf"), "missing; expected one of " + join_suffixes("omega_rf", kFrequency) +
                                             ", omega_rf_over_delta");
  }

  drive.omega_mw = o.opt_quantity("omega_mw", kFrequency).value_or(drive.omega_rf);
  drive.enforce_lock = o.boolean("enforce_lock", true);

  if (auto s = o.find("schedule")) {
    Obj sched(*s, o.sub("schedule"));
    const std::string kind = sched.string("kind", "constant");
    if (kind == "exponential") {
      drive.schedule = at_path(sched.path(), [&] {
        return DetuningSchedule::exponential(sched.quantity("delta0", kFrequency), sched.quantity("rate", kRate),
                                             sched.opt_quantity("delta_inf", kFrequency).value_or(0.0));
      });
    } else if (kind != "constant") {
      throw ConfigError(sched.sub("kind"), "unknown kind '" + kind + "' (constant, exponential)");
    }
    sched.finish();
  }
  o.finish();
  at_path(o.path(), [&] {
    drive.validate(system);
    return 0;
  });
}

ResetImperfection parse_imperfection(const std::string& s, const std::string& path) {
  if (s == "mixed_state") return ResetImperfection::mixed_state;
  if (s == "skipped_reset") return ResetImperfection::skipped_reset;
  throw ConfigError(path, "unknown value '" + s + "' (mixed_state, skipped_reset)");
}

std::string imperfection_name(ResetImperfection r) {
  return r == ResetImperfection::mixed_state ? "mixed_state" : "skipped_reset";
}

double pair_rms(const SpinSystem& system, const std::vector<double>& v) {
  const auto [p1, p2] = system.pair();
  return std::sqrt(0.5 * (v[p1] * v[p1] + v[p2] * v[p2]));
}

std::vector<double> a_perps(const SpinSystem& system) {
  std::vector<double> out;
  for (const auto& n : system.nuclei()) out.push_back(n.a_perp);
  return out;
}

void parse_protocol(Obj o, ExperimentConfig& cfg) {
  auto& p = cfg.protocol;
  p.t1_rho = o.opt_quantity("t1rho", kTime).value_or(std::numeric_limits<double>::infinity());
  p.polarization = o.number("polarization", 1.0);
  p.nv_decay_in_segment = o.boolean("nv_decay_in_segment", false);
  p.imperfection = parse_imperfection(o.string("imperfection", "mixed_state"), o.sub("imperfection"));

  const auto t_re = o.opt_quantity("t_re", kTime);
  const auto ratio = o.opt_number("t_re_for_alpha_ratio");
  if (t_re && ratio) throw ConfigError(o.sub("t_re"), "give either t_re or t_re_for_alpha_ratio");
  if (t_re) {
    p.t_re = *t_re;
  } else if (ratio) {
    if (!(*ratio > 0)) throw ConfigError(o.sub("t_re_for_alpha_ratio"), "must be positive");
    // Pair-averaged coupling and detuning; the two agree exactly in the
    // symmetric configurations this mapping is meant for.
    const auto det = static_detunings(cfg.system, cfg.drive);
    const double a = pair_rms(cfg.system, a_perps(cfg.system));
    const double d = pair_rms(cfg.system, det);
    const double gamma =
        gamma_for_alpha_sq(*ratio * cfg.drive.omega_rf_rabi, a, d, o.sub("t_re_for_alpha_ratio"));
    const double rest = gamma - 1.0 / p.t1_rho;
    if (!(rest > 0)) throw ConfigError(o.sub("t_re_for_alpha_ratio"), "required Gamma_N is below 1/T1rho");
    p.t_re = 1.0 / rest;
    std::ostringstream note;
    note << "t_re resolved to " << p.t_re * 1e6 << " us for |alpha|^2/Omega_rf = " << *ratio;
    cfg.notes.push_back(note.str());
  } else {
    throw ConfigError(o.sub("t_re"), "missing; expected one of " + join_suffixes("t_re", kTime) +
                                         ", t_re_for_alpha_ratio");
  }
  o.finish();
  at_path(o.path(), [&] {
    p.validate();
    return 0;
  });
}

std::vector<double> expand_rates(const std::vector<std::optional<double>>& v, std::size_t n, const std::string& path,
                                 bool inverse) {
  std::vector<double> out(n, 0.0);
  if (v.size() != 1 && v.size() != n) throw ConfigError(path, "expected a scalar or one entry per nucleus");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = v.size() == 1 ? v[0] : v[i];
    if (!x) continue;
    if (inverse) {
      if (!(*x > 0)) throw ConfigError(path, "times must be positive");
      out[i] = 1.0 / *x;
    } else {
      out[i] = *x;
    }
  }
  return out;
}

void parse_noise(Obj o, ExperimentConfig& cfg) {
  const std::size_t n = cfg.system.size();
  const auto gamma = o.opt_quantity_list("gamma", kRate);
  const auto t2 = o.opt_quantity_list("t2", kTime);
  if (gamma && t2) throw ConfigError(o.sub("gamma"), "give either gamma or t2");
  if (gamma) cfg.noise.gamma = expand_rates(*gamma, n, o.sub("gamma"), false);
  if (t2) {
    cfg.noise.gamma = expand_rates(*t2, n, o.sub("t2"), true);
    cfg.notes.push_back("nuclear lowering rate taken as Gamma_j = 1/T2");
  }
  if (auto deph = o.opt_quantity_list("dephasing", kRate)) cfg.noise.dephasing = expand_rates(*deph, n, o.sub("dephasing"), false);
  o.finish();
  at_path(o.path(), [&] {
    cfg.noise.validate(n);
    return 0;
  });
}

void parse_effective(Obj o, ExperimentConfig& cfg) {
  const std::string phase = o.string("alpha_phase", "formula");
  if (phase == "formula") {
    cfg.alpha_phase = AlphaPhase::formula;
  } else if (phase == "common") {
    cfg.alpha_phase = AlphaPhase::common;
  } else {
    throw ConfigError(o.sub("alpha_phase"), "unknown value '" + phase + "' (formula, common)");
  }
  const auto ratio = o.opt_number("alpha_sq_over_omega_rf");
  const json* explicit_alpha = o.find("alpha_override_sqrt_per_s");
  if (ratio && explicit_alpha) throw ConfigError(o.sub("alpha_sq_over_omega_rf"), "give either a ratio or explicit amplitudes");
  if (ratio) {
    if (!(*ratio > 0)) throw ConfigError(o.sub("alpha_sq_over_omega_rf"), "must be positive");
    // |alpha_j| scales with a_perp_j, normalized so the pair reaches the ratio.
    const double a_ref = pair_rms(cfg.system, a_perps(cfg.system));
    if (!(a_ref > 0)) throw ConfigError(o.sub("alpha_sq_over_omega_rf"), "pair has no perpendicular coupling");
    const double amp = std::sqrt(*ratio * cfg.drive.omega_rf_rabi);
    cfg.alpha_override.clear();
    for (const auto& n : cfg.system.nuclei()) cfg.alpha_override.emplace_back(amp * n.a_perp / a_ref);
  } else if (explicit_alpha) {
    const std::string path = o.sub("alpha_override_sqrt_per_s");
    if (!explicit_alpha->is_array() || explicit_alpha->size() != cfg.system.size()) {
      throw ConfigError(path, "expected one [re, im] pair per nucleus");
    }
    cfg.alpha_override.clear();
    for (std::size_t i = 0; i < explicit_alpha->size(); ++i) {
      const json& e = (*explicit_alpha)[i];
      const std::string ep = path + "." + std::to_string(i);
      if (!e.is_array() || e.size() != 2) throw ConfigError(ep, "expected [re, im]");
      cfg.alpha_override.emplace_back(Obj::as_number(e[0], ep + ".0"), Obj::as_number(e[1], ep + ".1"));
    }
  }
  o.finish();
}

void parse_sweep(const json& v, const std::string& path, ExperimentConfig& cfg) {
  if (!v.is_array() || v.empty() || v.size() > 2) throw ConfigError(path, "expected one or two axes");
  for (std::size_t k = 0; k < v.size(); ++k) {
    Obj axis(v[k], path + "." + std::to_string(k));
    const std::string param = axis.string("param", "");
    if (param.empty()) throw ConfigError(axis.sub("param"), "missing");
    const json* values = axis.find("values");
    if (!values || !values->is_array() || values->empty()) throw ConfigError(axis.sub("values"), "expected a non-empty array");
    std::vector<double> vals;
    for (std::size_t i = 0; i < values->size(); ++i) {
      vals.push_back(Obj::as_number((*values)[i], axis.sub("values") + "." + std::to_string(i)));
    }
    axis.finish();
    cfg.sweep.emplace_back(param, std::move(vals));
  }
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::full: return "full";
    case Backend::effective: return "effective";
    case Backend::both: return "both";
  }
  return "full";
}

Backend parse_backend(const std::string& name) {
  if (name == "full") return Backend::full;
  if (name == "effective") return Backend::effective;
  if (name == "both") return Backend::both;
  throw ConfigError("backend", "unknown backend '" + name + "' (full, effective, both)");
}

double gamma_for_alpha_sq(double alpha_sq, double a_perp, double delta, const std::string& path) {
  if (!(alpha_sq > 0)) throw ConfigError(path, "target |alpha|^2 must be positive");
  const double g2 = (a_perp / 4.0) * (a_perp / 4.0);
  if (!(g2 > 0)) throw ConfigError(path, "pair has no perpendicular coupling");
  // |alpha|^2 = Gamma g^2 / (Delta^2 + Gamma^2 / 4), solved for Gamma.
  const double disc = g2 * g2 - alpha_sq * alpha_sq * delta * delta;
  if (disc < -1e-12 * g2 * g2) {
    std::ostringstream msg;
    msg << "target |alpha|^2 = " << alpha_sq << " 1/s exceeds the attainable maximum " << g2 / std::abs(delta)
        << " 1/s";
    throw ConfigError(path, msg.str());
  }
  return 2.0 * (g2 + std::sqrt(std::max(0.0, disc))) / alpha_sq;
}

EffectiveModel ExperimentConfig::effective_model() const {
  return EffectiveModel{system, drive, gamma_n_reset(), noise, alpha_phase, alpha_override};
}

ExperimentConfig parse_config(const json& j) {
  Obj root(j, "");
  ExperimentConfig cfg;
  cfg.name = root.string("name", "experiment");
  cfg.seed = root.opt_unsigned("seed").value_or(0);
  cfg.backend = parse_backend(root.string("backend", "full"));
  cfg.t_total = root.opt_quantity("t_total", kTime).value_or(0.0);
  if (cfg.t_total < 0) throw ConfigError("t_total", "must be positive");

  const json* sys = root.find("system");
  if (!sys) throw ConfigError("system", "missing");
  auto parsed = parse_system(Obj(*sys, "system"));
  cfg.system = std::move(parsed.system);
  cfg.nv_axis = parsed.nv_axis;

  const json* drive = root.find("drive");
  if (!drive) throw ConfigError("drive", "missing");
  parse_drive(Obj(*drive, "drive"), cfg.system, cfg.drive);

  const json* protocol = root.find("protocol");
  if (!protocol) throw ConfigError("protocol", "missing");
  parse_protocol(Obj(*protocol, "protocol"), cfg);

  if (const json* v = root.find("noise")) parse_noise(Obj(*v, "noise"), cfg);
  if (const json* v = root.find("effective")) parse_effective(Obj(*v, "effective"), cfg);

  if (const json* v = root.find("sampling")) {
    Obj s(*v, "sampling");
    if (auto every = s.opt_unsigned("sample_every")) {
      if (*every == 0) throw ConfigError("sampling.sample_every", "must be >= 1");
      cfg.sampling.sample_every = *every;
    }
    cfg.sampling.dt_max = s.opt_quantity("dt_max", kTime);
    if (cfg.sampling.dt_max && !(*cfg.sampling.dt_max > 0)) throw ConfigError("sampling.dt_max", "must be positive");
    s.finish();
  }
  if (const json* v = root.find("analysis")) {
    Obj a(*v, "analysis");
    cfg.analysis.tcv_threshold = a.number("tcv_threshold", cfg.analysis.tcv_threshold);
    if (!(cfg.analysis.tcv_threshold > 0 && cfg.analysis.tcv_threshold <= 1)) {
      throw ConfigError("analysis.tcv_threshold", "must lie in (0, 1]");
    }
    a.finish();
  }
  if (const json* v = root.find("sweep")) parse_sweep(*v, "sweep", cfg);
  root.finish();
  return cfg;
}

json ExperimentConfig::resolved() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["backend"] = backend_name(backend);
  j["t_total_s"] = t_total;

  json sys;
  sys["nv_axis"] = nv_axis;
  sys["pair"] = {system.pair().first, system.pair().second};
  json nuclei = json::array();
  for (const auto& n : system.nuclei()) {
    json e{{"label", n.label}, {"a_par_rad_s", n.a_par}, {"a_perp_rad_s", n.a_perp}};
    if (n.position) e["position_m"] = *n.position;
    nuclei.push_back(e);
  }
  sys["nuclei"] = nuclei;
  json dip = json::array();
  for (std::size_t i = 0; i < system.size(); ++i)
    for (std::size_t k = i + 1; k < system.size(); ++k)
      if (system.dipolar(i, k) != 0.0) dip.push_back({{"pair", {i, k}}, {"g_rad_s", system.dipolar(i, k)}});
  if (!dip.empty()) sys["dipolar"] = dip;
  j["system"] = sys;

  json dr;
  dr["b0_t"] = drive.b0;
  dr["omega_rf_rad_s"] = drive.omega_rf_rabi;
  dr["carrier"] = {{"mode", "explicit"}, {"omega_rad_s", drive.omega_rf}};
  dr["omega_mw_rad_s"] = drive.omega_mw;
  dr["enforce_lock"] = drive.enforce_lock;
  json ov = json::array();
  bool any = false;
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (i < drive.detuning_overrides.size() && drive.detuning_overrides[i]) {
      ov.push_back(*drive.detuning_overrides[i]);
      any = true;
    } else {
      ov.push_back(nullptr);
    }
  }
  if (any) dr["detuning_overrides_rad_s"] = ov;
  if (drive.schedule.time_dependent()) {
    dr["schedule"] = {{"kind", "exponential"},
                      {"delta0_rad_s", drive.schedule.delta0},
                      {"rate_per_s", drive.schedule.rate},
                      {"delta_inf_rad_s", drive.schedule.delta_inf}};
  }
  j["drive"] = dr;

  j["protocol"] = {{"t_re_s", protocol.t_re},
                   {"t1rho_s", number_or_null(protocol.t1_rho)},
                   {"polarization", protocol.polarization},
                   {"nv_decay_in_segment", protocol.nv_decay_in_segment},
                   {"imperfection", imperfection_name(protocol.imperfection)}};

  json noise_j = json::object();
  if (!noise.gamma.empty()) noise_j["gamma_per_s"] = noise.gamma;
  if (!noise.dephasing.empty()) noise_j["dephasing_per_s"] = noise.dephasing;
  j["noise"] = noise_j;

  json eff{{"alpha_phase", alpha_phase == AlphaPhase::common ? "common" : "formula"}};
  if (!alpha_override.empty()) {
    json a = json::array();
    for (const auto& z : alpha_override) a.push_back({z.real(), z.imag()});
    eff["alpha_override_sqrt_per_s"] = a;
  }
  j["effective"] = eff;

  json samp{{"sample_every", sampling.sample_every}};
  if (sampling.dt_max) samp["dt_max_s"] = *sampling.dt_max;
  j["sampling"] = samp;
  j["analysis"] = {{"tcv_threshold", analysis.tcv_threshold}};
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", path.string() + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_json_file(path)); }

void set_numeric(json& j, const std::string& path, double value) {
  for (const auto& one : split(path, '+')) {
    const auto parts = split(one, '.');
    if (one.empty() || std::any_of(parts.begin(), parts.end(), [](const std::string& p) { return p.empty(); })) {
      throw ConfigError(one.empty() ? "<param>" : one, "malformed parameter path");
    }
    json* node = &j;
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
      if (node->is_array()) {
        std::size_t idx = 0;
        try {
          idx = std::stoul(parts[k]);
        } catch (const std::exception&) {
          throw ConfigError(one, "'" + parts[k] + "' is not an array index");
        }
        if (idx >= node->size()) throw ConfigError(one, "index " + parts[k] + " out of range");
        node = &(*node)[idx];
      } else if (node->is_object() && node->contains(parts[k])) {
        node = &(*node)[parts[k]];
      } else {
        throw ConfigError(one, "no field '" + parts[k] + "'");
      }
    }
    const std::string& leaf = parts.back();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(leaf);
      } catch (const std::exception&) {
        throw ConfigError(one, "'" + leaf + "' is not an array index");
      }
      if (idx >= node->size() || !((*node)[idx].is_number() || (*node)[idx].is_null())) {
        throw ConfigError(one, "does not address a numeric entry");
      }
      (*node)[idx] = value;
    } else if (node->is_object()) {
      if (node->contains(leaf) && !(*node)[leaf].is_number()) throw ConfigError(one, "field is not numeric");
      (*node)[leaf] = value;
    } else {
      throw ConfigError(one, "parent is not an object");
    }
  }
}

std::vector<double> parse_values(const std::string& text) {
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("--values", "cannot parse '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ConfigError("--values", "cannot parse '" + s + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("--values", "expected start:stop:count");
    const double a = to_double(parts[0]);
    const double b = to_double(parts[1]);
    const double n = to_double(parts[2]);
    if (!(n >= 1) || n != std::floor(n)) throw ConfigError("--values", "count must be a positive integer");
    const auto count = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
  } else {
    for (const auto& s : split(text, ',')) out.push_back(to_double(s));
  }
  if (out.empty()) throw ConfigError("--values", "no values");
  return out;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "expected path=value");
  const auto vals = parse_values(assignment.substr(eq + 1));
  if (vals.size() != 1) throw ConfigError(assignment.substr(0, eq), "expected a single value");
  set_numeric(j, assignment.substr(0, eq), vals[0]);
}

}  // namespace nvs::app
