#pragma once
// JSON experiment configuration.
//
// Every dimensioned field carries its unit in the key: frequencies as
// *_khz, *_hz or *_rad_s (kHz and Hz are cyclic, converted with 2 pi),
// times as *_us, *_ms or *_s, lengths as *_nm or *_m. Keys starting with
// '_' are comments. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvs/dynamics.hpp"
#include "nvs/errors.hpp"
#include "nvs/model.hpp"

namespace nvs::app {

using json = nlohmann::json;

/// Configuration error tied to a dotted field path, e.g. "protocol.t_re".
class ConfigError : public InputError {
 public:
  ConfigError(std::string path, const std::string& message)
      : InputError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A key the schema does not define, typically a misspelled path.
class UnknownFieldError : public ConfigError {
 public:
  explicit UnknownFieldError(std::string path) : ConfigError(std::move(path), "unknown field") {}
};

enum class Backend { full, effective, both };
std::string backend_name(Backend b);
Backend parse_backend(const std::string& name);

struct SamplingParams {
  std::size_t sample_every = 1;
  /// Effective-backend step; defaults to t_re.
  std::optional<double> dt_max;
};

struct AnalysisParams {
  double tcv_threshold = 0.96;
};

struct ExperimentConfig {
  std::string name;
  SpinSystem system{{NuclearSpin{}, NuclearSpin{}}, {0, 1}};
  Vec3 nv_axis{0.57735026918962576451, 0.57735026918962576451, 0.57735026918962576451};
  DriveParams drive;
  ResetProtocol protocol;
  NoiseParams noise;
  AlphaPhase alpha_phase = AlphaPhase::formula;
  std::vector<cplx> alpha_override;
  Backend backend = Backend::full;
  double t_total = 0.0;
  SamplingParams sampling;
  AnalysisParams analysis;
  std::uint64_t seed = 0;
  /// Grid bundled with figure configs: (parameter path, values) per axis.
  std::vector<std::pair<std::string, std::vector<double>>> sweep;
  /// Informational strings collected while resolving ratios and derived fields.
  std::vector<std::string> notes;

  EffectiveModel effective_model() const;
  double gamma_n_reset() const { return gamma_reset(protocol.t_re, protocol.t1_rho); }

  /// Fully resolved configuration in SI units (rad/s, s, m). Parsing it back
  /// yields the same numeric parameters bit for bit.
  json resolved() const;
};

ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);

/// Sets a numeric field addressed by a dotted path ("protocol.t_re_us",
/// "system.nuclei.1.a_perp_khz"). Several paths joined by '+' receive the
/// same value. Throws ConfigError if a path does not lead to a numeric field
/// or into an existing object.
void set_numeric(json& j, const std::string& path, double value);

/// Parses "v1,v2,..." or "start:stop:count" (inclusive linear grid).
std::vector<double> parse_values(const std::string& text);

/// Parameter value for an override "path=value".
void apply_override(json& j, const std::string& assignment);

/// Gamma_N at which the common-phase |alpha|^2 of a nucleus with coupling
/// a_perp and detuning delta reaches alpha_sq, on the branch where Gamma_N
/// dominates delta. Throws ConfigError (at `path`) if the target exceeds the
/// largest attainable value (a_perp/4)^2 / |delta|.
double gamma_for_alpha_sq(double alpha_sq, double a_perp, double delta, const std::string& path);

}  // namespace nvs::app
