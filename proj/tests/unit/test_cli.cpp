#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "nvs/app/commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

fs::path g_scratch;

fs::path scratch() {
  if (g_scratch.empty()) {
    g_scratch = fs::temp_directory_path() / ("nvs_cli_" + std::to_string(::getpid()));
    fs::create_directories(g_scratch);
    std::atexit([] {
      std::error_code ec;
      fs::remove_all(g_scratch, ec);
    });
  }
  return g_scratch;
}

Result run(const std::string& args) {
  const fs::path log = scratch() / "last.log";
  const std::string cmd = std::string(NVSINGLET_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const json& j) {
  const auto p = scratch() / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

json base_config() {
  return json::parse(R"({
    "name": "cli",
    "backend": "effective",
    "t_total_ms": 1,
    "system": {
      "nuclei": [
        {"label": "A", "a_par_khz": 2, "a_perp_khz": 16},
        {"label": "B", "a_par_khz": 4, "a_perp_khz": 16}
      ],
      "pair": [0, 1]
    },
    "drive": {
      "b0_t": 0.01,
      "carrier": {"mode": "pair_midpoint", "detuning_sum_khz": 0},
      "omega_rf_over_delta": 8
    },
    "protocol": {"t_re_us": 40, "t1rho_ms": 2},
    "effective": {"alpha_phase": "common"},
    "sampling": {"sample_every": 5, "dt_max_us": 40}
  })");
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  auto j = base_config();
  j["protocol"].erase("t_re_us");
  const auto r = run("evolve " + write_config("no_tre", j).string() + " --out " + (scratch() / "x").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("protocol.t_re") != std::string::npos);

  const auto f = run("figure fig9z --out-dir " + scratch().string());
  CHECK(f.code == 2);
  CHECK(f.output.find("fig2a-ramp") != std::string::npos);

  CHECK(run("abundance --trials 100").code == 2);
  CHECK(run("evolve /nonexistent/config.json").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("sweep " + write_config("sw_bad", base_config()).string() +
            " --param drive.nonsense_khz --values 1,2 --out " + (scratch() / "bad.csv").string())
            .code == 2);
}

TEST_CASE("evolve writes a trajectory and a record") {
  const auto cfg = write_config("evolve", base_config());
  const auto prefix = scratch() / "evolve_out";
  const auto r = run("evolve " + cfg.string() + " --out " + prefix.string());
  REQUIRE(r.code == 0);
  const auto csv = lines_of(slurp(prefix.string() + ".csv"));
  REQUIRE(csv.size() >= 2);
  CHECK(csv[0] == "t_ms,pop_uu,pop_dd,pop_S,pop_T,LN,fidelity_S");
  // 9 significant digits
  const auto& row = csv[1 + (csv.size() - 2) / 2];
  const auto field = row.substr(row.find(',') + 1, row.find(',', row.find(',') + 1) - row.find(',') - 1);
  std::string digits;
  for (char c : field.substr(0, field.find('e')))
    if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
  digits.erase(0, digits.find_first_not_of('0'));
  CHECK(digits.size() <= 9);
  CHECK(std::stod(field) == doctest::Approx(std::stod(field)));

  const json rec = json::parse(slurp(prefix.string() + ".json"));
  const auto back = nvs::app::record_from_json(rec);
  CHECK(nvs::app::to_json(back) == rec);
  CHECK(rec["config"]["protocol"]["t_re_s"].get<double>() == doctest::Approx(40e-6));

  const auto both = scratch() / "both_out";
  REQUIRE(run("evolve " + cfg.string() + " --backend both --out " + both.string()).code == 0);
  CHECK(fs::exists(both.string() + "_full.csv"));
  CHECK(fs::exists(both.string() + "_effective.csv"));
  const json rb = json::parse(slurp(both.string() + ".json"));
  CHECK(rb.contains("max_trace_distance"));
  CHECK(rb["max_trace_distance"].get<double>() >= 0.0);

  // echoed config reproduces the run
  const auto echoed = write_config("echoed", rec["config"]);
  const auto prefix2 = scratch() / "evolve_echo";
  REQUIRE(run("evolve " + echoed.string() + " --out " + prefix2.string()).code == 0);
  CHECK(slurp(prefix.string() + ".csv") == slurp(prefix2.string() + ".csv"));
}

TEST_CASE("steady reports") {
  const auto out = scratch() / "steady.json";
  REQUIRE(run("steady " + write_config("steady", base_config()).string() + " --out " + out.string()).code == 0);
  const json s = json::parse(slurp(out));
  CHECK(s["zero_mode_count"] == 1);
  CHECK(s["LN"].get<double>() == doctest::Approx(s["analytic"]["analytic_ln"].get<double>()).epsilon(0.01));

  auto d = base_config();
  d["drive"].erase("omega_rf_over_delta");
  d["drive"]["omega_rf_khz"] = 0;
  d["drive"]["detuning_overrides_khz"] = {0.5, 0.5};
  const auto dout = scratch() / "degenerate.json";
  const auto r = run("steady " + write_config("degenerate", d).string() + " --out " + dout.string());
  CHECK(r.code == 0);
  const json ds = json::parse(slurp(dout));
  CHECK(ds["zero_mode_count"].get<int>() >= 2);
  CHECK(ds["unique"] == false);
}

TEST_CASE("steady: the k-rule detuning beats zero imbalance under noise") {
  auto j = base_config();
  j["drive"].erase("omega_rf_over_delta");
  j["drive"]["omega_rf_khz"] = 4;
  j["effective"]["alpha_sq_over_omega_rf"] = 0.5;
  const double t2 = 0.05;
  j["noise"] = {{"t2_s", t2}};
  const double omega = nvs::kTwoPi * 4e3;
  const double k = std::sqrt(1 / t2) / std::sqrt(0.5 * omega);
  auto at = [&](double delta_khz, const char* name) {
    auto c = j;
    c["drive"]["delta_khz"] = delta_khz;
    const auto out = scratch() / (std::string(name) + "_out.json");
    REQUIRE(run("steady " + write_config(name, c).string() + " --out " + out.string()).code == 0);
    return json::parse(slurp(out))["LN"].get<double>();
  };
  const double ln_rule = at(std::sqrt(k / 2) * 4, "krule");
  const double ln_zero = at(0.0, "kzero");
  CHECK(ln_rule >= ln_zero);
}

TEST_CASE("sweep order does not depend on jobs") {
  const auto cfg = write_config("sweep", base_config()).string();
  const std::string args = " --param drive.carrier.detuning_sum_khz --values -0.5,0,0.5 --param "
                           "system.nuclei.1.a_perp_khz --values 12,16 --out ";
  const auto a = scratch() / "sweep1.csv", b = scratch() / "sweep4.csv";
  REQUIRE(run("sweep " + cfg + args + a.string() + " --jobs 1").code == 0);
  REQUIRE(run("sweep " + cfg + args + b.string() + " --jobs 4").code == 0);
  const auto text = slurp(a);
  CHECK(text == slurp(b));
  const auto rows = lines_of(text);
  REQUIRE(rows.size() == 7);
  CHECK(rows[1].rfind("-0.5,12,", 0) == 0);
  CHECK(rows[2].rfind("-0.5,16,", 0) == 0);
  CHECK(rows[6].rfind("0.5,16,", 0) == 0);
}

TEST_CASE("abundance is deterministic") {
  const auto a = scratch() / "ab1.json", b = scratch() / "ab2.json";
  REQUIRE(run("abundance --trials 20000 --seed 5 --out " + a.string()).code == 0);
  REQUIRE(run("abundance --trials 20000 --seed 5 --threads 3 --out " + b.string()).code == 0);
  CHECK(slurp(a) == slurp(b));
  const json j = json::parse(slurp(a));
  CHECK(j["seed"] == 5);
  CHECK(j.contains("std_error"));
  CHECK(j.contains("lattice"));
  CHECK_FALSE(j.contains("timestamp"));
}

TEST_CASE("figure names") {
  const auto r = run("figure fig2a --out-dir " + (scratch() / "fig").string() + " --set t_total_ms=1");
  CHECK(r.code == 0);
  CHECK(fs::exists(scratch() / "fig" / "fig2a.csv"));
  CHECK(fs::exists(scratch() / "fig" / "fig2a.json"));
}
