#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isaclab/config.hpp"
#include "isaclab/experiments.hpp"
#include "isaclab/frame_io.hpp"

using namespace isaclab;
using Catch::Approx;

namespace {

struct EnvGuard {
  EnvGuard() { unsetenv("ISACLAB_PROFILE"); }
  ~EnvGuard() { unsetenv("ISACLAB_PROFILE"); }
};

std::string message_of(const std::string& yaml) {
  try {
    load_config_string(yaml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "isaclab_test_config";
  std::filesystem::create_directories(dir);
  return dir / name;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ISACLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("paper profile loads the simulation table without overrides", "[config]") {
  EnvGuard env;
  const auto c = load_config_string("{}");
  CHECK(c.profile == Profile::paper);
  CHECK(c.waveform.carrier_hz == 24e9);
  CHECK(c.waveform.bandwidth_hz == 122.88e6);
  CHECK(c.waveform.subcarrier_spacing() == Approx(48e3));
  CHECK(c.waveform.n_subcarriers == 2560);
  CHECK(c.waveform.n_cpp == 288);
  CHECK(c.waveform.n_symbols == 32);
  // maximum normalized Doppler N c1 - xi - 1/2
  CHECK(c.waveform.n_subcarriers * c.waveform.c1.value() - c.waveform.guard_xi_v - 0.5 == Approx(2.0));
  CHECK(sensing_compatible(c.waveform));
  REQUIRE(c.targets.size() == 1);
  CHECK(std::abs(c.targets[0].gain) == Approx(1.0));
}

TEST_CASE("desk profile and precedence", "[config]") {
  EnvGuard env;
  const auto desk = load_config_string("profile: desk");
  CHECK(desk.waveform.n_subcarriers == 512);
  CHECK(desk.waveform.n_cpp == 58);
  CHECK(desk.waveform.n_symbols == 16);
  CHECK(desk.waveform.n_subcarriers * desk.waveform.c1.value() - 4.5 == Approx(2.0));

  setenv("ISACLAB_PROFILE", "desk", 1);
  CHECK(load_config_string("{}").profile == Profile::desk);
  CHECK(load_config_string("profile: paper").profile == Profile::paper);
  CHECK(load_config_string("profile: paper", Profile::desk).profile == Profile::desk);
  setenv("ISACLAB_PROFILE", "bogus", 1);
  CHECK_THROWS_AS(load_config_string("{}"), ConfigError);
}

TEST_CASE("overrides and rationals", "[config]") {
  EnvGuard env;
  const auto c = load_config_string(R"(
profile: desk
waveform:
  n_subcarriers: 64
  n_cpp: 8
  n_symbols: 8
  c1: 1/16
  kind: ofdm
scenario:
  snr_db: 10
  targets:
    - {delay_samples: 3, doppler: -1.5, gain: 2, swerling: 3}
sweep: {variable: snr_db, start: -5, stop: 5, step: 2.5}
seed: 99
metrics: {k_tau: 6, k_fd: 6, sinr_db: 20}
design: {range_m: 300, velocity_mps: 100}
)");
  CHECK(c.waveform.c1.numerator() == 1);
  CHECK(c.waveform.c1.denominator() == 16);
  CHECK(c.kind == WaveformKind::ofdm);
  CHECK(c.transmit_params().c1.is_zero());
  CHECK(c.noise_var() == Approx(0.1));
  CHECK(c.targets[0].swerling == Swerling::three);
  CHECK(std::abs(c.targets[0].gain) == Approx(2.0));
  CHECK(c.sweep.values().size() == 5);
  CHECK(*c.seed == 99);
  const auto req = design_requirement(c);
  CHECK(range_from_delay(req.tau_req) == Approx(300.0));
  CHECK(velocity_from_doppler(req.fd_req, 24e9) == Approx(100.0));
  const auto m = metric_config(c);
  CHECK(m.d_bar_tau / m.sigma(m.sinr).tau == Approx(6.0));
}

TEST_CASE("malformed configs name the field and line", "[config]") {
  EnvGuard env;
  auto msg = message_of("waveform:\n  n_subcarriers: 64\n  n_cp: 8\n");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("waveform.n_cp") != std::string::npos);

  msg = message_of("trials: 1\nwaveform:\n  n_symbols: lots\n");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("waveform.n_symbols") != std::string::npos);

  msg = message_of("sweep:\n  variable: bandwidth\n");
  CHECK(msg.find("sweep.variable") != std::string::npos);

  msg = message_of("waveform: {c1: one-half}");
  CHECK(msg.find("waveform.c1") != std::string::npos);

  CHECK(message_of("scenario:\n  targets:\n    - {delay_samples: 400}\n").find("prefix") != std::string::npos);
  CHECK(message_of("sensing: {training_p: 3}").find("even") != std::string::npos);
  CHECK(message_of("profile: fast").find("line 1") != std::string::npos);
  CHECK(message_of("waveform: [1, 2]").find("mapping") != std::string::npos);
  CHECK(message_of("a: [unclosed").find("line") != std::string::npos);
  CHECK_THROWS_AS(design_requirement(load_config_string("{}")), ConfigError);
}

TEST_CASE("image sweep is reproducible and independent of workers", "[config][determinism]") {
  ImageTrial t;
  t.params.n_subcarriers = 64;
  t.params.n_cpp = 8;
  t.params.n_symbols = 8;
  t.params.c1 = Rational(1, 16);
  t.params.guard_xi_v = 1;
  t.targets = {PathSpec{Complex{1.0, 0.0}, 3, 1.0, Swerling::zero}};
  t.noise_variance = 0.1;
  t.cfar = {1e-4, 16, 2, 4, 2};
  const std::vector<double> values{0.0, 0.5, 1.0};
  auto csv = [&](unsigned workers) {
    std::ostringstream os;
    write_image_csv(os, run_image_sweep(t, "doppler", values, 3, 5, workers));
    return os.str();
  };
  const auto one = csv(1);
  CHECK(one == csv(1));
  CHECK(one == csv(3));
  CHECK(one.rfind("sweep_value,image_snr_db_mean,image_snr_db_std,detect_rate,tau_rmse,fd_rmse\n", 0) == 0);
}

TEST_CASE("shipped sample configs load", "[config]") {
  EnvGuard env;
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ISACLAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    INFO(entry.path().string());
    CHECK_NOTHROW(load_config_file(entry.path().string()));
    ++count;
  }
  CHECK(count >= 6);
}

TEST_CASE("CSV numbers ignore the locale", "[config]") {
  CHECK(csv_number(0.5) == "0.5");
  CHECK(csv_number(-1.25e-7) == "-1.25e-07");
  CHECK(csv_number(std::nan("")) == "nan");
}

TEST_CASE("command-line exit codes", "[cli]") {
  EnvGuard env;
  const auto bad = scratch("bad.yaml");
  std::ofstream(bad) << "waveform:\n  n_subcarrier: 64\n";
  CHECK(run_cli("metrics --config " + bad.string()) == 2);
  CHECK(run_cli("bogus-command") == 2);
  CHECK(run_cli("image --profile desk") == 2);  // no seed

  const auto infeasible = scratch("infeasible.yaml");
  std::ofstream(infeasible) << "design: {tau_req: 1.0e-5, fd_req: 5.0e6}\n";
  CHECK(run_cli("design --config " + infeasible.string()) == 3);

  const auto feasible = scratch("feasible.yaml");
  std::ofstream(feasible) << "design: {tau_req: 2.34e-6, fd_req: 48000}\n";
  CHECK(run_cli("design --config " + feasible.string() + " --out " + scratch("design.json").string()) == 0);
  CHECK(slurp(scratch("design.json")).find("\"feasible\": true") != std::string::npos);
  CHECK(run_cli("metrics --profile desk --out " + scratch("m.json").string()) == 0);
}

TEST_CASE("modulate, simulate and sense recover an injected target", "[cli]") {
  EnvGuard env;
  const auto cfg = scratch("roundtrip.yaml");
  std::ofstream(cfg) << "profile: desk\nseed: 21\nscenario:\n  noise_variance: 0\n  targets:\n"
                        "    - {delay_samples: 12, doppler: -1.0}\n";
  const auto tx = scratch("tx.bin"), rx = scratch("rx.bin"), det = scratch("det.csv");
  REQUIRE(run_cli("modulate --config " + cfg.string() + " --out " + tx.string()) == 0);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --in " + tx.string() + " --out " + rx.string()) == 0);
  REQUIRE(run_cli("sense --config " + cfg.string() + " --in " + rx.string() + " --out " + det.string()) == 0);
  const auto frame = read_frame_file(rx.string());
  CHECK(frame.n_subcarriers == 512);
  const auto text = slurp(det);
  CHECK(text.find("\n12,") != std::string::npos);
  // nu' = nu (N + N_cp) / N = -1.113: beta -1, b on the 1/16 grid -0.125
  CHECK(text.find(",-1,-0.125,-1,") != std::string::npos);

  // byte-identical outputs for identical config and seed
  const auto again = scratch("tx2.bin");
  REQUIRE(run_cli("modulate --config " + cfg.string() + " --out " + again.string()) == 0);
  CHECK(slurp(tx) == slurp(again));
}
