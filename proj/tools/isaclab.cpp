// isaclab: command-line runner for the AFDM sensing/communication toolkit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "isaclab/config.hpp"
#include "isaclab/experiments.hpp"
#include "isaclab/frame_io.hpp"

namespace {

using namespace isaclab;
using nlohmann::json;

enum ExitCode { ok = 0, config_error = 2, infeasible = 3, numeric_failure = 4 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  std::string profile;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

struct Context {
  ExperimentConfig config;
  Options opts;

  std::uint64_t seed() const {
    if (opts.seed) return *opts.seed;
    if (config.seed) return *config.seed;
    throw ConfigError("a seed is required for this command (--seed or 'seed:' in the config)");
  }
};

Context load(const Options& opts) {
  std::optional<Profile> profile;
  if (!opts.profile.empty()) profile = parse_profile(opts.profile);
  Context ctx;
  ctx.opts = opts;
  ctx.config = opts.config_path.empty() ? load_config(YAML::Node(), profile) : load_config_file(opts.config_path, profile);
  return ctx;
}

/// Writes to --out when given, stdout otherwise.
template <class Writer>
void emit(const std::string& out, Writer&& write) {
  if (out.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) throw ConfigError("cannot open output '" + out + "'");
  write(os);
}

void require_sensing(const ExperimentConfig& c) {
  if (c.kind == WaveformKind::afdm && !sensing_compatible(c.waveform))
    throw ConfigError("field 'waveform.c1': sensing needs 2 N c1 to be an integer, got " +
                      std::to_string(c.waveform.shift_per_delay()));
  if (c.targets.empty()) throw ConfigError("field 'scenario.targets': at least one target is required");
}

ComplexMatrix transmitted_symbols(const Context& ctx) {
  auto rng = make_rng(ctx.seed(), 0, "symbols");
  return random_symbols(ctx.config.transmit_params(), rng);
}

int cmd_modulate(const Context& ctx) {
  const auto params = ctx.config.transmit_params();
  const auto frame = build_frame(transmitted_symbols(ctx), params);
  const std::string out = ctx.opts.out.empty() ? "frame.bin" : ctx.opts.out;
  write_frame_file(out, {params.n_subcarriers, params.n_cpp, params.n_symbols, frame});
  std::cout << "wrote " << frame.size() << " samples to " << out << '\n';
  return ok;
}

FrameFile read_matching(const std::string& path, const AfdmParams& params) {
  auto f = read_frame_file(path);
  if (f.n_subcarriers != params.n_subcarriers || f.n_cpp != params.n_cpp || f.n_symbols != params.n_symbols)
    throw ConfigError("frame '" + path + "' has N=" + std::to_string(f.n_subcarriers) + ", N_cp=" +
                      std::to_string(f.n_cpp) + ", N_sym=" + std::to_string(f.n_symbols) +
                      ", which does not match the config");
  return f;
}

int cmd_simulate(const Context& ctx) {
  const auto& c = ctx.config;
  const auto params = c.transmit_params();
  ComplexVector frame = ctx.opts.in.empty() ? build_frame(transmitted_symbols(ctx), params)
                                            : read_matching(ctx.opts.in, params).samples;
  check_guard(c.targets, params);
  const auto rx = apply_channel(frame, c.targets, params, {c.noise_var(), ctx.seed(), 0}, c.fluctuation);
  const std::string out = ctx.opts.out.empty() ? "received.bin" : ctx.opts.out;
  write_frame_file(out, {params.n_subcarriers, params.n_cpp, params.n_symbols, rx});
  std::cout << "wrote " << rx.size() << " samples to " << out << '\n';
  return ok;
}

int cmd_sense(const Context& ctx) {
  const auto& c = ctx.config;
  if (c.kind != WaveformKind::afdm) throw ConfigError("field 'waveform.kind': sense runs the AFDM receiver only");
  if (!sensing_compatible(c.waveform))
    throw ConfigError("field 'waveform.c1': sensing needs 2 N c1 to be an integer");
  if (ctx.opts.in.empty()) throw ConfigError("sense needs --in with a received frame");
  const auto params = c.transmit_params();
  const auto frame = read_matching(ctx.opts.in, params);
  const auto y = parse_frame(frame.samples, params);
  const auto stack = build_stack(y, transmitted_symbols(ctx), params);
  const auto estimates = estimate_targets(cfar_detect(stack, c.cfar), params);
  emit(ctx.opts.out, [&](std::ostream& os) {
    os << "l_hat,tau_hat_s,alpha_hat,b_hat,beta_hat,fd_hat_hz,peak_mag_db\n";
    for (const auto& e : estimates)
      os << e.l_hat << ',' << csv_number(e.tau_hat) << ',' << e.alpha_hat << ',' << csv_number(e.b_hat) << ','
         << e.beta_hat << ',' << csv_number(e.fd_hat) << ',' << csv_number(20.0 * std::log10(e.peak_magnitude))
         << '\n';
  });
  return ok;
}

int cmd_image(const Context& ctx) {
  const auto& c = ctx.config;
  require_sensing(c);
  ImageTrial base;
  base.params = c.transmit_params();
  base.ofdm = c.kind == WaveformKind::ofdm;
  base.targets = c.targets;
  base.noise_variance = c.noise_var();
  base.fluctuation = c.fluctuation;
  base.cfar = c.cfar;
  const auto rows = run_image_sweep(base, c.sweep.variable, c.sweep.values(), c.trials, ctx.seed(), ctx.opts.workers);
  emit(ctx.opts.out, [&](std::ostream& os) { write_image_csv(os, rows); });
  return ok;
}

int cmd_metrics(const Context& ctx) {
  const auto& c = ctx.config;
  MetricConfig m;
  try {
    m = metric_config(c);
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("metrics: ") + e.what());
  }
  if (m.tau_max <= 0.0 || m.fd_max <= 0.0)
    std::cerr << "warning: tolerable delay or Doppler is zero for this waveform; SSE is zero\n";
  AfdmParams p = c.waveform;
  const auto r = evaluate_metrics(p, m, c.metrics.k_eta, c.metrics.k_p, c.metrics.p_e_com);
  json j{{"cse", r.cse},
         {"sse", r.sse},
         {"sop_exact", r.sop_exact},
         {"sop_min", r.sop_min},
         {"sop_max", r.sop_max},
         {"eta_sc", r.eta_sc},
         {"p_e_sc", r.p_e_sc},
         {"inputs",
          {{"profile", profile_name(c.profile)},
           {"waveform", c.kind == WaveformKind::afdm ? "afdm" : "ofdm"},
           {"n_subcarriers", p.n_subcarriers},
           {"n_cpp", p.n_cpp},
           {"n_symbols", p.n_symbols},
           {"c1", p.c1.str()},
           {"mod_order", p.mod_order},
           {"gamma", m.gamma},
           {"p_fa", m.p_fa},
           {"p_d_threshold", m.p_d},
           {"d_bar_tau", m.d_bar_tau},
           {"d_bar_fd", m.d_bar_fd},
           {"sinr_db", c.metrics.sinr_db},
           {"tau_max", m.tau_max},
           {"fd_max", m.fd_max},
           {"frame_time", m.frame_time},
           {"k_eta", c.metrics.k_eta},
           {"k_p", c.metrics.k_p},
           {"p_e_com", c.metrics.p_e_com}}}};
  emit(ctx.opts.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  return ok;
}

int cmd_tradeoff(const Context& ctx) {
  const auto& c = ctx.config;
  const auto& t = c.tradeoff;
  TradeoffInputs in;
  in.metric = metric_config(c);
  in.carrier_hz = c.waveform.carrier_hz;
  in.guard_xi_v = c.waveform.guard_xi_v;
  in.mod_order = t.mod_order;
  in.n = t.n_subcarriers;
  in.n_cpp = t.n_cpp;
  in.n_symbols = t.n_symbols;
  in.c1_offset = t.c1_offset;
  in.sinr_db = t.sinr_db;
  in.k = t.k;
  in.k_reference = c.metrics.k_tau;
  in.sinr_reference_db = c.metrics.sinr_db;
  in.k3 = t.k3;
  for (double r = t.r_max_start; r <= t.r_max_stop + 1e-9; r += t.r_max_step) in.r_max.push_back(r);
  in.fig4b_n = t.fig4b_n;
  in.k4 = t.k4;
  const auto curves = tradeoff_curves(in);
  const std::filesystem::path dir = ctx.opts.out.empty() ? "tradeoff" : ctx.opts.out;
  std::filesystem::create_directories(dir);
  for (const auto& curve : curves) {
    std::ofstream os(dir / (curve.name + ".csv"), std::ios::binary);
    if (!os) throw ConfigError("cannot write into '" + dir.string() + "'");
    write_curve_csv(os, curve);
  }
  std::cout << "wrote " << curves.size() << " curves to " << dir.string() << '\n';
  return ok;
}

int cmd_design(const Context& ctx) {
  const auto& c = ctx.config;
  const auto req = design_requirement(c);
  const auto region = select_parameters(req);
  json j{{"feasible", region.feasible},
         {"requirement",
          {{"tau_req", req.tau_req},
           {"fd_req", req.fd_req},
           {"range_m", range_from_delay(req.tau_req)},
           {"velocity_mps", velocity_from_doppler(req.fd_req, c.waveform.carrier_hz)},
           {"bandwidth", req.bandwidth},
           {"guard_xi_v", req.guard_xi_v}}}};
  if (!region.feasible) {
    j["violated"] = region.violated;
  } else {
    j["c1_hi"] = region.c1_hi;
    j["c1_lo_at_reference_n"] = region.c1_lo_reference;
    j["n_min"] = region.n_min;
    j["n_floor"] = region.n_floor;
    j["n_reference"] = region.n_reference;
    j["n_cpp_interval"] = {region.ncp_lo, region.ncp_hi};
    json witnesses = json::array();
    for (const auto& w : region.witnesses) {
      const double tau = max_tolerable_delay(w.c1, w.n_cpp, req.bandwidth);
      const double fd = max_tolerable_doppler(w.c1, w.n, req.guard_xi_v, req.bandwidth);
      witnesses.push_back({{"c1", w.c1},
                           {"n", w.n},
                           {"n_cpp", w.n_cpp},
                           {"tau_max", tau},
                           {"fd_max", fd},
                           {"meets_requirement", tau >= req.tau_req * (1 - 1e-12) && fd >= req.fd_req * (1 - 1e-9)}});
    }
    j["witnesses"] = witnesses;
  }
  emit(ctx.opts.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  return region.feasible ? ok : infeasible;
}

int cmd_rmse(const Context& ctx) {
  const auto& r = ctx.config.rmse;
  RmseSetup s;
  s.params = r.waveform;
  s.snr_db = r.snr_db;
  s.trials = r.trials;
  s.delay_samples = r.delay_samples;
  s.doppler = r.doppler;
  s.doppler_step = r.doppler_step;
  if (s.delay_samples > s.params.n_cpp) throw ConfigError("field 'rmse.delay_samples': exceeds the prefix length");
  const auto rows = run_rmse(s, ctx.seed(), ctx.opts.workers);
  emit(ctx.opts.out, [&](std::ostream& os) { write_rmse_csv(os, rows); });
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"AFDM integrated sensing and communication toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  app.add_option("--config", opts.config_path, "YAML experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "seed for all random streams");
  app.add_option("--out", opts.out, "output file (directory for tradeoff)");
  app.add_option("--profile", opts.profile, "defaults profile; falls back to ISACLAB_PROFILE")
      ->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--workers", opts.workers, "maximum worker threads")->check(CLI::PositiveNumber);

  using Command = int (*)(const Context&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"modulate", "write a transmit frame", cmd_modulate},
      {"simulate", "pass a frame through the configured channel", cmd_simulate},
      {"sense", "detect and estimate targets in a received frame", cmd_sense},
      {"image", "image-SNR and estimation sweep", cmd_image},
      {"metrics", "metric report as JSON", cmd_metrics},
      {"tradeoff", "trade-off curves as CSV files", cmd_tradeoff},
      {"design", "feasible waveform parameters as JSON", cmd_design},
      {"rmse", "velocity RMSE against the CRB", cmd_rmse},
  };
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name == "simulate" || name == "sense") sub->add_option("--in", opts.in, "input frame file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : config_error;
  }

  try {
    const Context ctx = load(opts);
    for (const auto& [name, help, fn] : commands)
      if (app.got_subcommand(name)) return fn(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const GuardViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return numeric_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return numeric_failure;
  }
  return config_error;
}
