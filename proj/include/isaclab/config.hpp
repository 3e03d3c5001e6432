#pragma once

// YAML experiment configuration. Consumers must link yaml-cpp.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "aft.hpp"
#include "channel.hpp"
#include "design.hpp"
#include "metrics.hpp"
#include "sensing.hpp"
#include "types.hpp"

namespace isaclab {

enum class Profile { paper, desk };

inline Profile parse_profile(const std::string& name) {
  if (name == "paper") return Profile::paper;
  if (name == "desk") return Profile::desk;
  throw ConfigError("unknown profile '" + name + "' (expected paper or desk)");
}

inline std::string profile_name(Profile p) { return p == Profile::paper ? "paper" : "desk"; }

enum class WaveformKind { afdm, ofdm };

struct SweepSpec {
  std::string variable = "doppler";
  double start = 0.0;
  double stop = 2.0;
  double step = 0.1;

  static const std::set<std::string>& vocabulary() {
    static const std::set<std::string> names{"doppler", "snr_db", "delay"};
    return names;
  }

  std::vector<double> values() const {
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
};

struct MetricSection {
  double gamma = 0.5;
  double p_fa = 1e-6;
  double p_d_threshold = 0.999;
  double k_tau = 4.0;  ///< sub-cell width in CRB sigmas, used when d_bar_* are absent
  double k_fd = 4.0;
  std::optional<double> d_bar_tau;
  std::optional<double> d_bar_fd;
  double sinr_db = 25.0;
  std::vector<double> cell_sinr_db;
  std::optional<double> b_rms;
  std::optional<double> t_rms;
  double k_eta = 0.5;
  double k_p = 0.5;
  double p_e_com = 0.0;
};

struct TradeoffSection {
  // SSE against the SOP upper bound
  std::size_t n_subcarriers = 8192;
  std::size_t n_cpp = 574;
  std::size_t n_symbols = 28;
  double c1_offset = 3.0;  ///< c1 = (2 xi + 1 + offset) / (2N)
  unsigned mod_order = 16;
  std::vector<double> sinr_db{10, 15, 20, 25};
  std::vector<double> k{1, 2, 3, 4, 5, 6, 7, 8};
  // SSE against CSE
  std::vector<double> k3{1, 2, 3, 4};
  double r_max_start = 100.0;
  double r_max_stop = 2000.0;
  double r_max_step = 100.0;
  // unambiguous range against velocity
  std::vector<std::size_t> fig4b_n{1024, 2048, 3072, 4096, 5120, 6144, 7168, 8192};
  std::vector<double> k4{0.7, 0.85, 1.0, 1.15, 1.3};
};

struct RmseSection {
  AfdmParams waveform;
  std::vector<double> snr_db{-10, -5, 0, 5, 10, 15, 20};
  std::size_t trials = 200;
  std::size_t delay_samples = 5;
  double doppler = 0.37;
  double doppler_step = 0.02;
};

struct DesignSection {
  std::optional<double> tau_req;
  std::optional<double> fd_req;
  std::optional<double> range_m;
  std::optional<double> velocity_mps;
};

struct ExperimentConfig {
  Profile profile = Profile::paper;
  WaveformKind kind = WaveformKind::afdm;
  AfdmParams waveform;
  std::vector<PathSpec> targets;
  double snr_db = 0.0;
  std::optional<double> noise_variance;
  Fluctuation fluctuation = Fluctuation::per_frame;
  CfarConfig cfar;
  SweepSpec sweep;
  std::size_t trials = 1;
  std::optional<std::uint64_t> seed;
  MetricSection metrics;
  TradeoffSection tradeoff;
  RmseSection rmse;
  DesignSection design;

  double noise_var() const { return noise_variance.value_or(std::pow(10.0, -snr_db / 10.0)); }

  /// Frame actually transmitted: OFDM is the c1 = c2 = 0 special case.
  AfdmParams transmit_params() const {
    AfdmParams p = waveform;
    if (kind == WaveformKind::ofdm) p.c1 = p.c2 = Rational(0);
    return p;
  }
};
/// Defaults for a profile. paper is the full-size setup (N = 2560); desk is a
/// reduced size for quick runs.
inline ExperimentConfig profile_defaults(Profile profile) {
  ExperimentConfig c;
  c.profile = profile;
  AfdmParams& w = c.waveform;
  w.mod_order = 4;
  w.guard_xi_v = 4;
  w.bandwidth_hz = 122.88e6;
  w.carrier_hz = 24e9;
  w.c2 = Rational(0);
  RmseSection& r = c.rmse;
  r.waveform = w;
  r.waveform.n_symbols = 1;
  if (profile == Profile::paper) {
    w.n_subcarriers = 2560;
    w.n_cpp = 288;
    w.n_symbols = 32;
    w.c1 = Rational(13, 5120);
    c.trials = 10;
    c.cfar = {1e-6, 16, 2, 16, 2};
    r.waveform.n_subcarriers = 2560;
    r.waveform.n_cpp = 288;
    r.waveform.c1 = Rational(13, 5120);
  } else {
    w.n_subcarriers = 512;
    w.n_cpp = 58;
    w.n_symbols = 16;
    w.c1 = Rational(13, 1024);
    c.trials = 4;
    c.cfar = {1e-6, 16, 2, 8, 2};
    r.waveform.n_subcarriers = 256;
    r.waveform.n_cpp = 32;
    r.waveform.c1 = Rational(13, 512);
  }
  c.rmse.waveform.guard_xi_v = w.guard_xi_v;
  c.targets = {PathSpec{Complex{1.0, 0.0}, 20, 1.6, Swerling::zero}};
  return c;
}

namespace detail {

/// Walks one YAML map, rejecting unknown keys and reporting the line of any
/// malformed field.
class MapReader {
public:
  MapReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.IsMap() && node_[key] && !node_[key].IsNull();
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_.IsMap() ? node_[key] : YAML::Node();
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(node_[key], key);
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    out = convert<T>(node_[key], key);
  }

  template <class T>
  void read_list(const std::string& key, std::vector<T>& out) {
    if (!has(key)) return;
    const auto n = node_[key];
    if (!n.IsSequence()) fail(n, "field '" + qualified(key) + "': expected a list");
    out.clear();
    for (const auto& item : n) out.push_back(convert<T>(item, key));
  }

  Rational read_rational(const std::string& key, const Rational& fallback) {
    if (!has(key)) return fallback;
    const auto n = node_[key];
    try {
      return Rational::parse(n.as<std::string>());
    } catch (const std::exception& e) {
      fail(n, "field '" + qualified(key) + "': " + e.what());
    }
  }

  /// Call after all reads; rejects keys nobody asked for.
  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) fail(kv.first, "unknown field '" + qualified(key) + "'");
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const YAML::Node& n, const std::string& message) {
    const auto mark = n.Mark();
    if (mark.line >= 0) throw ConfigError("line " + std::to_string(mark.line + 1) + ": " + message);
    throw ConfigError(message);
  }

private:
  template <class T>
  T convert(const YAML::Node& n, const std::string& key) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "field '" + qualified(key) + "': cannot read value '" + (n.IsScalar() ? n.Scalar() : "<node>") + "'");
    }
  }

  const YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_waveform(MapReader& r, AfdmParams& w) {
  r.read("n_subcarriers", w.n_subcarriers);
  r.read("n_cpp", w.n_cpp);
  r.read("n_symbols", w.n_symbols);
  w.c1 = r.read_rational("c1", w.c1);
  w.c2 = r.read_rational("c2", w.c2);
  r.read("mod_order", w.mod_order);
  r.read("n_pilot_guard", w.n_pilot_guard);
  r.read("guard_xi_v", w.guard_xi_v);
  r.read("bandwidth_hz", w.bandwidth_hz);
  r.read("carrier_hz", w.carrier_hz);
}

} // namespace detail

/// Profile precedence: explicit argument, then the file's `profile` key,
/// then the ISACLAB_PROFILE environment variable, then paper.
inline ExperimentConfig load_config(const YAML::Node& root, std::optional<Profile> override_profile = {}) {
  using detail::MapReader;
  if (root.IsDefined() && !root.IsNull() && !root.IsMap()) MapReader::fail(root, "top level must be a mapping");
  MapReader top(root, "");

  Profile profile = Profile::paper;
  if (const char* env = std::getenv("ISACLAB_PROFILE"); env && *env) profile = parse_profile(env);
  if (top.has("profile")) {
    try {
      profile = parse_profile(root["profile"].as<std::string>());
    } catch (const ConfigError& e) {
      MapReader::fail(root["profile"], e.what());
    }
  }
  if (override_profile) profile = *override_profile;
  ExperimentConfig c = profile_defaults(profile);

  if (top.has("waveform")) {
    MapReader w(top.child("waveform"), "waveform");
    detail::read_waveform(w, c.waveform);
    if (w.has("kind")) {
      const auto kind = root["waveform"]["kind"].as<std::string>();
      if (kind == "afdm") c.kind = WaveformKind::afdm;
      else if (kind == "ofdm") c.kind = WaveformKind::ofdm;
      else MapReader::fail(root["waveform"]["kind"], "field 'waveform.kind': expected afdm or ofdm");
    }
    w.finish();
  }

  if (top.has("scenario")) {
    auto node = top.child("scenario");
    MapReader s(node, "scenario");
    s.read("snr_db", c.snr_db);
    s.read("noise_variance", c.noise_variance);
    if (s.has("fluctuation")) {
      const auto f = node["fluctuation"].as<std::string>();
      if (f == "per_frame") c.fluctuation = Fluctuation::per_frame;
      else if (f == "per_sample") c.fluctuation = Fluctuation::per_sample;
      else MapReader::fail(node["fluctuation"], "field 'scenario.fluctuation': expected per_frame or per_sample");
    }
    if (s.has("targets")) {
      const auto list = node["targets"];
      if (!list.IsSequence()) MapReader::fail(list, "field 'scenario.targets': expected a list");
      c.targets.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        MapReader t(list[i], "scenario.targets[" + std::to_string(i) + "]");
        PathSpec p;
        double gain = 1.0, phase = 0.0;
        int swerling = 0;
        t.read("gain", gain);
        t.read("phase_rad", phase);
        t.read("delay_samples", p.delay_samples);
        t.read("doppler", p.normalized_doppler);
        t.read("swerling", swerling);
        if (swerling != 0 && swerling != 3)
          MapReader::fail(list[i]["swerling"], "field '" + t.qualified("swerling") + "': expected 0 or 3");
        if (!(gain > 0.0)) MapReader::fail(list[i], "field '" + t.qualified("gain") + "': must be positive");
        p.swerling = swerling == 3 ? Swerling::three : Swerling::zero;
        p.gain = std::polar(gain, phase);
        t.finish();
        c.targets.push_back(p);
      }
    }
    s.finish();
  }

  if (top.has("sensing")) {
    MapReader s(top.child("sensing"), "sensing");
    s.read("p_fa", c.cfar.p_fa);
    s.read("training_p", c.cfar.training_p);
    s.read("guard_p", c.cfar.guard_p);
    s.read("training_k", c.cfar.training_k);
    s.read("guard_k", c.cfar.guard_k);
    s.finish();
  }

  if (top.has("sweep")) {
    auto node = top.child("sweep");
    MapReader s(node, "sweep");
    s.read("variable", c.sweep.variable);
    if (!SweepSpec::vocabulary().count(c.sweep.variable))
      MapReader::fail(node["variable"], "field 'sweep.variable': '" + c.sweep.variable +
                                            "' is not one of doppler, snr_db, delay");
    s.read("start", c.sweep.start);
    s.read("stop", c.sweep.stop);
    s.read("step", c.sweep.step);
    if (!(c.sweep.step > 0.0) || c.sweep.stop < c.sweep.start)
      MapReader::fail(node, "field 'sweep': need step > 0 and stop >= start");
    s.finish();
  }

  top.read("trials", c.trials);
  if (top.has("seed")) top.read("seed", c.seed);

  if (top.has("metrics")) {
    MapReader m(top.child("metrics"), "metrics");
    auto& s = c.metrics;
    m.read("gamma", s.gamma);
    m.read("p_fa", s.p_fa);
    m.read("p_d_threshold", s.p_d_threshold);
    m.read("k_tau", s.k_tau);
    m.read("k_fd", s.k_fd);
    m.read("d_bar_tau", s.d_bar_tau);
    m.read("d_bar_fd", s.d_bar_fd);
    m.read("sinr_db", s.sinr_db);
    m.read_list("cell_sinr_db", s.cell_sinr_db);
    m.read("b_rms", s.b_rms);
    m.read("t_rms", s.t_rms);
    m.read("k_eta", s.k_eta);
    m.read("k_p", s.k_p);
    m.read("p_e_com", s.p_e_com);
    m.finish();
  }

  if (top.has("tradeoff")) {
    MapReader t(top.child("tradeoff"), "tradeoff");
    auto& s = c.tradeoff;
    t.read("n_subcarriers", s.n_subcarriers);
    t.read("n_cpp", s.n_cpp);
    t.read("n_symbols", s.n_symbols);
    t.read("c1_offset", s.c1_offset);
    t.read("mod_order", s.mod_order);
    t.read_list("sinr_db", s.sinr_db);
    t.read_list("k", s.k);
    t.read_list("k3", s.k3);
    t.read("r_max_start", s.r_max_start);
    t.read("r_max_stop", s.r_max_stop);
    t.read("r_max_step", s.r_max_step);
    t.read_list("fig4b_n", s.fig4b_n);
    t.read_list("k4", s.k4);
    t.finish();
  }

  if (top.has("rmse")) {
    auto node = top.child("rmse");
    MapReader r(node, "rmse");
    auto& s = c.rmse;
    if (r.has("waveform")) {
      MapReader w(r.child("waveform"), "rmse.waveform");
      detail::read_waveform(w, s.waveform);
      w.finish();
    }
    r.read_list("snr_db", s.snr_db);
    r.read("trials", s.trials);
    r.read("delay_samples", s.delay_samples);
    r.read("doppler", s.doppler);
    r.read("doppler_step", s.doppler_step);
    r.finish();
  }

  if (top.has("design")) {
    MapReader d(top.child("design"), "design");
    auto& s = c.design;
    d.read("tau_req", s.tau_req);
    d.read("fd_req", s.fd_req);
    d.read("range_m", s.range_m);
    d.read("velocity_mps", s.velocity_mps);
    d.finish();
  }
  top.finish();

  try {
    c.waveform.validate();
    c.rmse.waveform.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("waveform: ") + e.what());
  }
  if (c.trials == 0) throw ConfigError("field 'trials': must be positive");
  if (c.noise_variance && *c.noise_variance < 0.0) throw ConfigError("field 'scenario.noise_variance': negative");
  if (!(c.cfar.p_fa > 0.0 && c.cfar.p_fa < 1.0)) throw ConfigError("field 'sensing.p_fa': must lie in (0, 1)");
  if (c.cfar.training_p % 2 || c.cfar.guard_p % 2 || c.cfar.training_k % 2 || c.cfar.guard_k % 2)
    throw ConfigError("field 'sensing': training and guard counts are totals over both sides and must be even");
  for (const auto& t : c.targets)
    if (t.delay_samples > c.waveform.n_cpp)
      throw ConfigError("field 'scenario.targets': delay " + std::to_string(t.delay_samples) +
                        " exceeds the prefix length " + std::to_string(c.waveform.n_cpp));
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path, std::optional<Profile> override_profile = {}) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot open config file '" + path + "'");
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return load_config(root, override_profile);
}

inline ExperimentConfig load_config_string(const std::string& text, std::optional<Profile> override_profile = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return load_config(root, override_profile);
}

/// Metric inputs for the configured waveform: frame time from the waveform,
/// tolerable delay and Doppler from the closed forms.
inline MetricConfig metric_config(const ExperimentConfig& c) {
  const auto& w = c.waveform;
  const auto& s = c.metrics;
  MetricConfig m;
  m.gamma = s.gamma;
  m.p_fa = s.p_fa;
  m.p_d = s.p_d_threshold;
  m.bandwidth = w.bandwidth_hz;
  m.frame_time = w.frame_duration();
  const bool ofdm = c.kind == WaveformKind::ofdm;
  m.tau_max = ofdm ? ofdm_max_delay(w.n_cpp, w.bandwidth_hz)
                   : max_tolerable_delay(w.c1.value(), w.n_cpp, w.bandwidth_hz);
  m.fd_max = ofdm ? ofdm_max_doppler(w.n_subcarriers, w.n_cpp, w.bandwidth_hz)
                  : max_tolerable_doppler(w.c1.value(), w.n_subcarriers, w.guard_xi_v, w.bandwidth_hz);
  m.sinr = std::pow(10.0, s.sinr_db / 10.0);
  for (double db : s.cell_sinr_db) m.cell_sinr.push_back(std::pow(10.0, db / 10.0));
  m.b_rms = s.b_rms;
  m.t_rms = s.t_rms;
  m.set_sub_cells_from_sigma(s.k_tau, s.k_fd);
  if (s.d_bar_tau) m.d_bar_tau = *s.d_bar_tau;
  if (s.d_bar_fd) m.d_bar_fd = *s.d_bar_fd;
  return m;
}

/// Requirement from the design section; range and velocity convert with the
/// waveform's carrier.
inline DesignRequirement design_requirement(const ExperimentConfig& c) {
  DesignRequirement r;
  r.bandwidth = c.waveform.bandwidth_hz;
  r.guard_xi_v = c.waveform.guard_xi_v;
  const auto& d = c.design;
  if (d.tau_req) r.tau_req = *d.tau_req;
  else if (d.range_m) r.tau_req = delay_from_range(*d.range_m);
  else throw ConfigError("field 'design': need tau_req or range_m");
  if (d.fd_req) r.fd_req = *d.fd_req;
  else if (d.velocity_mps) r.fd_req = doppler_from_velocity(*d.velocity_mps, c.waveform.carrier_hz);
  else throw ConfigError("field 'design': need fd_req or velocity_mps");
  if (!(r.tau_req > 0.0) || !(r.fd_req > 0.0)) throw ConfigError("field 'design': requirements must be positive");
  return r;
}

} // namespace isaclab
