#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "channel.hpp"
#include "design.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sensing.hpp"
#include "waveform.hpp"

namespace isaclab {

/// Locale-independent CSV cell, 12 significant digits.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Random data grid for one frame, following the pilot policy in `params`.
template <class Rng>
ComplexMatrix random_symbols(const AfdmParams& params, Rng& rng) {
  return map_bits(random_bits(params.bits_per_frame(), rng), params).symbols;
}

/// Received N x N_sym grid after the channel: AFT domain for AFDM, frequency
/// domain when c1 = c2 = 0.
inline ComplexMatrix receive(const ComplexMatrix& symbols, std::span<const PathSpec> paths, const AfdmParams& params,
                             const NoiseSpec& noise, Fluctuation fluctuation = Fluctuation::per_frame) {
  return parse_frame(apply_channel(build_frame(symbols, params), paths, params, noise, fluctuation), params);
}

struct TrialOutcome {
  double image_snr_db = 0.0;
  bool detected = false;
  double tau_error = 0.0;  ///< s
  double fd_error = 0.0;   ///< Hz
};

/// Settings of one image/sense trial.
struct ImageTrial {
  AfdmParams params;           ///< transmit parameters (c1 = c2 = 0 for OFDM)
  bool ofdm = false;
  std::vector<PathSpec> targets;
  double noise_variance = 0.0;
  Fluctuation fluctuation = Fluctuation::per_frame;
  CfarConfig cfar;
};

/// One frame through channel and receiver. The first target is the one scored.
inline TrialOutcome run_image_trial(const ImageTrial& t, std::uint64_t seed, std::uint64_t trial) {
  auto rng = make_rng(seed, trial, "symbols");
  const ComplexMatrix x = random_symbols(t.params, rng);
  const ComplexMatrix y = receive(x, t.targets, t.params, {t.noise_variance, seed, trial}, t.fluctuation);
  const PathSpec& truth = t.targets.front();
  const double true_tau = static_cast<double>(truth.delay_samples) / t.params.bandwidth_hz;
  const double true_fd = truth.normalized_doppler * t.params.subcarrier_spacing();

  TrialOutcome out;
  if (t.ofdm) {
    const ComplexMatrix image = ofdm_baseline_image(y, x);
    Eigen::Index r = 0, k = 0;
    image.cwiseAbs2().maxCoeff(&r, &k);
    out.image_snr_db = image_snr(image, std::make_pair(r, k));
    const double nsym = static_cast<double>(t.params.n_symbols);
    const double kk = static_cast<double>(k) >= nsym / 2.0 ? static_cast<double>(k) - nsym : static_cast<double>(k);
    const double fd = kk / nsym * t.params.symbol_rate();
    out.detected = static_cast<std::size_t>(r) == truth.delay_samples;
    out.tau_error = static_cast<double>(r) / t.params.bandwidth_hz - true_tau;
    out.fd_error = fd - true_fd;
    return out;
  }
  const auto stack = build_stack(y, x, t.params);
  const auto peak = global_peak(stack);
  out.image_snr_db = image_snr(stack.slices[peak.l], std::make_pair(static_cast<Eigen::Index>(peak.p),
                                                                     static_cast<Eigen::Index>(peak.k)));
  const auto estimates = estimate_targets(cfar_detect(stack, t.cfar), t.params);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : estimates) {
    if (e.l_hat != truth.delay_samples) continue;
    const double err = e.fd_hat - true_fd;
    if (std::abs(err) < std::abs(best)) best = err;
  }
  // a match is the right delay with Doppler inside half a subcarrier
  if (std::isfinite(best) && std::abs(best) <= 0.5 * t.params.subcarrier_spacing()) {
    out.detected = true;
    out.fd_error = best;
    out.tau_error = 0.0;
  }
  return out;
}

struct ImageSweepRow {
  double sweep_value = 0.0;
  double image_snr_db_mean = 0.0;
  double image_snr_db_std = 0.0;
  double detect_rate = 0.0;
  double tau_rmse = 0.0;
  double fd_rmse = 0.0;
};

/// Applies a sweep value to a copy of the trial settings.
inline ImageTrial apply_sweep(ImageTrial t, const std::string& variable, double value) {
  if (variable == "doppler") {
    for (auto& p : t.targets) p.normalized_doppler = value;
  } else if (variable == "snr_db") {
    t.noise_variance = std::pow(10.0, -value / 10.0);
  } else if (variable == "delay") {
    const double rounded = std::round(value);
    if (rounded < 0.0 || std::abs(rounded - value) > 1e-9)
      throw std::invalid_argument("delay sweep values must be non-negative integers");
    for (auto& p : t.targets) p.delay_samples = static_cast<std::size_t>(rounded);
  } else {
    throw std::invalid_argument("unknown sweep variable '" + variable + "'");
  }
  return t;
}

/// Runs `trials` frames per sweep point. Trial i of point j uses frame index
/// j * trials + i, so results do not depend on the worker count.
inline std::vector<ImageSweepRow> run_image_sweep(const ImageTrial& base, const std::string& variable,
                                                  const std::vector<double>& values, std::size_t trials,
                                                  std::uint64_t seed, unsigned workers = 1) {
  if (base.targets.empty()) throw std::invalid_argument("image sweep needs at least one target");
  if (trials == 0) throw std::invalid_argument("image sweep needs trials");
  std::vector<ImageTrial> points;
  for (double v : values) points.push_back(apply_sweep(base, variable, v));
  std::vector<TrialOutcome> outcomes(values.size() * trials);
  parallel_for(outcomes.size(), workers, [&](std::size_t i) {
    outcomes[i] = run_image_trial(points[i / trials], seed, i);
  });
  std::vector<ImageSweepRow> rows;
  for (std::size_t j = 0; j < values.size(); ++j) {
    ImageSweepRow row;
    row.sweep_value = values[j];
    double sum = 0.0, sum2 = 0.0, tau2 = 0.0, fd2 = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < trials; ++i) {
      const auto& o = outcomes[j * trials + i];
      sum += o.image_snr_db;
      sum2 += o.image_snr_db * o.image_snr_db;
      if (o.detected) {
        ++hits;
        tau2 += o.tau_error * o.tau_error;
        fd2 += o.fd_error * o.fd_error;
      }
    }
    const double n = static_cast<double>(trials);
    row.image_snr_db_mean = sum / n;
    row.image_snr_db_std = std::sqrt(std::max(0.0, sum2 / n - row.image_snr_db_mean * row.image_snr_db_mean));
    row.detect_rate = static_cast<double>(hits) / n;
    row.tau_rmse = hits ? std::sqrt(tau2 / static_cast<double>(hits)) : std::nan("");
    row.fd_rmse = hits ? std::sqrt(fd2 / static_cast<double>(hits)) : std::nan("");
    rows.push_back(row);
  }
  return rows;
}

inline void write_image_csv(std::ostream& os, const std::vector<ImageSweepRow>& rows) {
  os << "sweep_value,image_snr_db_mean,image_snr_db_std,detect_rate,tau_rmse,fd_rmse\n";
  for (const auto& r : rows)
    os << csv_number(r.sweep_value) << ',' << csv_number(r.image_snr_db_mean) << ','
       << csv_number(r.image_snr_db_std) << ',' << csv_number(r.detect_rate) << ',' << csv_number(r.tau_rmse) << ','
       << csv_number(r.fd_rmse) << '\n';
}

/// RMS duration 2 pi std(t) of the sample instants the estimator observes.
inline double observation_rms_duration(const AfdmParams& params) {
  const auto n = params.n_subcarriers, ns = params.block_length();
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < params.n_symbols; ++k)
    for (std::size_t t = 0; t < n; ++t) {
      const double time = static_cast<double>(t + k * ns) / params.bandwidth_hz;
      sum += time;
      sum2 += time * time;
    }
  const double count = static_cast<double>(n * params.n_symbols);
  const double var = sum2 / count - (sum / count) * (sum / count);
  return two_pi * std::sqrt(var);
}

/// CRB on the Doppler standard deviation (Hz) for a unit-power frame at
/// per-sample SNR `snr`: SINR = 2 E / N0 with E / N0 = N N_sym snr.
inline double doppler_crb(const AfdmParams& params, double snr) {
  const double sinr = 2.0 * static_cast<double>(params.n_subcarriers * params.n_symbols) * snr;
  return crb_sigma(1.0, observation_rms_duration(params), sinr).fd;
}

struct RmseRow {
  double snr_db = 0.0;
  double rmse_velocity = 0.0;  ///< m/s
  double crb_velocity = 0.0;   ///< m/s
  double rmse_fd = 0.0;        ///< Hz
  double crb_fd = 0.0;         ///< Hz
};

struct RmseSetup {
  AfdmParams params;
  std::vector<double> snr_db;
  std::size_t trials = 100;
  std::size_t delay_samples = 5;
  double doppler = 0.37;
  double doppler_step = 0.02;
};

/// Monte-Carlo velocity RMSE of the correlation estimator against the CRB.
inline std::vector<RmseRow> run_rmse(const RmseSetup& s, std::uint64_t seed, unsigned workers = 1) {
  if (s.trials == 0 || s.snr_db.empty()) throw std::invalid_argument("RMSE sweep needs SNR points and trials");
  const auto& p = s.params;
  const double nu_limit = p.n_subcarriers * p.c1.value() - p.guard_xi_v - 0.5;
  MlGrid grid;
  for (std::size_t l = 0; l <= p.n_cpp; ++l) grid.delays.push_back(l);
  const double span = std::max(std::abs(s.doppler) + 1.0, nu_limit);
  grid.doppler_min = -span;
  grid.doppler_max = span;
  grid.doppler_step = s.doppler_step;
  const std::vector<PathSpec> target{{Complex{1.0, 0.0}, s.delay_samples, s.doppler, Swerling::zero}};

  std::vector<double> sq_error(s.snr_db.size() * s.trials);
  parallel_for(sq_error.size(), workers, [&](std::size_t i) {
    const double snr = std::pow(10.0, s.snr_db[i / s.trials] / 10.0);
    auto rng = make_rng(seed, i, "symbols");
    const ComplexMatrix x = random_symbols(p, rng);
    const ComplexMatrix y = receive(x, target, p, {1.0 / snr, seed, i});
    const auto e = ml_estimate(y, x, p, grid);
    const double err = e.fd_hat - s.doppler * p.subcarrier_spacing();
    sq_error[i] = err * err;
  });
  std::vector<RmseRow> rows;
  for (std::size_t j = 0; j < s.snr_db.size(); ++j) {
    const double mse = std::accumulate(sq_error.begin() + static_cast<std::ptrdiff_t>(j * s.trials),
                                       sq_error.begin() + static_cast<std::ptrdiff_t>((j + 1) * s.trials), 0.0) /
                       static_cast<double>(s.trials);
    RmseRow row;
    row.snr_db = s.snr_db[j];
    row.rmse_fd = std::sqrt(mse);
    row.crb_fd = doppler_crb(p, std::pow(10.0, s.snr_db[j] / 10.0));
    row.rmse_velocity = velocity_from_doppler(row.rmse_fd, p.carrier_hz);
    row.crb_velocity = velocity_from_doppler(row.crb_fd, p.carrier_hz);
    rows.push_back(row);
  }
  return rows;
}

inline void write_rmse_csv(std::ostream& os, const std::vector<RmseRow>& rows) {
  os << "snr_db,rmse_velocity_mps,crb_velocity_mps,rmse_fd_hz,crb_fd_hz\n";
  for (const auto& r : rows)
    os << csv_number(r.snr_db) << ',' << csv_number(r.rmse_velocity) << ',' << csv_number(r.crb_velocity) << ','
       << csv_number(r.rmse_fd) << ',' << csv_number(r.crb_fd) << '\n';
}

/// One plot-ready series: (x, y, regime_flag).
struct Curve {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::vector<double> x, y;
  std::vector<int> flag;

  void add(double xv, double yv, int f) {
    x.push_back(xv);
    y.push_back(yv);
    flag.push_back(f);
  }
};

inline void write_curve_csv(std::ostream& os, const Curve& c) {
  os << "x,y,regime_flag\n";
  for (std::size_t i = 0; i < c.x.size(); ++i)
    os << csv_number(c.x[i]) << ',' << csv_number(c.y[i]) << ',' << c.flag[i] << '\n';
}

struct TradeoffInputs {
  MetricConfig metric;  ///< gamma, p_fa, p_d, bandwidth, b_rms/t_rms overrides
  double carrier_hz = 24e9;
  unsigned guard_xi_v = 4;
  unsigned mod_order = 16;
  // SSE against the SOP upper bound
  std::size_t n = 8192, n_cpp = 574, n_symbols = 28;
  double c1_offset = 3.0;
  std::vector<double> sinr_db{10, 15, 20, 25};
  std::vector<double> k{1, 2, 3, 4, 5, 6, 7, 8};
  double k_reference = 4.0;  ///< k used for the information term of the other curves
  double sinr_reference_db = 25.0;
  // SSE against CSE
  std::vector<double> k3{1, 2, 3, 4};
  std::vector<double> r_max;
  // unambiguous range against velocity
  std::vector<std::size_t> fig4b_n;
  std::vector<double> k4;
};

/// Information bracket I_sen for given sub-cell multiples and SINR.
inline double information_bits(MetricConfig m, double k, double sinr_db) {
  m.sinr = std::pow(10.0, sinr_db / 10.0);
  m.cell_sinr.clear();
  m.set_sub_cells_from_sigma(k, k);
  return sse_bracket(m);
}

/// All trade-off series. Flags: for SSE-SOP curves, the SINR in dB; for
/// SSE-CSE and range-velocity curves, 1 when c1 is above the delay breakpoint.
inline std::vector<Curve> tradeoff_curves(const TradeoffInputs& in) {
  std::vector<Curve> out;
  const double b = in.metric.bandwidth;
  const double nd = static_cast<double>(in.n);
  const double c1 = (2.0 * in.guard_xi_v + 1.0 + in.c1_offset) / (2.0 * nd);

  MetricConfig m = in.metric;
  m.frame_time = static_cast<double>(in.n_symbols * (in.n + in.n_cpp)) / b;
  for (double sinr_db : in.sinr_db) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%g", sinr_db);
    Curve afdm{std::string("sse_sop_afdm_sinr") + tag, "sse", "sop_max", {}, {}, {}};
    Curve ofdm{std::string("sse_sop_ofdm_sinr") + tag, "sse", "sop_max", {}, {}, {}};
    for (double k : in.k) {
      MetricConfig mk = m;
      mk.sinr = std::pow(10.0, sinr_db / 10.0);
      mk.cell_sinr.clear();
      mk.set_sub_cells_from_sigma(k, k);
      // sub-cells wider than the resolution cell carry no estimation information
      if (mk.d_bar_tau > mk.delta_tau() || mk.d_bar_fd > mk.delta_fd()) continue;
      const double info = information_bits(m, k, sinr_db);
      const double sop = sop_bounds(mk).max;
      afdm.add(sse_vs_params(c1, in.n, in.n_cpp, in.guard_xi_v, info, b), sop, static_cast<int>(sinr_db));
      ofdm.add(ofdm_sse(in.n, in.n_cpp, info, b), sop, static_cast<int>(sinr_db));
    }
    out.push_back(afdm);
    out.push_back(ofdm);
  }

  const double info = information_bits(m, in.k_reference, in.sinr_reference_db);
  std::vector<std::size_t> prefixes;
  for (double r : in.r_max)
    prefixes.push_back(static_cast<std::size_t>(std::ceil(2.0 * r * b / speed_of_light - 1e-9)));
  for (double k3 : in.k3) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%g", k3);
    Curve curve{std::string("sse_cse_afdm_k3_") + tag, "cse", "sse", {}, {}, {}};
    const double c1k = (2.0 * in.guard_xi_v + 1.0 + k3) / (2.0 * nd);
    for (const auto& p : cse_vs_sse_curve(c1k, in.n, in.guard_xi_v, in.mod_order, info, b, prefixes))
      curve.add(p.cse, p.sse, p.wrap_limited ? 1 : 0);
    out.push_back(curve);
  }
  {
    Curve curve{"sse_cse_ofdm", "cse", "sse", {}, {}, {}};
    for (const auto& p : ofdm_cse_vs_sse_curve(in.n, in.mod_order, info, b, prefixes)) curve.add(p.cse, p.sse, 0);
    out.push_back(curve);
  }

  for (double k4 : in.k4) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%.2f", k4);
    Curve curve{std::string("range_velocity_afdm_k4_") + tag, "range_m", "velocity_mps", {}, {}, {}};
    for (auto n : in.fig4b_n) {
      const std::size_t ncp = n * 288 / 4096;
      const double c1k = k4 / (2.0 * static_cast<double>(ncp) + 2.0);
      curve.add(range_from_delay(max_tolerable_delay(c1k, ncp, b)),
                velocity_from_doppler(max_tolerable_doppler(c1k, n, in.guard_xi_v, b), in.carrier_hz),
                c1k > delay_breakpoint(ncp) ? 1 : 0);
    }
    out.push_back(curve);
  }
  {
    Curve curve{"range_velocity_ofdm", "range_m", "velocity_mps", {}, {}, {}};
    for (auto n : in.fig4b_n) {
      const std::size_t ncp = n * 288 / 4096;
      curve.add(range_from_delay(ofdm_max_delay(ncp, b)),
                velocity_from_doppler(ofdm_max_doppler(n, ncp, b), in.carrier_hz), 0);
    }
    out.push_back(curve);
  }
  return out;
}

} // namespace isaclab
