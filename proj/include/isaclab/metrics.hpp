#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "aft.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace isaclab {

/// Gaussian tail probability Q(x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
inline double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
  auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
  return term(p) + term(1.0 - p);
}

/// Information gained by the presence decision alone.
inline double detection_info(double gamma, double p_fa, double p_d) {
  return binary_entropy((1.0 - gamma) * p_fa + gamma * p_d) - (1.0 - gamma) * binary_entropy(p_fa) -
         gamma * binary_entropy(1.0 - p_d);
}

/// Information gained by locating the target to a sub-cell of width d_bar
/// inside a resolution cell of width delta.
inline double estimation_info(double gamma, double p_d, double delta, double d_bar) {
  if (!(d_bar > 0.0) || d_bar > delta * (1.0 + 1e-12))
    throw std::invalid_argument("sub-cell width must be positive and not exceed the resolution cell");
  return gamma * p_d * std::log2(delta / d_bar);
}

/// Communication spectral efficiency with one reserved index per symbol.
inline double cse(std::size_t n, std::size_t n_cpp, unsigned mod_order) {
  if (n == 0) throw std::invalid_argument("N must be positive");
  return (static_cast<double>(n) - 1.0) * std::log2(static_cast<double>(mod_order)) /
         static_cast<double>(n + n_cpp);
}

inline double cse(const AfdmParams& params) { return cse(params.n_subcarriers, params.n_cpp, params.mod_order); }

struct CrbSigma {
  double tau = 0.0;  ///< s
  double fd = 0.0;   ///< Hz
};

/// sigma_tau = 1 / (B_rms sqrt(sinr)), sigma_fd = 1 / (T_rms sqrt(sinr)).
inline CrbSigma crb_sigma(double b_rms, double t_rms, double sinr) {
  if (!(b_rms > 0.0) || !(t_rms > 0.0) || !(sinr > 0.0))
    throw std::invalid_argument("CRB needs positive RMS bandwidth, RMS duration and SINR");
  return {1.0 / (b_rms * std::sqrt(sinr)), 1.0 / (t_rms * std::sqrt(sinr))};
}

/// RMS bandwidth of a flat spectrum of width B, in the 1/(B_rms sqrt(SINR)) convention.
inline double flat_rms_bandwidth(double bandwidth) { return pi * bandwidth / std::sqrt(3.0); }

/// RMS duration of a uniform observation of length T.
inline double flat_rms_duration(double duration) { return pi * duration / std::sqrt(3.0); }

/// Sensing scenario constants for the metric set.
struct MetricConfig {
  double gamma = 0.5;           ///< prior probability of target presence
  double p_fa = 1e-6;
  double p_d = 0.999;           ///< detection threshold P_D^Th, applied to every cell
  double d_bar_tau = 0.0;       ///< s
  double d_bar_fd = 0.0;        ///< Hz
  double bandwidth = 122.88e6;  ///< Hz
  double frame_time = 0.0;      ///< T_A, s
  double tau_max = 0.0;         ///< s
  double fd_max = 0.0;          ///< Hz
  double sinr = 316.2277660168379;  ///< uniform per-cell SINR (linear)
  std::vector<double> cell_sinr;    ///< optional per-cell SINR table; overrides `sinr`
  std::optional<double> b_rms;      ///< defaults to pi B / sqrt 3
  std::optional<double> t_rms;      ///< defaults to pi T_A / sqrt 3

  double delta_tau() const { return 1.0 / bandwidth; }
  double delta_fd() const { return 1.0 / frame_time; }
  double rms_bandwidth() const { return b_rms.value_or(flat_rms_bandwidth(bandwidth)); }
  double rms_duration() const { return t_rms.value_or(flat_rms_duration(frame_time)); }

  std::vector<double> sinr_cells() const { return cell_sinr.empty() ? std::vector<double>{sinr} : cell_sinr; }

  CrbSigma sigma(double cell_sinr_value) const { return crb_sigma(rms_bandwidth(), rms_duration(), cell_sinr_value); }

  /// Sets the sub-cell widths to k times the CRB sigma at the uniform SINR.
  void set_sub_cells_from_sigma(double k_tau, double k_fd) {
    const auto s = sigma(sinr);
    d_bar_tau = k_tau * s.tau;
    d_bar_fd = k_fd * s.fd;
  }

  void validate() const {
    auto prob = [](double v, const char* name, bool open_low, bool open_high) {
      if (!(v >= 0.0 && v <= 1.0) || (open_low && v == 0.0) || (open_high && v == 1.0))
        throw ConfigError(std::string(name) + " is not a valid probability");
    };
    prob(gamma, "gamma", false, false);
    prob(p_fa, "p_fa", true, true);
    prob(p_d, "p_d_threshold", true, false);
    if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
    if (!(frame_time > 0.0)) throw ConfigError("frame_time must be positive");
    if (!(d_bar_tau > 0.0) || d_bar_tau > delta_tau() * (1.0 + 1e-12))
      throw ConfigError("d_bar_tau must lie in (0, 1/B]");
    if (!(d_bar_fd > 0.0) || d_bar_fd > delta_fd() * (1.0 + 1e-12))
      throw ConfigError("d_bar_fd must lie in (0, 1/T_A]");
    for (double s : sinr_cells())
      if (!(s > 0.0)) throw ConfigError("SINR values must be positive");
  }

  /// Probability of a detection-stage outage (false alarm or miss).
  double p_detection_outage() const { return (1.0 - gamma) * p_fa + gamma * (1.0 - p_d); }
};

/// Per-frame information bracket: detection information plus the uniform-P_D
/// estimation information of both axes.
inline double sse_bracket(const MetricConfig& c) {
  return detection_info(c.gamma, c.p_fa, c.p_d) +
         c.gamma * c.p_d * std::log2(c.delta_tau() * c.delta_fd() / (c.d_bar_tau * c.d_bar_fd));
}

/// Sensing spectral efficiency: cells per frame times the bracket over B T_A.
/// Zero when the tolerable delay or Doppler vanishes.
inline double sse(const MetricConfig& c) {
  c.validate();
  if (c.tau_max <= 0.0 || c.fd_max <= 0.0) return 0.0;
  const double cells = (c.tau_max / c.delta_tau()) * (2.0 * c.fd_max / c.delta_fd());
  return cells * sse_bracket(c) / (c.bandwidth * c.frame_time);
}

namespace detail {

/// Probability that the rounded estimate lands within one sub-cell of the
/// truth, for a true position u in [0, 1) sub-cells past a grid point and
/// noise s sub-cells: 1 - Q((1.5 - u)/s) - Q((u + 0.5)/s).
inline double correct_subcell(double u, double s) {
  return 1.0 - q_function((1.5 - u) / s) - q_function((u + 0.5) / s);
}

/// Average of correct_subcell over a true position uniform on the cell
/// [-K/2, K/2) sub-cells, split at grid points and integrated adaptively.
inline double mean_correct_subcell(double cells, double s) {
  if (s <= 0.0) return 1.0;
  using boost::math::quadrature::gauss_kronrod;
  auto integrate = [&](double a, double b) {
    if (b <= a) return 0.0;
    double error = 0.0;
    const double value =
        gauss_kronrod<double, 31>::integrate([&](double u) { return correct_subcell(u, s); }, a, b, 15, 1e-9, &error);
    if (error > 1e-6 * std::max(std::abs(value), 1e-12))
      throw NumericError("sub-cell probability quadrature did not converge (error " + std::to_string(error) +
                         ", s = " + std::to_string(s) + ")");
    return value;
  };
  const double lo = -cells / 2.0, hi = cells / 2.0;
  double total = 0.0;
  const double first = std::floor(lo), last = std::floor(hi);
  if (first == last) return integrate(lo - first, hi - first) / cells;
  total += integrate(lo - first, 1.0);
  const double full_periods = last - first - 1.0;
  if (full_periods > 0.0) total += full_periods * integrate(0.0, 1.0);
  total += integrate(0.0, hi - last);
  return total / cells;
}

} // namespace detail

/// Exact sensing outage probability averaged over cells.
inline double sop_exact(const MetricConfig& c) {
  c.validate();
  const auto cells = c.sinr_cells();
  const double k_tau = c.delta_tau() / c.d_bar_tau;
  const double k_fd = c.delta_fd() / c.d_bar_fd;
  double acc = 0.0;
  for (double s : cells) {
    const auto sig = c.sigma(s);
    const double p_tau = detail::mean_correct_subcell(k_tau, sig.tau / c.d_bar_tau);
    const double p_fd = detail::mean_correct_subcell(k_fd, sig.fd / c.d_bar_fd);
    acc += c.p_detection_outage() + c.gamma * c.p_d * (1.0 - p_tau * p_fd);
  }
  return acc / static_cast<double>(cells.size());
}

struct SopBounds {
  double min = 0.0;
  double max = 0.0;
};

/// Lower bound with Q arguments D/sigma, upper bound with D/(2 sigma).
inline SopBounds sop_bounds(const MetricConfig& c) {
  c.validate();
  auto outage = [&](double x_tau, double x_fd) {
    const double qt = q_function(x_tau), qf = q_function(x_fd);
    return c.p_detection_outage() + c.gamma * c.p_d * (2.0 * qt + 2.0 * qf - 4.0 * qt * qf);
  };
  SopBounds b;
  const auto cells = c.sinr_cells();
  for (double s : cells) {
    const auto sig = c.sigma(s);
    b.min += outage(c.d_bar_tau / sig.tau, c.d_bar_fd / sig.fd);
    b.max += outage(c.d_bar_tau / (2.0 * sig.tau), c.d_bar_fd / (2.0 * sig.fd));
  }
  b.min /= static_cast<double>(cells.size());
  b.max /= static_cast<double>(cells.size());
  return b;
}

/// Where Monte-Carlo trials put the true delay and Doppler inside the cell.
enum class Placement {
  uniform,     ///< uniform over the resolution cell
  grid_point,  ///< on an estimator grid point (largest outage)
  midpoint,    ///< half-way between grid points (smallest outage)
};

struct MonteCarloResult {
  double estimate = 0.0;
  double ci95 = 0.0;  ///< half-width of the 95% normal-approximation interval
  std::uint64_t trials = 0;
};

namespace detail {

inline constexpr std::uint64_t mc_block = 1u << 14;

/// Outage indicator for one axis: true position x (sub-cells from the cell
/// centre), rounded estimate from x + noise.
inline bool axis_outage(double x, double noise) { return std::abs(x - std::round(x + noise)) >= 1.0; }

template <class Rng>
double draw_position(Placement where, double cells, Rng& rng) {
  std::uniform_real_distribution<double> u(-cells / 2.0, cells / 2.0);
  double x = u(rng);
  switch (where) {
    case Placement::uniform: return x;
    case Placement::grid_point: return std::round(x);
    case Placement::midpoint: return std::floor(x) + 0.5;
  }
  return x;
}

} // namespace detail

/// Simulates presence, detection, Gaussian observation noise at the CRB sigma
/// and the nearest-grid-point estimator; counts outages.
inline MonteCarloResult monte_carlo_sop(const MetricConfig& c, std::uint64_t n_trials, std::uint64_t seed,
                                        Placement where = Placement::uniform, unsigned workers = 1) {
  c.validate();
  if (n_trials == 0) throw std::invalid_argument("Monte-Carlo needs trials");
  const auto cells = c.sinr_cells();
  const double k_tau = c.delta_tau() / c.d_bar_tau;
  const double k_fd = c.delta_fd() / c.d_bar_fd;
  const std::uint64_t blocks = (n_trials + detail::mc_block - 1) / detail::mc_block;
  std::vector<std::uint64_t> outages(blocks, 0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    auto rng = make_rng(seed, b, "sop");
    std::bernoulli_distribution present(c.gamma), false_alarm(c.p_fa), detect(c.p_d);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<std::size_t> cell(0, cells.size() - 1);
    const std::uint64_t begin = b * detail::mc_block;
    const std::uint64_t end = std::min(n_trials, begin + detail::mc_block);
    std::uint64_t count = 0;
    for (std::uint64_t t = begin; t < end; ++t) {
      const auto sig = c.sigma(cells[cell(rng)]);
      const double x_tau = detail::draw_position(where, k_tau, rng);
      const double x_fd = detail::draw_position(where, k_fd, rng);
      const double n_tau = gauss(rng) * sig.tau / c.d_bar_tau;
      const double n_fd = gauss(rng) * sig.fd / c.d_bar_fd;
      if (!present(rng)) {
        count += false_alarm(rng);
        continue;
      }
      if (!detect(rng)) {
        ++count;
        continue;
      }
      count += detail::axis_outage(x_tau, n_tau) || detail::axis_outage(x_fd, n_fd);
    }
    outages[b] = count;
  });
  std::uint64_t total = 0;
  for (auto v : outages) total += v;
  MonteCarloResult r;
  r.trials = n_trials;
  r.estimate = static_cast<double>(total) / static_cast<double>(n_trials);
  r.ci95 = 1.96 * std::sqrt(std::max(r.estimate * (1.0 - r.estimate), 1.0 / static_cast<double>(n_trials)) /
                            static_cast<double>(n_trials));
  return r;
}

/// Plug-in estimate of I(tau; tau_hat | U, U_hat) in bits, with tau and
/// tau_hat reduced to their sub-cell indices. The cell holds K = delta/d_bar
/// sub-cells (K must be an integer) that tile it; the estimate is the nearest
/// sub-cell centre to the noisy observation, clamped to the cell.
inline double monte_carlo_lemma1(const MetricConfig& c, std::uint64_t n_trials, std::uint64_t seed) {
  c.validate();
  const double ratio = c.delta_tau() / c.d_bar_tau;
  const auto k = static_cast<std::int64_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(k)) > 1e-9 || k < 1)
    throw std::invalid_argument("delta / d_bar must be an integer for the sub-cell alphabet");
  const double s = c.sigma(c.sinr).tau / c.d_bar_tau;

  auto rng = make_rng(seed, 0, "lemma1");
  std::bernoulli_distribution present(c.gamma), false_alarm(c.p_fa), detect(c.p_d);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> pos(0.0, static_cast<double>(k));
  // branch (u, u_hat) -> joint counts over (index, estimate); -1 encodes "no value"
  std::map<std::pair<int, int>, std::map<std::pair<std::int64_t, std::int64_t>, double>> joint;
  for (std::uint64_t t = 0; t < n_trials; ++t) {
    const bool u = present(rng);
    const bool u_hat = u ? detect(rng) : false_alarm(rng);
    std::int64_t idx = -1, est = -1;
    const double x = pos(rng);
    if (u) idx = static_cast<std::int64_t>(std::floor(x));
    if (u_hat) {
      const double obs = (u ? x : pos(rng)) + s * gauss(rng);
      est = std::clamp(static_cast<std::int64_t>(std::floor(obs)), std::int64_t{0}, k - 1);
    }
    joint[{u, u_hat}][{idx, est}] += 1.0;
  }
  double info = 0.0;
  for (const auto& [branch, table] : joint) {
    double total = 0.0;
    std::map<std::int64_t, double> pa, pb;
    for (const auto& [key, v] : table) {
      total += v;
      pa[key.first] += v;
      pb[key.second] += v;
    }
    double mi = 0.0;
    for (const auto& [key, v] : table) mi += v / total * std::log2(v * total / (pa[key.first] * pb[key.second]));
    info += total / static_cast<double>(n_trials) * mi;
  }
  return info;
}

inline double weighted_efficiency(double eta_com, double eta_sen, double k_eta) {
  if (!(k_eta >= 0.0 && k_eta <= 1.0)) throw std::invalid_argument("efficiency weight outside [0, 1]");
  return k_eta * eta_com + (1.0 - k_eta) * eta_sen;
}

inline double weighted_reliability(double p_e_com, double p_e_sen, double k_p) {
  if (!(k_p >= 0.0 && k_p <= 1.0)) throw std::invalid_argument("reliability weight outside [0, 1]");
  return k_p * p_e_com + (1.0 - k_p) * p_e_sen;
}

struct MetricReport {
  double cse = 0.0;
  double sse = 0.0;
  double sop_exact = 0.0;
  double sop_min = 0.0;
  double sop_max = 0.0;
  double eta_sc = 0.0;
  double p_e_sc = 0.0;
};

/// Full metric set. The weighted reliability uses the exact SOP.
inline MetricReport evaluate_metrics(const AfdmParams& params, const MetricConfig& c, double k_eta, double k_p,
                                     double p_e_com) {
  MetricReport r;
  r.cse = cse(params);
  r.sse = sse(c);
  r.sop_exact = sop_exact(c);
  const auto b = sop_bounds(c);
  r.sop_min = b.min;
  r.sop_max = b.max;
  r.eta_sc = weighted_efficiency(r.cse, r.sse, k_eta);
  r.p_e_sc = weighted_reliability(p_e_com, r.sop_exact, k_p);
  return r;
}

} // namespace isaclab
