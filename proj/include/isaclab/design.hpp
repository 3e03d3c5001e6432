#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "types.hpp"

namespace isaclab {

/// c1 at which the delay limit switches from the prefix length to the chirp wrap.
inline double delay_breakpoint(std::size_t n_cpp) { return 1.0 / (2.0 * (static_cast<double>(n_cpp) + 1.0)); }

/// Largest delay (s) that stays within both the prefix and one chirp period.
inline double max_tolerable_delay(double c1, std::size_t n_cpp, double bandwidth) {
  if (c1 < 0.0 || !(bandwidth > 0.0)) throw std::invalid_argument("c1 must be non-negative and B positive");
  if (c1 > delay_breakpoint(n_cpp)) return std::max(0.0, (1.0 / (2.0 * c1) - 1.0) / bandwidth);
  return static_cast<double>(n_cpp) / bandwidth;
}

/// Unclamped Doppler limit (Hz); negative when the guard eats the whole shift budget.
inline double raw_tolerable_doppler(double c1, std::size_t n, unsigned xi_v, double bandwidth) {
  if (c1 < 0.0 || n == 0 || !(bandwidth > 0.0)) throw std::invalid_argument("invalid Doppler-limit arguments");
  const double nd = static_cast<double>(n);
  return bandwidth / nd * (nd * c1 - static_cast<double>(xi_v) - 0.5);
}

/// Largest Doppler (Hz) whose shift plus guard fits inside 2 N c1; clamped at zero.
inline double max_tolerable_doppler(double c1, std::size_t n, unsigned xi_v, double bandwidth) {
  return std::max(0.0, raw_tolerable_doppler(c1, n, xi_v, bandwidth));
}

inline double ofdm_max_delay(std::size_t n_cpp, double bandwidth) { return static_cast<double>(n_cpp) / bandwidth; }

/// Half the inverse of the CP-extended OFDM symbol duration.
inline double ofdm_max_doppler(std::size_t n, std::size_t n_cpp, double bandwidth) {
  return bandwidth / (2.0 * static_cast<double>(n + n_cpp));
}

/// 2 tau_max f_d,max I_sen for AFDM.
inline double sse_vs_params(double c1, std::size_t n, std::size_t n_cpp, unsigned xi_v, double info_bits,
                            double bandwidth) {
  return 2.0 * max_tolerable_delay(c1, n_cpp, bandwidth) * max_tolerable_doppler(c1, n, xi_v, bandwidth) * info_bits;
}

inline double ofdm_sse(std::size_t n, std::size_t n_cpp, double info_bits, double bandwidth) {
  return 2.0 * ofdm_max_delay(n_cpp, bandwidth) * ofdm_max_doppler(n, n_cpp, bandwidth) * info_bits;
}

inline double cse_vs_params(std::size_t n, std::size_t n_cpp, unsigned mod_order) { return cse(n, n_cpp, mod_order); }

/// Doppler limit reachable for a given delay limit when c1 sits on the wrap constraint.
inline double tradeoff_delay_doppler(double tau_max, std::size_t n, unsigned xi_v, double bandwidth) {
  const double value = bandwidth / (2.0 * (bandwidth * tau_max + 1.0)) -
                       bandwidth * (2.0 * xi_v + 1.0) / (2.0 * static_cast<double>(n));
  return std::max(0.0, value);
}

/// AFDM over OFDM Doppler-limit ratio at equal prefix, CSE and delay limit.
inline double doppler_gain_factor(double eta_cp, unsigned xi_v) {
  if (!(eta_cp > 0.0 && eta_cp < 1.0)) throw std::invalid_argument("prefix efficiency must lie in (0, 1)");
  const double g = 2.0 * xi_v + 1.0;
  return ((g + 1.0) * eta_cp - g) / (eta_cp * (1.0 - eta_cp));
}

/// Prefix efficiency above which the gain factor exceeds one.
inline double doppler_gain_threshold(unsigned xi_v) {
  const double g = 2.0 * xi_v + 1.0;
  return 0.5 * (std::sqrt(g * (g + 4.0)) - g);
}

inline double prefix_efficiency(std::size_t n, std::size_t n_cpp) {
  return static_cast<double>(n) / static_cast<double>(n + n_cpp);
}

struct TradeoffPoint {
  std::size_t n_cpp = 0;
  double cse = 0.0;
  double sse = 0.0;
  bool wrap_limited = false;  ///< c1 above the delay breakpoint: delay set by the chirp wrap
};

/// (CSE, SSE) as the prefix grows at fixed c1.
inline std::vector<TradeoffPoint> cse_vs_sse_curve(double c1, std::size_t n, unsigned xi_v, unsigned mod_order,
                                                   double info_bits, double bandwidth,
                                                   const std::vector<std::size_t>& prefix_lengths) {
  std::vector<TradeoffPoint> out;
  out.reserve(prefix_lengths.size());
  for (auto ncp : prefix_lengths)
    out.push_back({ncp, cse_vs_params(n, ncp, mod_order), sse_vs_params(c1, n, ncp, xi_v, info_bits, bandwidth),
                   c1 > delay_breakpoint(ncp)});
  return out;
}

inline std::vector<TradeoffPoint> ofdm_cse_vs_sse_curve(std::size_t n, unsigned mod_order, double info_bits,
                                                        double bandwidth,
                                                        const std::vector<std::size_t>& prefix_lengths) {
  std::vector<TradeoffPoint> out;
  for (auto ncp : prefix_lengths)
    out.push_back({ncp, cse_vs_params(n, ncp, mod_order), ofdm_sse(n, ncp, info_bits, bandwidth), false});
  return out;
}

struct CurvePoint {
  double cse = 0.0;
  double sse = 0.0;
};

/// Where the SSE stops growing with the prefix: N_cp = 1/(2 c1) - 1.
inline CurvePoint turning_point(double c1, std::size_t n, unsigned xi_v, unsigned mod_order, double info_bits) {
  const double nd = static_cast<double>(n);
  const double bits = std::log2(static_cast<double>(mod_order));
  return {2.0 * (nd - 1.0) * c1 * bits / (2.0 * (nd - 1.0) * c1 + 1.0),
          (1.0 - 2.0 * c1) / c1 * (c1 - (2.0 * xi_v + 1.0) / (2.0 * nd)) * info_bits};
}

/// Monostatic conversions.
inline double range_from_delay(double tau) { return speed_of_light * tau / 2.0; }
inline double delay_from_range(double range) { return 2.0 * range / speed_of_light; }
inline double velocity_from_doppler(double fd, double carrier) { return speed_of_light * fd / (2.0 * carrier); }
inline double doppler_from_velocity(double v, double carrier) { return 2.0 * v * carrier / speed_of_light; }

struct DesignRequirement {
  double tau_req = 0.0;  ///< s
  double fd_req = 0.0;   ///< Hz
  double bandwidth = 122.88e6;
  unsigned guard_xi_v = 4;
};

struct DesignWitness {
  double c1 = 0.0;
  std::size_t n = 0;
  std::size_t n_cpp = 0;
};

struct FeasibleRegion {
  bool feasible = false;
  std::string violated;   ///< name of the failing constraint when infeasible
  double c1_hi = 0.0;     ///< 1 / (2 (B tau + 1))
  double n_min = 0.0;     ///< continuous lower bound on N
  std::size_t n_floor = 0;     ///< smallest admissible integer N
  std::size_t n_reference = 0; ///< power of two used for the reported c1 interval and witnesses
  double c1_lo_reference = 0.0;
  std::size_t ncp_lo = 0;
  std::size_t ncp_hi = 0;      ///< equals n_reference
  std::vector<DesignWitness> witnesses;
  double fd_req = 0.0;
  double bandwidth = 0.0;
  unsigned guard_xi_v = 0;

  /// Lower end of the c1 interval for a given N.
  double c1_lo(std::size_t n) const {
    return fd_req / bandwidth + (2.0 * guard_xi_v + 1.0) / (2.0 * static_cast<double>(n));
  }
};

/// Bounds on c1, N and N_cp that meet a delay and Doppler requirement.
/// Infeasible requirements come back with `violated` set, not as an exception.
inline FeasibleRegion select_parameters(const DesignRequirement& req) {
  if (!(req.tau_req > 0.0) || !(req.fd_req > 0.0) || !(req.bandwidth > 0.0))
    throw std::invalid_argument("requirements must be positive");
  FeasibleRegion r;
  r.fd_req = req.fd_req;
  r.bandwidth = req.bandwidth;
  r.guard_xi_v = req.guard_xi_v;
  const double b = req.bandwidth;
  const double btau = b * req.tau_req;
  r.c1_hi = 1.0 / (2.0 * (btau + 1.0));
  const double margin = b - 2.0 * req.fd_req * (btau + 1.0);
  if (!(margin > 0.0)) {
    r.violated = "c1 interval empty: fd_req >= B / (2 (B tau_req + 1))";
    return r;
  }
  r.n_min = (2.0 * req.guard_xi_v + 1.0) * (btau + 1.0) * b / margin;
  r.ncp_lo = static_cast<std::size_t>(std::ceil(btau - 1e-9));
  r.n_floor = std::max(static_cast<std::size_t>(std::ceil(r.n_min - 1e-9)), std::max<std::size_t>(r.ncp_lo, 1));
  while (r.c1_lo(r.n_floor) > r.c1_hi) ++r.n_floor;  // guards rounding at the boundary
  std::size_t n_ref = 1;
  while (n_ref < 2 * r.n_floor) n_ref *= 2;
  r.n_reference = n_ref;
  r.ncp_hi = n_ref;
  r.c1_lo_reference = r.c1_lo(n_ref);
  r.feasible = true;
  const double lo = r.c1_lo_reference, hi = r.c1_hi;
  r.witnesses = {{lo, n_ref, r.ncp_lo}, {0.5 * (lo + hi), n_ref, r.ncp_lo}, {hi, n_ref, std::min(n_ref, 2 * r.ncp_lo)}};
  return r;
}

/// Uniform samples of (c1, N, N_cp) inside a feasible region, with N in
/// [n_floor, 2 n_reference].
template <class Rng>
std::vector<DesignWitness> sample_region(const FeasibleRegion& r, std::size_t count, Rng& rng) {
  if (!r.feasible) throw std::invalid_argument("cannot sample an infeasible region");
  std::uniform_int_distribution<std::size_t> pick_n(r.n_floor, 2 * r.n_reference);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<DesignWitness> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = pick_n(rng);
    const double lo = r.c1_lo(n);
    const double c1 = lo + unit(rng) * (r.c1_hi - lo);
    std::uniform_int_distribution<std::size_t> pick_cp(r.ncp_lo, n);
    out.push_back({c1, n, pick_cp(rng)});
  }
  return out;
}

} // namespace isaclab
