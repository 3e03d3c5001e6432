#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "aft.hpp"
#include "fft.hpp"
#include "types.hpp"

namespace isaclab {

/// AFT-Doppler matrices Z_F^l for l = 0 .. N_cp - 1, each N x N_sym.
struct AftDopplerStack {
  std::vector<ComplexMatrix> slices;

  std::size_t delays() const { return slices.size(); }
  Eigen::Index rows() const { return slices.empty() ? 0 : slices.front().rows(); }
  Eigen::Index cols() const { return slices.empty() ? 0 : slices.front().cols(); }
};

/// A cell of the stack, addressed as (l, p, k).
struct StackCell {
  std::size_t l = 0;
  std::size_t p = 0;
  std::size_t k = 0;
  double magnitude = 0.0;
};

/// CFAR detection with the neighbouring magnitudes |Z_F[p-1,k]| and |Z_F[p+1,k]|.
struct Peak {
  std::size_t l = 0;
  std::size_t p = 0;
  std::size_t k = 0;
  double magnitude = 0.0;
  double early = 0.0;
  double late = 0.0;
};

/// Cell-averaging CFAR over the (p, k) plane. Training and guard counts are
/// totals per dimension, split evenly on both sides of the cell under test.
struct CfarConfig {
  double p_fa = 1e-6;
  std::size_t training_p = 16;
  std::size_t guard_p = 2;
  std::size_t training_k = 16;
  std::size_t guard_k = 2;
};

struct TargetEstimate {
  std::size_t l_hat = 0;
  double tau_hat = 0.0;      ///< s
  std::int64_t alpha_hat = 0;
  double a_hat = 0.0;
  double b_hat = 0.0;
  std::int64_t beta_hat = 0;
  double fd_hat = 0.0;       ///< Hz
  double peak_magnitude = 0.0;
  std::size_t l_bar = 0, p_bar = 0, k_bar = 0;

  /// Estimated normalized Doppler in units of the subcarrier spacing.
  double nu_hat() const { return static_cast<double>(alpha_hat) + a_hat; }
};

/// Row p multiplied by exp(j2pi p l / N) for any integer l.
inline ComplexMatrix apply_delay_ramp(const ComplexMatrix& y, std::int64_t l) {
  const auto n = y.rows();
  ComplexMatrix out(n, y.cols());
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto ph = unit_phasor(static_cast<double>(wrap(static_cast<std::int64_t>(p) * l, static_cast<std::int64_t>(n))) /
                                static_cast<double>(n));
    out.row(p) = y.row(p) * ph;
  }
  return out;
}

/// Delay compensation L^l Y for 0 <= l < N_cp.
inline ComplexMatrix compensate(const ComplexMatrix& y, std::size_t l, const AfdmParams& params) {
  if (l >= params.n_cpp)
    throw std::invalid_argument("compensation delay " + std::to_string(l) + " outside [0, N_cp)");
  return apply_delay_ramp(y, static_cast<std::int64_t>(l));
}

/// Column-wise circular cross-correlation F^H((F Y_c) .* conj(F X)),
/// i.e. Z[p] = N^-1/2 sum_m Y_c[m + p] conj(X[m]).
inline ComplexMatrix aft_matched_filter(const ComplexMatrix& yc, const ComplexMatrix& x) {
  if (yc.rows() != x.rows() || yc.cols() != x.cols())
    throw DimensionError("matched filter operands differ in size");
  ComplexMatrix fy = yc;
  ComplexMatrix fx = x;
  fft_columns(fy, FftDirection::forward);
  fft_columns(fx, FftDirection::forward);
  ComplexMatrix z = fy.cwiseProduct(fx.conjugate());
  fft_columns(z, FftDirection::inverse);
  return z;
}

/// Unitary N_sym-point DFT along each row.
inline ComplexMatrix doppler_dft(const ComplexMatrix& z) {
  ComplexMatrix out = z;
  fft_rows(out, FftDirection::forward);
  return out;
}

/// Algorithm steps 1-2 for every l in [0, N_cp). The compensation L^l is a
/// circular shift by l in the DFT domain of each column, so F Y is computed once.
inline AftDopplerStack build_stack(const ComplexMatrix& y, const ComplexMatrix& x, const AfdmParams& params) {
  const auto n = static_cast<Eigen::Index>(params.n_subcarriers);
  if (y.rows() != n || x.rows() != n || y.cols() != x.cols() ||
      static_cast<std::size_t>(y.cols()) != params.n_symbols)
    throw DimensionError("received and transmitted grids must both be N x N_sym");
  ComplexMatrix fy = y;
  ComplexMatrix fx_conj = x;
  fft_columns(fy, FftDirection::forward);
  fft_columns(fx_conj, FftDirection::forward);
  fx_conj = fx_conj.conjugate().eval();

  AftDopplerStack stack;
  stack.slices.reserve(params.n_cpp);
  ComplexMatrix z(n, y.cols());
  for (std::size_t l = 0; l < params.n_cpp; ++l) {
    const auto shift = static_cast<Eigen::Index>(l) % n;
    for (Eigen::Index k = 0; k < y.cols(); ++k)
      for (Eigen::Index q = 0; q < n; ++q) z(q, k) = fy((q - shift + n) % n, k) * fx_conj(q, k);
    fft_columns(z, FftDirection::inverse);
    fft_rows(z, FftDirection::forward);
    stack.slices.push_back(z);
  }
  return stack;
}

inline StackCell global_peak(const AftDopplerStack& stack) {
  if (stack.slices.empty()) throw std::invalid_argument("empty stack");
  StackCell best;
  double best_power = -1.0;
  for (std::size_t l = 0; l < stack.delays(); ++l) {
    const auto& s = stack.slices[l];
    for (Eigen::Index k = 0; k < s.cols(); ++k)
      for (Eigen::Index p = 0; p < s.rows(); ++p)
        if (const double pw = std::norm(s(p, k)); pw > best_power) {
          best_power = pw;
          best = {l, static_cast<std::size_t>(p), static_cast<std::size_t>(k), std::sqrt(pw)};
        }
  }
  return best;
}

namespace detail {

/// Sum over the circular window |dp| <= hp, |dk| <= hk for every cell.
inline Eigen::MatrixXd circular_box_sum(const Eigen::MatrixXd& power, Eigen::Index hp, Eigen::Index hk) {
  const Eigen::Index n = power.rows(), m = power.cols();
  Eigen::MatrixXd along_k(n, m);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index k = 0; k < m; ++k) {
      double acc = 0.0;
      for (Eigen::Index d = -hk; d <= hk; ++d) acc += power(p, ((k + d) % m + m) % m);
      along_k(p, k) = acc;
    }
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    double acc = 0.0;
    for (Eigen::Index d = -hp; d <= hp; ++d) acc += along_k(((d % n) + n) % n, k);
    for (Eigen::Index p = 0; p < n; ++p) {
      out(p, k) = acc;
      acc += along_k((p + hp + 1) % n, k) - along_k(((p - hp) % n + n) % n, k);
    }
  }
  return out;
}

struct CfarWindow {
  Eigen::Index outer_p, outer_k, inner_p, inner_k;
  double cells;
};

inline CfarWindow cfar_window(const CfarConfig& cfg, Eigen::Index rows, Eigen::Index cols) {
  if (!(cfg.p_fa > 0.0 && cfg.p_fa < 1.0)) throw std::invalid_argument("CFAR false-alarm rate must be in (0, 1)");
  if (cfg.training_p % 2 || cfg.guard_p % 2 || cfg.training_k % 2 || cfg.guard_k % 2)
    throw std::invalid_argument("CFAR training and guard counts must be even (split over both sides)");
  CfarWindow w{};
  w.inner_p = static_cast<Eigen::Index>(cfg.guard_p / 2);
  w.inner_k = static_cast<Eigen::Index>(cfg.guard_k / 2);
  w.outer_p = w.inner_p + static_cast<Eigen::Index>(cfg.training_p / 2);
  w.outer_k = w.inner_k + static_cast<Eigen::Index>(cfg.training_k / 2);
  if (2 * w.outer_p + 1 > rows || 2 * w.outer_k + 1 > cols)
    throw std::invalid_argument("CFAR window exceeds the " + std::to_string(rows) + " x " + std::to_string(cols) +
                                " matrix");
  w.cells = static_cast<double>((2 * w.outer_p + 1) * (2 * w.outer_k + 1) - (2 * w.inner_p + 1) * (2 * w.inner_k + 1));
  if (w.cells <= 0.0) throw std::invalid_argument("CFAR needs at least one training cell");
  return w;
}

} // namespace detail

/// CA-CFAR threshold factor on power for exponential (square-law) noise:
/// P_fa = (1 + alpha / n)^-n.
inline double cfar_multiplier(double p_fa, double training_cells) {
  return training_cells * (std::pow(p_fa, -1.0 / training_cells) - 1.0);
}

/// Power |Z_F|^2 of every slice.
inline std::vector<Eigen::MatrixXd> cfar_power_maps(const AftDopplerStack& stack) {
  std::vector<Eigen::MatrixXd> maps;
  maps.reserve(stack.delays());
  for (const auto& s : stack.slices) maps.push_back(s.cwiseAbs2());
  return maps;
}

struct CfarOutcome {
  std::vector<Peak> peaks;
  std::size_t cells = 0;        ///< cells under test
  std::size_t exceedances = 0;  ///< threshold crossings before deduplication
};

/// 2-D CA-CFAR per l-slice, then local-maximum deduplication over +-1 cell in
/// (l, p, k). Peaks are ordered by (l, p, k).
inline CfarOutcome cfar_run(const AftDopplerStack& stack, const CfarConfig& cfg) {
  if (stack.slices.empty()) throw std::invalid_argument("empty stack");
  const auto rows = stack.rows(), cols = stack.cols();
  const auto w = detail::cfar_window(cfg, rows, cols);
  const double alpha = cfar_multiplier(cfg.p_fa, w.cells);
  const auto power = cfar_power_maps(stack);
  const auto nl = static_cast<std::int64_t>(stack.delays());

  CfarOutcome out;
  out.cells = static_cast<std::size_t>(nl * rows * cols);
  for (std::int64_t l = 0; l < nl; ++l) {
    const auto& pw = power[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd training =
        detail::circular_box_sum(pw, w.outer_p, w.outer_k) - detail::circular_box_sum(pw, w.inner_p, w.inner_k);
    for (Eigen::Index k = 0; k < cols; ++k)
      for (Eigen::Index p = 0; p < rows; ++p) {
        const double v = pw(p, k);
        if (!(v > alpha * training(p, k) / w.cells)) continue;
        ++out.exceedances;
        bool is_max = true;
        for (std::int64_t dl = -1; dl <= 1 && is_max; ++dl) {
          const auto ll = l + dl;
          if (ll < 0 || ll >= nl) continue;
          const auto& other = power[static_cast<std::size_t>(ll)];
          for (Eigen::Index dp = -1; dp <= 1 && is_max; ++dp)
            for (Eigen::Index dk = -1; dk <= 1 && is_max; ++dk) {
              if (dl == 0 && dp == 0 && dk == 0) continue;
              const auto pp = (p + dp + rows) % rows, kk = (k + dk + cols) % cols;
              if (dl == 0 && pp == p && kk == k) continue;
              const double u = other(pp, kk);
              // ties go to the cell that comes first in (l, k, p) order
              const bool earlier = std::tuple(ll, kk, pp) < std::tuple(l, k, p);
              if (u > v || (u == v && earlier)) is_max = false;
            }
        }
        if (!is_max) continue;
        const auto& slice = stack.slices[static_cast<std::size_t>(l)];
        out.peaks.push_back({static_cast<std::size_t>(l), static_cast<std::size_t>(p), static_cast<std::size_t>(k),
                             std::sqrt(v), std::abs(slice((p - 1 + rows) % rows, k)),
                             std::abs(slice((p + 1) % rows, k))});
      }
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const Peak& a, const Peak& b) { return std::tie(a.l, a.p, a.k) < std::tie(b.l, b.p, b.k); });
  return out;
}

inline std::vector<Peak> cfar_detect(const AftDopplerStack& stack, const CfarConfig& cfg) {
  return cfar_run(stack, cfg).peaks;
}

/// Peak from a known cell, reading the early/late neighbours with circular p.
inline Peak peak_at(const AftDopplerStack& stack, const StackCell& cell) {
  const auto& s = stack.slices.at(cell.l);
  const auto rows = s.rows();
  const auto p = static_cast<Eigen::Index>(cell.p), k = static_cast<Eigen::Index>(cell.k);
  return {cell.l, cell.p, cell.k, std::abs(s(p, k)), std::abs(s((p - 1 + rows) % rows, k)),
          std::abs(s((p + 1) % rows, k))};
}

struct SpliceResult {
  std::int64_t beta_hat = 0;
  double fd_hat = 0.0;
  double a_hat = 0.0;
};

/// Joins the integer Doppler alpha (units of delta f) and the fractional
/// b (units of delta f') into beta and f_d. Of the two admissible beta the
/// early/late comparison picks the lower when the early neighbour is larger.
inline SpliceResult splice_doppler(std::int64_t alpha_hat, double b_hat, double early, double late,
                                   const AfdmParams& params) {
  if (!(b_hat > -0.5 - 1e-12 && b_hat <= 0.5 + 1e-12)) throw std::invalid_argument("b_hat outside (-1/2, 1/2]");
  if (early < 0.0 || late < 0.0) throw std::invalid_argument("negative neighbour magnitude");
  const double ratio = static_cast<double>(params.block_length()) / static_cast<double>(params.n_subcarriers);
  const double centre = ratio * static_cast<double>(alpha_hat) - b_hat;
  const auto lo = static_cast<std::int64_t>(std::ceil(centre - 0.5 * ratio));
  const auto hi = static_cast<std::int64_t>(std::floor(centre + 0.5 * ratio));
  if (hi - lo != 0 && hi - lo != 1)
    throw NumericError("integer Doppler bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                       "] does not hold one or two candidates");
  SpliceResult r;
  r.beta_hat = (lo == hi || early > late) ? lo : hi;
  const double nu_prime = static_cast<double>(r.beta_hat) + b_hat;
  r.fd_hat = nu_prime * params.symbol_rate();
  r.a_hat = nu_prime / ratio - static_cast<double>(alpha_hat);
  return r;
}

/// Reads (l, alpha, b) off a peak position and splices the Doppler.
inline TargetEstimate estimate_target(const Peak& peak, const AfdmParams& params) {
  const double n = static_cast<double>(params.n_subcarriers);
  const double nsym = static_cast<double>(params.n_symbols);

  TargetEstimate e;
  e.l_bar = peak.l;
  e.p_bar = peak.p;
  e.k_bar = peak.k;
  e.peak_magnitude = peak.magnitude;
  e.l_hat = peak.l;
  e.tau_hat = static_cast<double>(peak.l) / params.bandwidth_hz;

  const double alpha_real =
      wrap(static_cast<double>(peak.p) + params.shift_per_delay() * static_cast<double>(peak.l) + n / 2.0, n) - n / 2.0;
  const double alpha_round = std::round(alpha_real);
  if (std::abs(alpha_real - alpha_round) > 1e-6)
    throw NumericError("integer Doppler estimate " + std::to_string(alpha_real) +
                       " is not integral; 2 N c1 must be an integer");
  e.alpha_hat = static_cast<std::int64_t>(alpha_round);
  e.b_hat = (nsym / 2.0 - wrap(nsym / 2.0 - static_cast<double>(peak.k), nsym)) / nsym;

  const auto splice = splice_doppler(e.alpha_hat, e.b_hat, peak.early, peak.late, params);
  e.beta_hat = splice.beta_hat;
  e.fd_hat = splice.fd_hat;
  e.a_hat = splice.a_hat;
  return e;
}

inline std::vector<TargetEstimate> estimate_targets(std::span<const Peak> peaks, const AfdmParams& params) {
  std::vector<TargetEstimate> out;
  out.reserve(peaks.size());
  for (const auto& p : peaks) out.push_back(estimate_target(p, params));
  return out;
}

/// True when 2 N c1 is integral, which the integer Doppler read-out needs.
inline bool sensing_compatible(const AfdmParams& params) {
  const double s = params.shift_per_delay();
  return std::abs(s - std::round(s)) < 1e-9;
}

/// Symbol-division OFDM range-Doppler image: divide by X (magnitudes floored at
/// floor_ratio times the RMS of X), IDFT over subcarriers, DFT over symbols.
/// Rows index delay, columns Doppler.
inline ComplexMatrix ofdm_baseline_image(const ComplexMatrix& received, const ComplexMatrix& x,
                                         double floor_ratio = 1e-3) {
  if (received.rows() != x.rows() || received.cols() != x.cols())
    throw DimensionError("received grid and symbols differ in size");
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  const double floor = floor_ratio * rms;
  ComplexMatrix d(received.rows(), received.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k)
    for (Eigen::Index p = 0; p < x.rows(); ++p) {
      Complex xv = x(p, k);
      if (std::abs(xv) < floor) xv = std::abs(xv) > 0.0 ? floor * xv / std::abs(xv) : Complex(floor, 0.0);
      d(p, k) = floor > 0.0 ? received(p, k) / xv : Complex{};
    }
  fft_columns(d, FftDirection::inverse);
  fft_rows(d, FftDirection::forward);
  return d;
}

/// Cap returned by image_snr when the floor is exactly zero.
inline constexpr double image_snr_cap_db = 300.0;

/// 10 log10(|peak|^2 / mean power of the cells outside the peak's +-1
/// neighbourhood), with circular neighbourhoods. The peak defaults to the
/// largest cell.
inline double image_snr(const ComplexMatrix& image, std::optional<std::pair<Eigen::Index, Eigen::Index>> peak = {}) {
  if (image.size() == 0) throw std::invalid_argument("empty image");
  const auto rows = image.rows(), cols = image.cols();
  Eigen::Index pr = 0, pc = 0;
  if (peak) {
    std::tie(pr, pc) = *peak;
  } else {
    image.cwiseAbs2().maxCoeff(&pr, &pc);
  }
  const double peak_power = std::norm(image(pr, pc));
  double floor = 0.0;
  std::size_t count = 0;
  for (Eigen::Index k = 0; k < cols; ++k)
    for (Eigen::Index p = 0; p < rows; ++p) {
      const auto dp = std::min((p - pr + rows) % rows, (pr - p + rows) % rows);
      const auto dk = std::min((k - pc + cols) % cols, (pc - k + cols) % cols);
      if (dp <= 1 && dk <= 1) continue;
      floor += std::norm(image(p, k));
      ++count;
    }
  if (count == 0) throw std::invalid_argument("image has no cells outside the peak neighbourhood");
  floor /= static_cast<double>(count);
  if (floor <= 0.0) return peak_power > 0.0 ? image_snr_cap_db : 0.0;
  return std::min(10.0 * std::log10(peak_power / floor), image_snr_cap_db);
}

/// Search grid for the correlation estimator: integer delays and a uniform
/// normalized-Doppler grid (units of delta f).
struct MlGrid {
  std::vector<std::size_t> delays;
  double doppler_min = -1.0;
  double doppler_max = 1.0;
  double doppler_step = 0.01;
};

struct MlEstimate {
  std::size_t l_hat = 0;
  double nu_hat = 0.0;
  double tau_hat = 0.0;
  double fd_hat = 0.0;
};

/// Single-target maximum-likelihood estimate: maximizes the correlation of the
/// received samples with delayed, Doppler-shifted copies of the known frame
/// over the grid, then refines Doppler with a parabola through the three
/// grid values around the maximum.
inline MlEstimate ml_estimate(const ComplexMatrix& y, const ComplexMatrix& x, const AfdmParams& params,
                              const MlGrid& grid) {
  if (grid.delays.empty() || !(grid.doppler_step > 0.0) || grid.doppler_max < grid.doppler_min)
    throw std::invalid_argument("empty estimator grid");
  const auto n = params.n_subcarriers;
  const auto nsym = params.n_symbols;
  if (static_cast<std::size_t>(y.rows()) != n || y.rows() != x.rows() || y.cols() != x.cols() ||
      static_cast<std::size_t>(y.cols()) != nsym)
    throw DimensionError("received and transmitted grids must both be N x N_sym");
  for (auto l : grid.delays)
    if (l > params.n_cpp) throw GuardViolation("estimator delay beyond the prefix");

  const AftKernel kernel(n, params.c1, params.c2);
  std::vector<ComplexVector> rx(nsym), tx(nsym);
  for (std::size_t k = 0; k < nsym; ++k) {
    rx[k].assign(y.col(static_cast<Eigen::Index>(k)).data(), y.col(static_cast<Eigen::Index>(k)).data() + n);
    kernel.inverse(rx[k]);
    ComplexVector s(x.col(static_cast<Eigen::Index>(k)).data(), x.col(static_cast<Eigen::Index>(k)).data() + n);
    kernel.inverse(s);
    tx[k] = add_cpp(s, params.n_cpp, params.c1);
  }

  const auto count = static_cast<std::size_t>(std::floor((grid.doppler_max - grid.doppler_min) / grid.doppler_step + 1e-9)) + 1;
  const double nn = static_cast<double>(n);
  const double ns = static_cast<double>(params.block_length());
  std::vector<double> surface(count);
  double best = -1.0;
  std::size_t best_l = grid.delays.front(), best_i = 0;
  std::vector<double> best_surface;
  ComplexVector z(n * nsym);

  for (auto l : grid.delays) {
    for (std::size_t k = 0; k < nsym; ++k)
      for (std::size_t t = 0; t < n; ++t) z[k * n + t] = rx[k][t] * std::conj(tx[k][params.n_cpp + t - l]);
    for (std::size_t i = 0; i < count; ++i) {
      const double nu = grid.doppler_min + static_cast<double>(i) * grid.doppler_step;
      const Complex step = unit_phasor(-nu / nn);
      Complex acc{};
      for (std::size_t k = 0; k < nsym; ++k) {
        Complex rot = unit_phasor(wrap(-nu * ns * static_cast<double>(k) / nn, 1.0));
        Complex block{};
        for (std::size_t t = 0; t < n; ++t) {
          block += z[k * n + t] * rot;
          rot *= step;
        }
        acc += block;
      }
      surface[i] = std::norm(acc);
      if (surface[i] > best) {
        best = surface[i];
        best_l = l;
        best_i = i;
      }
    }
    if (best_l == l) best_surface = surface;
  }

  double nu_hat = grid.doppler_min + static_cast<double>(best_i) * grid.doppler_step;
  if (best_i > 0 && best_i + 1 < count) {
    const double ym = best_surface[best_i - 1], y0 = best_surface[best_i], yp = best_surface[best_i + 1];
    const double curvature = ym - 2.0 * y0 + yp;
    if (curvature < 0.0) nu_hat += std::clamp(0.5 * (ym - yp) / curvature, -0.5, 0.5) * grid.doppler_step;
  }
  MlEstimate e;
  e.l_hat = best_l;
  e.nu_hat = nu_hat;
  e.tau_hat = static_cast<double>(best_l) / params.bandwidth_hz;
  e.fd_hat = nu_hat * params.subcarrier_spacing();
  return e;
}

} // namespace isaclab
