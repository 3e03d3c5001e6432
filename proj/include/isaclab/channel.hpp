#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aft.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace isaclab {

enum class Swerling { zero, three };

/// How a Swerling-3 gain fluctuates within one frame.
enum class Fluctuation { per_frame, per_sample };

/// One propagation path or point target.
struct PathSpec {
  Complex gain{1.0, 0.0};          ///< h, or chi-bar times a fixed phase for Swerling 3
  std::size_t delay_samples = 0;   ///< l = tau * B
  double normalized_doppler = 0.0; ///< nu = f_d / delta f
  Swerling swerling = Swerling::zero;

  double integer_doppler() const { return std::round(normalized_doppler); }
};

struct NoiseSpec {
  double variance = 0.0;   ///< per complex sample
  std::uint64_t seed = 0;
  std::uint64_t trial = 0; ///< frame index; with seed selects the random streams
};

/// Swerling-0 returns the mean gain; Swerling-3 draws Gamma(shape 2, mean chi_bar),
/// i.e. pdf 4x/chi_bar^2 exp(-2x/chi_bar).
template <class Rng>
double sample_swerling_gain(Swerling model, double chi_bar, Rng& rng) {
  if (!(chi_bar > 0.0)) throw std::invalid_argument("Swerling mean gain must be positive");
  if (model == Swerling::zero) return chi_bar;
  std::gamma_distribution<double> gamma(2.0, chi_bar / 2.0);
  return gamma(rng);
}

inline void check_guard(std::span<const PathSpec> paths, const AfdmParams& params) {
  for (const auto& p : paths)
    if (p.delay_samples > params.n_cpp)
      throw GuardViolation("path delay " + std::to_string(p.delay_samples) +
                           " exceeds the prefix length " + std::to_string(params.n_cpp));
}

/// r[n] = sum_i g_i[n] exp(-j2pi f_d tau) s[n - l_i] exp(j2pi nu_i n / N) + w[n].
/// Sample n = 0 is the first sample after the prefix of the first block;
/// samples before the frame start are zero.
inline ComplexVector apply_channel(std::span<const Complex> frame, std::span<const PathSpec> paths,
                                   const AfdmParams& params, const NoiseSpec& noise,
                                   Fluctuation fluctuation = Fluctuation::per_frame) {
  if (frame.size() != params.frame_length())
    throw DimensionError("frame length does not match the parameters");
  if (noise.variance < 0.0) throw std::invalid_argument("noise variance must be non-negative");
  check_guard(paths, params);

  const auto total = frame.size();
  const double n_sub = static_cast<double>(params.n_subcarriers);
  const auto offset = static_cast<std::int64_t>(params.n_cpp);
  ComplexVector out(total, Complex{});

  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& path = paths[i];
    const auto l = path.delay_samples;
    const double nu = path.normalized_doppler;
    const Complex residual = unit_phasor(-nu * static_cast<double>(l) / n_sub);
    auto gain_rng = make_rng(noise.seed, noise.trial, stream_id("gain") + i);
    const double chi_bar = std::abs(path.gain);
    const Complex direction = chi_bar > 0.0 ? path.gain / chi_bar : Complex{1.0, 0.0};
    double frame_gain = chi_bar;
    if (path.swerling == Swerling::three && chi_bar > 0.0)
      frame_gain = sample_swerling_gain(Swerling::three, chi_bar, gain_rng);
    const bool per_sample = path.swerling == Swerling::three && fluctuation == Fluctuation::per_sample && chi_bar > 0.0;

    for (std::size_t idx = l; idx < total; ++idx) {
      const double n = static_cast<double>(static_cast<std::int64_t>(idx) - offset);
      const double g = per_sample ? sample_swerling_gain(Swerling::three, chi_bar, gain_rng) : frame_gain;
      out[idx] += g * direction * residual * frame[idx - l] * unit_phasor(wrap(nu * n / n_sub, 1.0));
    }
  }

  if (noise.variance > 0.0) {
    auto rng = make_rng(noise.seed, noise.trial, "noise");
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise.variance / 2.0));
    for (auto& v : out) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v += Complex{re, im};
    }
  }
  return out;
}

namespace detail {

/// sum_{n=0}^{N-1} exp(-j2pi theta n / N), the Dirichlet factor of the AFT-domain channel.
inline Complex dirichlet(double theta, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double den = std::sin(pi * theta / nn);
  if (std::abs(den) < 1e-9) {
    Complex acc{};
    for (std::size_t k = 0; k < n; ++k) acc += unit_phasor(-theta * static_cast<double>(k) / nn);
    return acc;
  }
  return unit_phasor(-theta * (nn - 1.0) / (2.0 * nn)) * (std::sin(pi * theta) / den);
}

} // namespace detail

/// Dense AFT-domain channel of symbol `symbol_index`:
/// H = sum_i h~_i exp(j2pi nu_i N_s k / N) H_i with the closed-form entries
/// H_i[p,q] = (1/N) exp(j2pi/N (N c1 l^2 - q l + N c2 (q^2 - p^2))) F_i[p,q].
inline ComplexMatrix build_effective_channel(std::span<const PathSpec> paths, const AfdmParams& params,
                                             std::size_t symbol_index = 0, std::size_t size_cap = 512) {
  const auto n = params.n_subcarriers;
  if (n > size_cap)
    throw std::invalid_argument("effective channel of size " + std::to_string(n) + " exceeds the cap " +
                                std::to_string(size_cap));
  const double nn = static_cast<double>(n);
  const auto ni = static_cast<std::int64_t>(n);
  ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> c2_sq(n);
  for (std::size_t m = 0; m < n; ++m) c2_sq[m] = params.c2.frac_times_square(static_cast<std::int64_t>(m));

  for (const auto& path : paths) {
    const auto l = static_cast<std::int64_t>(path.delay_samples);
    const double nu = path.normalized_doppler;
    const double shift = params.shift_per_delay() * static_cast<double>(l);
    const double block_turns = nu * static_cast<double>(params.block_length() * symbol_index) / nn;
    const Complex weight = path.gain * unit_phasor(-nu * static_cast<double>(l) / nn) *
                           unit_phasor(wrap(block_turns, 1.0)) / nn;
    const double c1_term = params.c1.frac_times_square(l);
    for (std::int64_t p = 0; p < ni; ++p)
      for (std::int64_t q = 0; q < ni; ++q) {
        const double turns = c1_term - static_cast<double>(wrap(q * l, ni)) / nn +
                             c2_sq[static_cast<std::size_t>(q)] - c2_sq[static_cast<std::size_t>(p)];
        const double theta = static_cast<double>(p - q) - nu + shift;
        h(p, q) += weight * unit_phasor(turns) * detail::dirichlet(theta, n);
      }
  }
  return h;
}

/// Genie-aided LMMSE: x = H^H (H H^H + s2 I)^-1 y for every column of y.
/// With s2 = 0 this is the exact inverse and needs H to be full rank.
inline ComplexMatrix equalize_genie(const ComplexMatrix& y, const ComplexMatrix& h, double noise_variance) {
  if (h.rows() != h.cols() || y.rows() != h.rows())
    throw DimensionError("channel matrix and observation sizes disagree");
  if (noise_variance < 0.0) throw std::invalid_argument("noise variance must be non-negative");
  if (noise_variance == 0.0) {
    Eigen::FullPivLU<ComplexMatrix> lu(h);
    if (!lu.isInvertible()) throw NumericError("noiseless equalization of a rank-deficient channel");
    return lu.solve(y);
  }
  ComplexMatrix gram = h * h.adjoint();
  gram.diagonal().array() += noise_variance;
  return h.adjoint() * gram.ldlt().solve(y);
}

} // namespace isaclab
