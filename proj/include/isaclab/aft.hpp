#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>

#include "fft.hpp"
#include "rational.hpp"
#include "types.hpp"

namespace isaclab {

/// Waveform constants of an AFDM frame.
struct AfdmParams {
  std::size_t n_subcarriers = 64;  ///< N
  std::size_t n_cpp = 8;           ///< N_cp, prefix length in samples
  std::size_t n_symbols = 1;       ///< N_sym, AFDM symbols per frame
  Rational c1{};
  Rational c2{};
  unsigned mod_order = 4;          ///< square QAM order
  std::size_t n_pilot_guard = 0;   ///< reserved AFT-domain indices per symbol
  unsigned guard_xi_v = 0;         ///< guard width for fractional Doppler spread
  double bandwidth_hz = 122.88e6;
  double carrier_hz = 24e9;

  void validate() const {
    const auto n = n_subcarriers;
    if (n == 0) throw ConfigError("n_subcarriers must be positive");
    if (n_cpp > n) throw ConfigError("n_cpp must not exceed n_subcarriers");
    if (n_symbols == 0) throw ConfigError("n_symbols must be positive");
    if (n_pilot_guard >= n) throw ConfigError("n_pilot_guard must be smaller than n_subcarriers");
    if (mod_order != 4 && mod_order != 16 && mod_order != 64 && mod_order != 256)
      throw ConfigError("mod_order must be one of 4, 16, 64, 256");
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
    if (!(carrier_hz > 0.0)) throw ConfigError("carrier frequency must be positive");
    if (c1.value() < 0.0) throw ConfigError("c1 must be non-negative");
    if (!(c2.value() < 1.0 / (2.0 * static_cast<double>(n))))
      throw ConfigError("c2 must be below 1/(2N)");
  }

  std::size_t block_length() const { return n_subcarriers + n_cpp; }
  std::size_t frame_length() const { return n_symbols * block_length(); }
  std::size_t data_per_symbol() const { return n_subcarriers - n_pilot_guard; }
  unsigned bits_per_symbol() const {
    unsigned b = 0;
    for (unsigned m = mod_order; m > 1; m >>= 1) ++b;
    return b;
  }
  std::size_t bits_per_frame() const { return n_symbols * data_per_symbol() * bits_per_symbol(); }

  double subcarrier_spacing() const { return bandwidth_hz / static_cast<double>(n_subcarriers); }
  double sample_period() const { return 1.0 / bandwidth_hz; }
  /// Delta f' = B / N_s, the Doppler resolution across symbols.
  double symbol_rate() const { return bandwidth_hz / static_cast<double>(block_length()); }
  double frame_duration() const { return static_cast<double>(frame_length()) / bandwidth_hz; }
  /// 2 N c1, the AFT-domain shift per delay sample.
  double shift_per_delay() const { return 2.0 * static_cast<double>(n_subcarriers) * c1.value(); }
};

/// Precomputed chirp diagonals for one (N, c1, c2); applies the DAFT
/// A = L(c2) F L(c1) with L(c) = diag(exp(-j2pi c n^2)) and unitary F.
class AftKernel {
public:
  AftKernel(std::size_t n, const Rational& c1, const Rational& c2)
      : chirp1_(chirp(n, c1)), chirp2_(chirp(n, c2)) {
    if (n == 0) throw DimensionError("transform length must be positive");
  }

  std::size_t size() const { return chirp1_.size(); }

  void forward(std::span<Complex> s) const {
    check(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) s[n] *= chirp1_[n];
    fft(s);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= chirp2_[m];
  }

  void inverse(std::span<Complex> x) const {
    check(x.size());
    for (std::size_t m = 0; m < x.size(); ++m) x[m] *= std::conj(chirp2_[m]);
    ifft(x);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] *= std::conj(chirp1_[n]);
  }

  static ComplexVector chirp(std::size_t n, const Rational& c) {
    ComplexVector out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = unit_phasor(-c.frac_times_square(static_cast<std::int64_t>(i)));
    return out;
  }

private:
  void check(std::size_t n) const {
    if (n != chirp1_.size())
      throw DimensionError("transform input has length " + std::to_string(n) + ", expected " +
                           std::to_string(chirp1_.size()));
  }

  ComplexVector chirp1_;
  ComplexVector chirp2_;
};

/// s[n] = N^-1/2 sum_m x[m] exp(j2pi(c1 n^2 + mn/N + c2 m^2)).
inline ComplexVector idaft(std::span<const Complex> x, const Rational& c1, const Rational& c2) {
  if (x.empty()) throw DimensionError("idaft of an empty vector");
  ComplexVector s(x.begin(), x.end());
  AftKernel(s.size(), c1, c2).inverse(s);
  return s;
}

inline ComplexVector daft(std::span<const Complex> s, const Rational& c1, const Rational& c2) {
  if (s.empty()) throw DimensionError("daft of an empty vector");
  ComplexVector x(s.begin(), s.end());
  AftKernel(x.size(), c1, c2).forward(x);
  return x;
}

/// Phase of the prefix sample at position n in [-n_cpp, -1]:
/// s[n] = s[n + N] exp(-j2pi c1 (N^2 + 2Nn)).
inline Complex cpp_phase(std::size_t n_total, std::int64_t n, const Rational& c1) {
  const auto big_n = static_cast<std::int64_t>(n_total);
  return unit_phasor(-c1.frac_times(big_n * big_n + 2 * big_n * n));
}

/// Prepends the chirp-periodic prefix; output length N + n_cpp.
inline ComplexVector add_cpp(std::span<const Complex> s, std::size_t n_cpp, const Rational& c1) {
  const std::size_t n = s.size();
  if (n_cpp > n) throw ConfigError("prefix longer than the block");
  ComplexVector out(n + n_cpp);
  for (std::size_t i = 0; i < n_cpp; ++i) {
    const auto pos = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(n_cpp);
    out[i] = s[static_cast<std::size_t>(pos + static_cast<std::int64_t>(n))] * cpp_phase(n, pos, c1);
  }
  std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(n_cpp));
  return out;
}

inline ComplexVector add_cpp(std::span<const Complex> s, const AfdmParams& params) {
  if (s.size() != params.n_subcarriers) throw DimensionError("block length differs from N");
  return add_cpp(s, params.n_cpp, params.c1);
}

/// Drops the first n_cpp samples of one block.
inline ComplexVector remove_cpp(std::span<const Complex> segment, std::size_t n_cpp) {
  if (segment.size() <= n_cpp) throw DimensionError("segment shorter than its prefix");
  return {segment.begin() + static_cast<std::ptrdiff_t>(n_cpp), segment.end()};
}

inline ComplexVector remove_cpp(std::span<const Complex> segment, const AfdmParams& params) {
  if (segment.size() != params.block_length())
    throw DimensionError("segment length differs from N + N_cp");
  return remove_cpp(segment, params.n_cpp);
}

} // namespace isaclab
