#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aft.hpp"
#include "types.hpp"

namespace isaclab {

using BitPayload = std::vector<std::uint8_t>;

/// N x N_sym AFT-domain symbols. The first n_reserved indices of each column
/// are pilot/guard cells: index 0 carries a unit pilot, the rest are zero.
struct SymbolGrid {
  ComplexMatrix symbols;
  std::size_t n_reserved = 0;
};

/// Square Gray-coded QAM with unit average energy.
///
/// A symbol's bits are split in half: the first half selects the in-phase
/// level, the second half the quadrature level, most significant bit first.
/// Per axis the bit pattern g is a Gray code; with i the binary index of g
/// and L = sqrt(M), the level is (L - 1 - 2i) / sqrt(2(M - 1)/3).
/// For QPSK this gives 00 -> (+1+j)/sqrt2, 01 -> (+1-j)/sqrt2,
/// 10 -> (-1+j)/sqrt2, 11 -> (-1-j)/sqrt2.
class QamMapper {
public:
  explicit QamMapper(unsigned order) : order_(order) {
    if (order != 4 && order != 16 && order != 64 && order != 256)
      throw ConfigError("unsupported QAM order " + std::to_string(order));
    while ((1u << (2 * axis_bits_)) < order) ++axis_bits_;
    levels_ = 1u << axis_bits_;
    scale_ = 1.0 / std::sqrt(2.0 * (order - 1.0) / 3.0);
  }

  unsigned order() const { return order_; }
  unsigned bits_per_symbol() const { return 2 * axis_bits_; }
  double min_distance() const { return 2.0 * scale_; }

  Complex map(std::span<const std::uint8_t> bits) const {
    return {level(bits.first(axis_bits_)), level(bits.subspan(axis_bits_, axis_bits_))};
  }

  void demap(Complex symbol, std::span<std::uint8_t> bits) const {
    decide(symbol.real(), bits.first(axis_bits_));
    decide(symbol.imag(), bits.subspan(axis_bits_, axis_bits_));
  }

private:
  double level(std::span<const std::uint8_t> gray_bits) const {
    unsigned g = 0;
    for (auto b : gray_bits) g = (g << 1) | (b & 1u);
    unsigned i = g;
    for (unsigned shift = g >> 1; shift; shift >>= 1) i ^= shift;
    return (static_cast<double>(levels_) - 1.0 - 2.0 * i) * scale_;
  }

  void decide(double v, std::span<std::uint8_t> bits) const {
    const double idx = std::round(((levels_ - 1.0) - v / scale_) / 2.0);
    const auto i = static_cast<unsigned>(std::clamp(idx, 0.0, levels_ - 1.0));
    const unsigned g = i ^ (i >> 1);
    for (unsigned b = 0; b < axis_bits_; ++b) bits[b] = static_cast<std::uint8_t>((g >> (axis_bits_ - 1 - b)) & 1u);
  }

  unsigned order_;
  unsigned axis_bits_ = 1;
  unsigned levels_ = 2;
  double scale_ = 1.0;
};

template <class Rng>
BitPayload random_bits(std::size_t n, Rng& rng) {
  BitPayload bits(n);
  std::uniform_int_distribution<int> coin(0, 1);
  for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
  return bits;
}

inline SymbolGrid map_bits(std::span<const std::uint8_t> bits, const AfdmParams& params) {
  const QamMapper qam(params.mod_order);
  if (bits.size() != params.bits_per_frame())
    throw DimensionError("payload has " + std::to_string(bits.size()) + " bits, frame carries " +
                         std::to_string(params.bits_per_frame()));
  SymbolGrid grid;
  grid.n_reserved = params.n_pilot_guard;
  grid.symbols = ComplexMatrix::Zero(static_cast<Eigen::Index>(params.n_subcarriers),
                                     static_cast<Eigen::Index>(params.n_symbols));
  const unsigned per_symbol = qam.bits_per_symbol();
  std::size_t pos = 0;
  for (Eigen::Index k = 0; k < grid.symbols.cols(); ++k) {
    if (grid.n_reserved > 0) grid.symbols(0, k) = 1.0;
    for (auto m = static_cast<Eigen::Index>(grid.n_reserved); m < grid.symbols.rows(); ++m) {
      grid.symbols(m, k) = qam.map(bits.subspan(pos, per_symbol));
      pos += per_symbol;
    }
  }
  return grid;
}

inline BitPayload demap_symbols(const SymbolGrid& grid, const AfdmParams& params) {
  const QamMapper qam(params.mod_order);
  const unsigned per_symbol = qam.bits_per_symbol();
  const auto data_rows = grid.symbols.rows() - static_cast<Eigen::Index>(grid.n_reserved);
  BitPayload bits(static_cast<std::size_t>(data_rows * grid.symbols.cols()) * per_symbol);
  std::size_t pos = 0;
  for (Eigen::Index k = 0; k < grid.symbols.cols(); ++k)
    for (auto m = static_cast<Eigen::Index>(grid.n_reserved); m < grid.symbols.rows(); ++m) {
      qam.demap(grid.symbols(m, k), std::span(bits).subspan(pos, per_symbol));
      pos += per_symbol;
    }
  return bits;
}

/// Time-domain frame: per column IDAFT then prefix, blocks in transmission order.
inline ComplexVector build_frame(const ComplexMatrix& symbols, const AfdmParams& params) {
  const auto n = params.n_subcarriers;
  if (static_cast<std::size_t>(symbols.rows()) != n ||
      static_cast<std::size_t>(symbols.cols()) != params.n_symbols)
    throw DimensionError("symbol grid is not N x N_sym");
  const AftKernel kernel(n, params.c1, params.c2);
  ComplexVector frame;
  frame.reserve(params.frame_length());
  ComplexVector block(n);
  for (Eigen::Index k = 0; k < symbols.cols(); ++k) {
    for (std::size_t m = 0; m < n; ++m) block[m] = symbols(static_cast<Eigen::Index>(m), k);
    kernel.inverse(block);
    const auto with_prefix = add_cpp(block, params.n_cpp, params.c1);
    frame.insert(frame.end(), with_prefix.begin(), with_prefix.end());
  }
  return frame;
}

inline ComplexVector build_frame(const SymbolGrid& grid, const AfdmParams& params) {
  return build_frame(grid.symbols, params);
}

/// AFT-time matrix Y: per block drop the prefix and apply the DAFT.
inline ComplexMatrix parse_frame(std::span<const Complex> frame, const AfdmParams& params) {
  if (frame.size() != params.frame_length())
    throw DimensionError("frame has " + std::to_string(frame.size()) + " samples, expected " +
                         std::to_string(params.frame_length()));
  const auto n = params.n_subcarriers;
  const auto ns = params.block_length();
  const AftKernel kernel(n, params.c1, params.c2);
  ComplexMatrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(params.n_symbols));
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    auto col = column_span(y, k);
    const auto* start = frame.data() + static_cast<std::size_t>(k) * ns + params.n_cpp;
    std::copy(start, start + n, col.begin());
    kernel.forward(col);
  }
  return y;
}

} // namespace isaclab
