#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "types.hpp"

namespace isaclab {

/// Binary frame file: three little-endian uint64 {N, N_cp, N_sym} followed by
/// N_sym * (N + N_cp) interleaved little-endian float64 (re, im) pairs.
struct FrameFile {
  std::uint64_t n_subcarriers = 0;
  std::uint64_t n_cpp = 0;
  std::uint64_t n_symbols = 0;
  ComplexVector samples;
};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw ConfigError("truncated frame file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

} // namespace detail

inline void write_frame_file(const std::string& path, const FrameFile& f) {
  if (f.samples.size() != f.n_symbols * (f.n_subcarriers + f.n_cpp))
    throw DimensionError("frame sample count does not match its header");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  detail::put_u64(os, f.n_subcarriers);
  detail::put_u64(os, f.n_cpp);
  detail::put_u64(os, f.n_symbols);
  for (const auto& z : f.samples) {
    detail::put_u64(os, std::bit_cast<std::uint64_t>(z.real()));
    detail::put_u64(os, std::bit_cast<std::uint64_t>(z.imag()));
  }
  if (!os) throw ConfigError("failed writing '" + path + "'");
}

inline FrameFile read_frame_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open frame file '" + path + "'");
  FrameFile f;
  f.n_subcarriers = detail::get_u64(is);
  f.n_cpp = detail::get_u64(is);
  f.n_symbols = detail::get_u64(is);
  if (f.n_subcarriers == 0 || f.n_cpp > f.n_subcarriers || f.n_symbols == 0 ||
      f.n_symbols * (f.n_subcarriers + f.n_cpp) > (std::uint64_t{1} << 32))
    throw ConfigError("frame file '" + path + "' has an invalid header");
  f.samples.resize(f.n_symbols * (f.n_subcarriers + f.n_cpp));
  for (auto& z : f.samples) {
    const double re = std::bit_cast<double>(detail::get_u64(is));
    const double im = std::bit_cast<double>(detail::get_u64(is));
    z = {re, im};
  }
  return f;
}

} // namespace isaclab
