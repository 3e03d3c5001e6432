#pragma once

#include <charconv>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "types.hpp"

namespace isaclab {

/// Exact rational number used for the chirp rates, so that c * n^2 can be
/// reduced modulo 1 in integer arithmetic before it becomes a phase.
class Rational {
public:
  constexpr Rational() = default;

  Rational(std::int64_t numerator, std::int64_t denominator = 1) {
    if (denominator == 0)
      throw ConfigError("rational with zero denominator");
    if (denominator < 0) {
      numerator = -numerator;
      denominator = -denominator;
    }
    const std::int64_t g = std::gcd(numerator, denominator);
    num_ = g ? numerator / g : 0;
    den_ = g ? denominator / g : 1;
  }

  /// Parses "p/q", an integer, or a plain decimal such as "0.0025" (exactly).
  static Rational parse(std::string_view text) {
    auto fail = [&] { throw ConfigError("cannot parse rational '" + std::string(text) + "'"); };
    auto to_int = [&](std::string_view s) {
      std::int64_t v = 0;
      if (s.empty()) fail();
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size()) fail();
      return v;
    };
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (auto slash = text.find('/'); slash != std::string_view::npos)
      return Rational(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
    auto dot = text.find('.');
    if (dot == std::string_view::npos) return Rational(to_int(text));
    std::string digits(text.substr(0, dot));
    std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 15) fail();
    digits += frac;
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    if (digits == "-" || digits.empty()) fail();
    return Rational(to_int(digits == "+" ? "0" : digits), den);
  }

  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_zero() const { return num_ == 0; }

  /// Fractional part of (this * k) in [0, 1), computed exactly.
  double frac_times(std::int64_t k) const {
    const __int128 p = static_cast<__int128>(num_) * k;
    __int128 r = p % den_;
    if (r < 0) r += den_;
    return static_cast<double>(static_cast<std::int64_t>(r)) / static_cast<double>(den_);
  }

  /// Fractional part of (this * n^2) in [0, 1).
  double frac_times_square(std::int64_t n) const {
    const __int128 sq = static_cast<__int128>(n) * n;
    const __int128 reduced = sq % den_;
    return frac_times(static_cast<std::int64_t>(reduced));
  }

  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  friend bool operator==(const Rational&, const Rational&) = default;

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

} // namespace isaclab
