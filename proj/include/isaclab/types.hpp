#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace isaclab {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// N x N_sym grids are column-major: one column per AFDM symbol.
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double speed_of_light = 299792458.0;

/// Sizes of inputs do not agree with each other or with the parameters.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A parameter set or configuration file is invalid.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A path delay exceeds the prefix length.
struct GuardViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (non-convergence, singular system, inconsistent estimate).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-negative remainder of a modulo m, for real a.
inline double wrap(double a, double m) {
  double r = std::fmod(a, m);
  return r < 0.0 ? r + m : r;
}

/// Non-negative remainder of a modulo m, for integers.
inline std::int64_t wrap(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

inline Complex unit_phasor(double turns) {
  const double angle = two_pi * turns;
  return {std::cos(angle), std::sin(angle)};
}

} // namespace isaclab
