#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <utility>

#include <fftw3.h>

#include "types.hpp"

namespace isaclab {

enum class FftDirection { forward, inverse };

namespace detail {

/// Process-wide cache of in-place FFTW plans keyed by (length, direction).
/// Planning is serialized; execution through fftw_execute_dft is thread safe.
class FftPlanCache {
public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan plan(std::size_t n, FftDirection dir) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, dir);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* scratch = fftw_alloc_complex(n);
    const int sign = dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (!p) throw NumericError("FFTW could not create a plan of length " + std::to_string(n));
    plans_.emplace(key, p);
    return p;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, FftDirection>, fftw_plan> plans_;
};

} // namespace detail

/// Unitary in-place DFT. forward: X[k] = N^-1/2 sum x[n] e^{-j2pi kn/N}.
inline void fft_inplace(std::span<Complex> data, FftDirection dir) {
  const std::size_t n = data.size();
  if (n == 0) return;
  if (n > 1) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(detail::FftPlanCache::instance().plan(n, dir), ptr, ptr);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : data) v *= scale;
}

inline void fft(std::span<Complex> data) { fft_inplace(data, FftDirection::forward); }
inline void ifft(std::span<Complex> data) { fft_inplace(data, FftDirection::inverse); }

inline std::span<Complex> column_span(ComplexMatrix& m, Eigen::Index col) {
  return {m.col(col).data(), static_cast<std::size_t>(m.rows())};
}

/// Unitary DFT along every column.
inline void fft_columns(ComplexMatrix& m, FftDirection dir) {
  for (Eigen::Index k = 0; k < m.cols(); ++k) fft_inplace(column_span(m, k), dir);
}

/// Unitary DFT along every row.
inline void fft_rows(ComplexMatrix& m, FftDirection dir) {
  ComplexVector row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index p = 0; p < m.rows(); ++p) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(p, k);
    fft_inplace(row, dir);
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(p, k) = row[static_cast<std::size_t>(k)];
  }
}

} // namespace isaclab
