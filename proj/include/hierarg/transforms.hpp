#pragma once

// Thin wrappers over FFTW's type-I real-to-real transforms.
//
// Conventions (N = number of grid intervals on [0, π], x_j = πj/N):
//   sine series    f(x_j) = Σ_{m=1}^{N-1} a_m sin(m x_j)
//   cosine series  f(x_j) = Σ_{m=0}^{N}   b_m cos(m x_j)
// Coefficient vectors are indexed by wavenumber and have length N+1.

#include <fftw3.h>

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "hierarg/error.hpp"

namespace hierarg::detail {

class r2r_plan_cache {
 public:
  static r2r_plan_cache& instance() {
    static r2r_plan_cache cache;
    return cache;
  }

  // Returned plans are immutable and may be executed concurrently through
  // fftw_execute_r2r on caller-owned buffers.
  fftw_plan get(int n, fftw_r2r_kind kind) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, static_cast<int>(kind));
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<double> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_r2r_1d(n, in.data(), out.data(), kind,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw sizing_error("FFTW could not plan transform of size " + std::to_string(n));
    plans_.emplace(key, p);
    return p;
  }

  r2r_plan_cache(const r2r_plan_cache&) = delete;
  r2r_plan_cache& operator=(const r2r_plan_cache&) = delete;

 private:
  r2r_plan_cache() = default;
  ~r2r_plan_cache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void execute_r2r(int n, fftw_r2r_kind kind, std::span<double> in, std::span<double> out) {
  fftw_plan p = r2r_plan_cache::instance().get(n, kind);
  fftw_execute_r2r(p, in.data(), out.data());
}

}  // namespace hierarg::detail

namespace hierarg::transforms {

/// Grid values at x_1..x_{N-1} (entries 0 and N of `values` are ignored) to
/// sine coefficients a_0..a_N (a_0 = a_N = 0).
inline std::vector<double> sine_analysis(std::span<const double> values) {
  const std::size_t n_int = values.size() - 1;
  std::vector<double> coeffs(n_int + 1, 0.0);
  if (n_int < 2) return coeffs;
  const int n = static_cast<int>(n_int) - 1;
  std::vector<double> in(values.begin() + 1, values.end() - 1), out(in.size());
  detail::execute_r2r(n, FFTW_RODFT00, in, out);
  const double scale = 1.0 / static_cast<double>(n_int);
  for (std::size_t m = 1; m < n_int; ++m) coeffs[m] = out[m - 1] * scale;
  return coeffs;
}

inline std::vector<double> sine_synthesis(std::span<const double> coeffs) {
  const std::size_t n_int = coeffs.size() - 1;
  std::vector<double> values(n_int + 1, 0.0);
  if (n_int < 2) return values;
  const int n = static_cast<int>(n_int) - 1;
  std::vector<double> in(coeffs.begin() + 1, coeffs.end() - 1), out(in.size());
  detail::execute_r2r(n, FFTW_RODFT00, in, out);
  for (std::size_t j = 1; j < n_int; ++j) values[j] = 0.5 * out[j - 1];
  return values;
}

inline std::vector<double> cosine_analysis(std::span<const double> values) {
  const std::size_t n_int = values.size() - 1;
  std::vector<double> in(values.begin(), values.end()), out(values.size());
  detail::execute_r2r(static_cast<int>(n_int + 1), FFTW_REDFT00, in, out);
  const double scale = 1.0 / static_cast<double>(n_int);
  for (auto& c : out) c *= scale;
  out.front() *= 0.5;
  out.back() *= 0.5;
  return out;
}

inline std::vector<double> cosine_synthesis(std::span<const double> coeffs) {
  const std::size_t n_int = coeffs.size() - 1;
  std::vector<double> in(coeffs.begin(), coeffs.end()), out(coeffs.size());
  in.front() *= 2.0;
  in.back() *= 2.0;
  detail::execute_r2r(static_cast<int>(n_int + 1), FFTW_REDFT00, in, out);
  for (auto& v : out) v *= 0.5;
  return out;
}

/// Resample coefficient vector `coeffs` (length N+1) onto a grid with M
/// intervals; modes ≥ M are dropped, missing modes are zero.
inline std::vector<double> resize_modes(std::span<const double> coeffs, std::size_t m_intervals) {
  std::vector<double> out(m_intervals + 1, 0.0);
  const std::size_t keep = std::min(coeffs.size(), m_intervals);
  for (std::size_t k = 0; k < keep; ++k) out[k] = coeffs[k];
  return out;
}

}  // namespace hierarg::transforms
