#pragma once

// Sine-Galerkin form of v_t = α v_xx + 2v − α (v²)_x with the quadratic term
// formed by direct convolution of the coefficients (no transforms).

#include <cmath>
#include <cstdlib>
#include <vector>

namespace oracles {

/// Coefficients a[0..n] (a[0] = a[n] = 0), modes 1..n−1 retained.
inline std::vector<double> galerkin_rhs(const std::vector<double>& a, double alpha) {
  const int n = static_cast<int>(a.size()) - 1;
  std::vector<double> d(a.size(), 0.0);  // sine coefficients of (v²)_x
  for (int p = 1; p < n; ++p) {
    if (a[p] == 0.0) continue;
    for (int q = 1; q < n; ++q) {
      const double c = 0.5 * a[p] * a[q];
      const int diff = std::abs(p - q), sum = p + q;
      if (diff > 0) d[diff] -= c * diff;
      if (sum < n) d[sum] += c * sum;
    }
  }
  std::vector<double> out(a.size(), 0.0);
  for (int m = 1; m < n; ++m) out[m] = -(alpha * m * m - 2.0) * a[m] - alpha * d[m];
  return out;
}

inline std::vector<double> galerkin_euler(std::vector<double> a, double alpha, double t, long steps) {
  const double h = t / static_cast<double>(steps);
  for (long s = 0; s < steps; ++s) {
    const auto f = galerkin_rhs(a, alpha);
    for (std::size_t m = 0; m < a.size(); ++m) a[m] += h * f[m];
  }
  return a;
}

inline std::vector<double> galerkin_rk4(std::vector<double> a, double alpha, double t, long steps) {
  const double h = t / static_cast<double>(steps);
  auto axpy = [](const std::vector<double>& y, double s, const std::vector<double>& k) {
    auto r = y;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += s * k[i];
    return r;
  };
  for (long s = 0; s < steps; ++s) {
    const auto k1 = galerkin_rhs(a, alpha);
    const auto k2 = galerkin_rhs(axpy(a, h / 2, k1), alpha);
    const auto k3 = galerkin_rhs(axpy(a, h / 2, k2), alpha);
    const auto k4 = galerkin_rhs(axpy(a, h, k3), alpha);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return a;
}

}  // namespace oracles
