#pragma once

// Period of the (w, p) phase system by direct RK4 integration with event
// location on p = 0. Independent of the q-variable quadrature.

#include <array>
#include <cmath>

namespace oracles {

inline std::array<double, 2> phase_rk4(double alpha, std::array<double, 2> y, double h) {
  auto f = [alpha](const std::array<double, 2>& s) {
    return std::array<double, 2>{2.0 * s[1] * (s[0] - 1.0 / alpha), s[0]};
  };
  auto add = [](std::array<double, 2> a, double c, const std::array<double, 2>& b) {
    a[0] += c * b[0];
    a[1] += c * b[1];
    return a;
  };
  auto k1 = f(y), k2 = f(add(y, h / 2, k1)), k3 = f(add(y, h / 2, k2)), k4 = f(add(y, h, k3));
  return {y[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
          y[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

/// Twice the first return time to p = 0 from (w0, 0), w0 > 0.
inline double return_time_period(double alpha, double w0, double h = 2e-5) {
  std::array<double, 2> y{w0, 0.0};
  double x = 0.0;
  for (;;) {
    auto next = phase_rk4(alpha, y, h);
    if (x > 0 && next[1] < 0 && y[1] >= 0) break;
    y = next;
    x += h;
  }
  // Newton on the crossing using p′ = w.
  for (int it = 0; it < 8; ++it) {
    const double dx = -y[1] / y[0];
    y = phase_rk4(alpha, y, dx);
    x += dx;
  }
  return 2.0 * x;
}

}  // namespace oracles
