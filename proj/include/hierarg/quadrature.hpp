#pragma once

// Tanh-sinh (double-exponential) quadrature. The integrand receives the
// abscissa together with its distances to both endpoints, which stay accurate
// where x itself has already rounded onto a or b.

#include <cmath>
#include <numbers>

namespace hierarg::quadrature {

struct result {
  double value = 0.0;
  double error = 0.0;
  int level = 0;
};

/// f(x, x − a, b − x). Halves the step until two successive levels agree to
/// `tol` (absolute) or `max_level` is reached.
template <class F>
result tanh_sinh(F&& f, double a, double b, double tol = 1e-14, int max_level = 10) {
  constexpr double u_max = 4.0;
  const double half = 0.5 * (b - a);
  const double width = b - a;
  auto node = [&](double u) {
    const double s = 0.5 * std::numbers::pi * std::sinh(u);
    const double cs = std::cosh(s);
    const double w = half * 0.5 * std::numbers::pi * std::cosh(u) / (cs * cs);
    const double da = width / (1.0 + std::exp(-2.0 * s));
    const double db = width / (1.0 + std::exp(2.0 * s));
    const double x = s < 0 ? a + da : b - db;
    return w * f(x, da, db);
  };

  double h = 0.5;
  double sum = node(0.0);
  for (double u = h; u <= u_max; u += h) sum += node(u) + node(-u);
  double estimate = h * sum;
  result r{estimate, std::abs(estimate), 0};
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    for (double u = h; u <= u_max; u += 2.0 * h) sum += node(u) + node(-u);
    const double next = h * sum;
    r = {next, std::abs(next - estimate), level};
    if (level >= 3 && r.error <= tol) break;
    estimate = next;
  }
  return r;
}

}  // namespace hierarg::quadrature
