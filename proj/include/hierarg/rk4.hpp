#pragma once

#include <array>
#include <cstddef>

namespace hierarg {

template <std::size_t K>
using state_vector = std::array<double, K>;

/// Increment y(x + h) − y(x) of one classical Runge–Kutta step of y' = f(x, y).
template <std::size_t K, class F>
state_vector<K> rk4_increment(F&& f, double x, const state_vector<K>& y, double h) {
  auto axpy = [](const state_vector<K>& a, double s, const state_vector<K>& b) {
    state_vector<K> out;
    for (std::size_t i = 0; i < K; ++i) out[i] = a[i] + s * b[i];
    return out;
  };
  const auto k1 = f(x, y);
  const auto k2 = f(x + 0.5 * h, axpy(y, 0.5 * h, k1));
  const auto k3 = f(x + 0.5 * h, axpy(y, 0.5 * h, k2));
  const auto k4 = f(x + h, axpy(y, h, k3));
  state_vector<K> out;
  for (std::size_t i = 0; i < K; ++i) out[i] = h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <std::size_t K, class F>
state_vector<K> rk4_step(F&& f, double x, const state_vector<K>& y, double h) {
  auto d = rk4_increment<K>(f, x, y, h);
  for (std::size_t i = 0; i < K; ++i) d[i] += y[i];
  return d;
}

/// RK4 with Kahan-compensated accumulation of the state, for long runs of
/// small steps where plain summation loses the increments to rounding.
template <std::size_t K>
class compensated_rk4 {
 public:
  explicit compensated_rk4(const state_vector<K>& y0) : y_(y0) { carry_.fill(0.0); }

  template <class F>
  void step(F&& f, double x, double h) {
    const auto d = rk4_increment<K>(f, x, y_, h);
    for (std::size_t i = 0; i < K; ++i) {
      const double add = d[i] - carry_[i];
      const double sum = y_[i] + add;
      carry_[i] = (sum - y_[i]) - add;
      y_[i] = sum;
    }
  }

  const state_vector<K>& state() const noexcept { return y_; }

 private:
  state_vector<K> y_;
  state_vector<K> carry_;
};

}  // namespace hierarg
