#pragma once

// Odd/even 2π-periodic real functions on (−π, π), stored as sine or cosine
// coefficients together with their samples on x_k = πk/N, k = 0..N.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hierarg/error.hpp"
#include "hierarg/io.hpp"
#include "hierarg/transforms.hpp"
#include "json.hpp"

namespace hierarg {

enum class Parity { odd, even };

enum class NormKind { L2, H1 };

inline constexpr std::size_t default_grid_size = 256;

inline const char* to_string(Parity p) { return p == Parity::odd ? "odd" : "even"; }

inline Parity flip(Parity p) { return p == Parity::odd ? Parity::even : Parity::odd; }

inline bool is_power_of_two(std::size_t n) { return n >= 4 && (n & (n - 1)) == 0; }

inline void require_grid_size(std::size_t n) {
  if (!is_power_of_two(n))
    throw sizing_error("grid size N = " + std::to_string(n) + " is not a power of two >= 4");
}

inline double grid_point(std::size_t k, std::size_t n) {
  return std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
}

class GridFunction {
 public:
  GridFunction() : GridFunction(Parity::odd, std::vector<double>(default_grid_size + 1, 0.0)) {}

  /// `coeffs` is indexed by wavenumber, length N+1.
  GridFunction(Parity parity, std::vector<double> coeffs) : parity_(parity), coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw sizing_error("empty coefficient sequence");
    require_grid_size(coeffs_.size() - 1);
    if (parity_ == Parity::odd) {
      coeffs_.front() = 0.0;
      coeffs_.back() = 0.0;
      values_ = transforms::sine_synthesis(coeffs_);
    } else {
      values_ = transforms::cosine_synthesis(coeffs_);
    }
  }

  static GridFunction zero(Parity parity, std::size_t n = default_grid_size) {
    require_grid_size(n);
    return GridFunction(parity, std::vector<double>(n + 1, 0.0));
  }

  Parity parity() const noexcept { return parity_; }
  std::size_t n_modes() const noexcept { return coeffs_.size() - 1; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::span<const double> values() const noexcept { return values_; }
  double coeff(std::size_t m) const { return m < coeffs_.size() ? coeffs_[m] : 0.0; }
  double x(std::size_t k) const { return grid_point(k, n_modes()); }

  /// Series evaluation at an arbitrary point (Clenshaw recurrence).
  double evaluate(double x) const {
    const double two_cos = 2.0 * std::cos(x);
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t m = coeffs_.size() - 1; m >= 1; --m) {
      const double b0 = coeffs_[m] + two_cos * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    if (parity_ == Parity::odd) return b1 * std::sin(x);
    return coeffs_[0] + b1 * std::cos(x) - b2;
  }

  double max_abs_value() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  GridFunction& operator+=(const GridFunction& o) { return combine(o, 1.0); }
  GridFunction& operator-=(const GridFunction& o) { return combine(o, -1.0); }
  GridFunction& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

 private:
  GridFunction& combine(const GridFunction& o, double sign) {
    if (o.parity_ != parity_ || o.coeffs_.size() != coeffs_.size())
      throw sizing_error("grid functions of different parity or size");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += sign * o.coeffs_[i];
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += sign * o.values_[i];
    return *this;
  }

  Parity parity_;
  std::vector<double> coeffs_;
  std::vector<double> values_;
};

/// Samples on x_k = πk/N (length N+1) to spectral coefficients.
inline GridFunction transform(std::span<const double> values, Parity parity) {
  if (values.empty()) throw sizing_error("empty sample sequence");
  require_grid_size(values.size() - 1);
  auto coeffs = parity == Parity::odd ? transforms::sine_analysis(values)
                                      : transforms::cosine_analysis(values);
  return GridFunction(parity, std::move(coeffs));
}

inline std::vector<double> inverse_transform(const GridFunction& f) {
  return {f.values().begin(), f.values().end()};
}

template <class F>
GridFunction sample(Parity parity, std::size_t n, F&& f) {
  require_grid_size(n);
  std::vector<double> values(n + 1);
  for (std::size_t k = 0; k <= n; ++k) values[k] = f(grid_point(k, n));
  if (parity == Parity::odd) values.front() = values.back() = 0.0;
  return transform(values, parity);
}

/// Changes the number of modes; truncates or zero-pads the spectrum.
inline GridFunction resample(const GridFunction& f, std::size_t n) {
  require_grid_size(n);
  return GridFunction(f.parity(), transforms::resize_modes(f.coeffs(), n));
}

inline GridFunction differentiate(const GridFunction& f) {
  const std::size_t n = f.n_modes();
  std::vector<double> out(n + 1, 0.0);
  const auto c = f.coeffs();
  if (f.parity() == Parity::odd) {
    for (std::size_t m = 1; m < n; ++m) out[m] = static_cast<double>(m) * c[m];
  } else {
    // sin(Nx) vanishes on the grid, so the Nyquist cosine mode is dropped.
    for (std::size_t m = 1; m < n; ++m) out[m] = -static_cast<double>(m) * c[m];
  }
  return GridFunction(flip(f.parity()), std::move(out));
}

/// ũ(x) = ∫₀ˣ v(y) dy for odd v; the constant mode enforces ũ(0) = 0.
inline GridFunction integrate_from_zero(const GridFunction& v) {
  if (v.parity() != Parity::odd) throw domain_error("integrate_from_zero expects an odd function");
  const std::size_t n = v.n_modes();
  std::vector<double> out(n + 1, 0.0);
  const auto a = v.coeffs();
  double constant = 0.0;
  for (std::size_t m = n - 1; m >= 1; --m) {
    const double c = a[m] / static_cast<double>(m);
    out[m] = -c;
    constant += c;
  }
  out[0] = constant;
  return GridFunction(Parity::even, std::move(out));
}

inline double norm(const GridFunction& f, NormKind kind) {
  if (kind == NormKind::H1) return norm(differentiate(f), NormKind::L2);
  const auto c = f.coeffs();
  double sum = 0.0;
  for (std::size_t m = c.size() - 1; m >= 1; --m) sum += c[m] * c[m];
  sum *= std::numbers::pi;
  if (f.parity() == Parity::even) sum += 2.0 * std::numbers::pi * c[0] * c[0];
  return std::sqrt(sum);
}

/// Largest coefficient magnitude in the top quarter of the spectrum, relative
/// to the largest overall; a resolution indicator.
inline double spectral_tail(const GridFunction& f) {
  const auto c = f.coeffs();
  double all = 0.0, tail = 0.0;
  for (std::size_t m = 0; m < c.size(); ++m) {
    all = std::max(all, std::abs(c[m]));
    if (4 * m >= 3 * f.n_modes()) tail = std::max(tail, std::abs(c[m]));
  }
  return all > 0 ? tail / all : 0.0;
}

/// ∫_{−π}^{π} g for g even about 0, sampled on x_k = πk/N (trapezoid, spectrally
/// accurate for smooth periodic g).
inline double symmetric_quadrature(std::span<const double> samples) {
  const std::size_t n = samples.size() - 1;
  double s = 0.5 * (samples.front() + samples.back());
  for (std::size_t k = 1; k < n; ++k) s += samples[k];
  return 2.0 * s * std::numbers::pi / static_cast<double>(n);
}

/// Dealiased pointwise product on a 3/2-padded grid, truncated back to N modes.
inline GridFunction multiply(const GridFunction& f, const GridFunction& g) {
  if (f.n_modes() != g.n_modes()) throw sizing_error("multiply: grid sizes differ");
  const std::size_t n = f.n_modes();
  const std::size_t padded = 3 * n / 2;
  auto synth = [padded](const GridFunction& h) {
    auto c = transforms::resize_modes(h.coeffs(), padded);
    return h.parity() == Parity::odd ? transforms::sine_synthesis(c) : transforms::cosine_synthesis(c);
  };
  auto fv = synth(f);
  const auto gv = synth(g);
  for (std::size_t k = 0; k < fv.size(); ++k) fv[k] *= gv[k];
  const Parity result = f.parity() == g.parity() ? Parity::even : Parity::odd;
  auto c = result == Parity::odd ? transforms::sine_analysis(fv) : transforms::cosine_analysis(fv);
  return GridFunction(result, transforms::resize_modes(c, n));
}

inline nlohmann::ordered_json to_json(const GridFunction& f) {
  nlohmann::ordered_json j;
  j["parity"] = to_string(f.parity());
  j["n_modes"] = f.n_modes();
  j["coeffs"] = std::vector<double>(f.coeffs().begin(), f.coeffs().end());
  return j;
}

inline GridFunction grid_function_from_json(const nlohmann::json& j) {
  const std::string parity = j.at("parity").get<std::string>();
  if (parity != "odd" && parity != "even") throw domain_error("unknown parity '" + parity + "'");
  auto coeffs = j.at("coeffs").get<std::vector<double>>();
  const auto n = j.at("n_modes").get<std::size_t>();
  if (coeffs.size() != n + 1) throw sizing_error("coefficient count does not match n_modes");
  return GridFunction(parity == "odd" ? Parity::odd : Parity::even, std::move(coeffs));
}

inline void write_csv(std::ostream& out, const GridFunction& f, std::string_view column = "f") {
  io::csv_writer w(out);
  w.header({"x", column});
  for (std::size_t k = 0; k <= f.n_modes(); ++k) w.row(f.x(k), f.values()[k]);
}

}  // namespace hierarg
