#pragma once

// Block-spin RG map on single-site charge activities λ(q) and its Fourier
// (sine-Gordon) form λ̂(φ) = Σ λ(q) e^{iqφ}; iterating with L = e^{t/n}
// approaches the continuum flow as n → ∞.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hierarg/error.hpp"
#include "hierarg/grid_function.hpp"
#include "hierarg/io.hpp"
#include "hierarg/rg_flow.hpp"
#include "hierarg/transforms.hpp"
#include "json.hpp"

namespace hierarg::discrete {

inline constexpr std::size_t default_charge_cutoff = 64;
inline constexpr std::size_t default_fourier_points = 512;
inline constexpr double tail_tolerance = 1e-14;
inline constexpr double resummation_tolerance = 1e-10;

inline double alpha_from_beta(double beta) { return beta / (4.0 * std::numbers::pi); }

/// λ(q) for q = −Q..Q, stored at index q + Q.
struct ChargeActivity {
  std::size_t Q = 0;
  std::vector<double> lambda;
  double beta = 0.0;

  double at(long q) const {
    const long Ql = static_cast<long>(Q);
    return q < -Ql || q > Ql ? 0.0 : lambda[static_cast<std::size_t>(q + Ql)];
  }
};

/// λ̂ sampled at φ_m = −π + 2πm/M, m = 0..M−1.
struct FourierActivity {
  std::vector<double> values;
  // Diagnostics of the step that produced this activity.
  double tail_mass = 0.0;
  double l1_norm = 1.0;

  std::size_t size() const noexcept { return values.size(); }
  static double phi(std::size_t m, std::size_t M) {
    return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(M);
  }
};

enum class ActivityKind { bessel, hardcore };

inline const char* to_string(ActivityKind k) { return k == ActivityKind::bessel ? "bessel" : "hardcore"; }

/// I_q(x) by its ascending series; at least 30 terms.
inline double bessel_i(std::size_t q, double x) {
  const double h = 0.5 * x;
  double term = 1.0;
  for (std::size_t i = 1; i <= q; ++i) term *= h / static_cast<double>(i);
  double sum = term;
  const double h2 = h * h;
  for (std::size_t k = 0; k < 30 || term > 1e-18 * sum; ++k) {
    term *= h2 / (static_cast<double>(k + 1) * static_cast<double>(k + 1 + q));
    sum += term;
    if (k > 10000) break;
  }
  return sum;
}

inline double l1_norm(const ChargeActivity& a) {
  double s = 0.0;
  for (double v : a.lambda) s += std::abs(v);
  return s;
}

inline ChargeActivity make_activity(ActivityKind kind, double z, std::size_t Q, double beta) {
  if (!(z > 0)) throw domain_error("activity z must be positive");
  if (Q < 8) throw sizing_error("charge cutoff Q must be at least 8");
  if (!(beta > 0)) throw domain_error("beta must be positive");
  ChargeActivity a{Q, std::vector<double>(2 * Q + 1, 0.0), beta};
  if (kind == ActivityKind::hardcore) {
    a.lambda[Q] = 1.0;
    a.lambda[Q - 1] = a.lambda[Q + 1] = z;
  } else {
    for (std::size_t q = 0; q <= Q; ++q) a.lambda[Q - q] = a.lambda[Q + q] = bessel_i(q, 2.0 * z);
  }
  double sum = 0.0;
  for (double v : a.lambda) sum += v;
  for (double& v : a.lambda) v /= sum;
  if (a.lambda.back() > tail_tolerance)
    throw truncation_error("activity at |q| = Q is " + io::format_number(a.lambda.back()) +
                           "; increase Q");
  return a;
}

inline FourierActivity to_fourier(const ChargeActivity& a, std::size_t M = default_fourier_points) {
  if (M < 8 || M % 2 != 0) throw sizing_error("Fourier grid size M must be even and >= 8");
  if (2 * a.Q > M) throw sizing_error("Fourier grid too coarse for charge cutoff Q");
  FourierActivity f;
  f.values.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double phi = FourierActivity::phi(m, M);
    double s = a.at(0);
    for (std::size_t q = a.Q; q >= 1; --q) s += 2.0 * a.at(static_cast<long>(q)) * std::cos(static_cast<double>(q) * phi);
    f.values[m] = s;
  }
  f.l1_norm = l1_norm(a);
  return f;
}

namespace detail {

/// Values on [0, π]: φ = 2πk/M, k = 0..M/2 (the last is φ = ±π).
inline std::vector<double> half_grid(const FourierActivity& a) {
  const std::size_t M = a.size();
  std::vector<double> h(M / 2 + 1);
  for (std::size_t k = 0; k < M / 2; ++k) h[k] = a.values[M / 2 + k];
  h[M / 2] = a.values[0];
  return h;
}

inline FourierActivity from_half_grid(const std::vector<double>& h) {
  const std::size_t M = 2 * (h.size() - 1);
  FourierActivity a;
  a.values.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t k = m >= M / 2 ? m - M / 2 : M / 2 - m;
    a.values[m] = h[k];
  }
  return a;
}

/// Cosine coefficients c_0..c_{M/2} of an even function on the half grid;
/// λ(0) = c_0, λ(±q) = c_q / 2 (the Nyquist mode counts once).
inline std::vector<double> charge_coefficients(const std::vector<double>& h) {
  return transforms::cosine_analysis(h);
}

inline double charge_from_coefficient(const std::vector<double>& c, std::size_t q) {
  if (q == 0) return c[0];
  return q + 1 == c.size() ? c[q] : 0.5 * c[q];
}

}  // namespace detail

inline ChargeActivity to_charges(const FourierActivity& a, double beta, std::size_t Q = default_charge_cutoff) {
  const auto c = detail::charge_coefficients(detail::half_grid(a));
  if (Q + 1 > c.size()) throw sizing_error("charge cutoff Q exceeds the Fourier resolution");
  ChargeActivity out{Q, std::vector<double>(2 * Q + 1, 0.0), beta};
  for (std::size_t q = 0; q <= Q; ++q)
    out.lambda[Q - q] = out.lambda[Q + q] = detail::charge_from_coefficient(c, q);
  return out;
}

struct ThetaValue {
  double value = 0.0;
  double image_sum = 0.0;
  double discrepancy = 0.0;
};

/// ϑ(φ) = Σ_q L^{−βq²/4π} e^{iqφ}, cross-checked against its Gaussian image
/// sum 2π (β ln L)^{−1/2} Σ_n exp(−π(φ + 2πn)²/(β ln L)).
inline ThetaValue theta_kernel(double phi, double beta, double L) {
  if (!(L > 1)) throw domain_error("theta kernel needs L > 1");
  if (!(beta > 0)) throw domain_error("beta must be positive");
  const double pi = std::numbers::pi;
  const double s = beta * std::log(L);
  const double a = s / (4.0 * pi);
  ThetaValue r;
  double charge = 1.0;
  for (long q = 1;; ++q) {
    const double w = std::exp(-a * static_cast<double>(q * q));
    charge += 2.0 * w * std::cos(static_cast<double>(q) * phi);
    if (w < 1e-18) break;
    if (q > 10'000'000) throw resummation_error("charge sum of the theta kernel does not converge");
  }
  const double centered = std::remainder(phi, 2.0 * pi);
  double image = 0.0;
  for (long n = 0;; ++n) {
    double term = std::exp(-pi * std::pow(centered + 2.0 * pi * static_cast<double>(n), 2) / s);
    if (n > 0) term += std::exp(-pi * std::pow(centered - 2.0 * pi * static_cast<double>(n), 2) / s);
    image += term;
    if (n > 0 && term <= 1e-18 * image) break;
    if (n > 10'000'000) throw resummation_error("image sum of the theta kernel does not converge");
  }
  image *= 2.0 * pi / std::sqrt(s);
  r.value = charge;
  r.image_sum = image;
  r.discrepancy = std::abs(charge - image) / std::max(1.0, std::abs(charge));
  if (r.discrepancy > resummation_tolerance)
    throw resummation_error("theta kernel representations differ by " + io::format_number(r.discrepancy));
  return r;
}

/// One block-spin step in Fourier form: λ̂ ← ν ∗ λ̂^{L²}, then Σλ = 1.
/// Charges beyond |q| = Q must carry less than 1e-14 of the mass; they are dropped.
inline FourierActivity rg_step(const FourierActivity& a, double beta, double L, std::size_t Q = default_charge_cutoff) {
  if (!(L > 1)) throw domain_error("block size L must exceed 1");
  if (!(beta > 0)) throw domain_error("beta must be positive");
  if (a.size() < 8 || a.size() % 2 != 0) throw sizing_error("Fourier grid size M must be even and >= 8");
  auto h = detail::half_grid(a);
  const double power = L * L;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(h[k] > 0))
      throw domain_error("activity transform is not positive at phi = " +
                         io::format_number(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(a.size())));
    h[k] = std::pow(h[k], power);
  }
  auto c = detail::charge_coefficients(h);
  if (Q + 1 > c.size()) throw sizing_error("charge cutoff Q exceeds the Fourier resolution");
  const double decay = beta * std::log(L) / (4.0 * std::numbers::pi);
  double total = 0.0, tail = 0.0, l1 = 0.0;
  for (std::size_t q = 0; q < c.size(); ++q) {
    c[q] *= std::exp(-decay * static_cast<double>(q * q));
    const double weight = detail::charge_from_coefficient(c, q) * (q == 0 ? 1.0 : 2.0);
    total += weight;
    l1 += std::abs(weight);
    if (q > Q) {
      tail += std::abs(weight);
      c[q] = 0.0;
    }
  }
  if (!(total > 0)) throw domain_error("activity lost its normalization");
  if (tail > tail_tolerance * total)
    throw truncation_error("charge mass beyond |q| = " + std::to_string(Q) + " is " +
                           io::format_number(tail / total) + "; increase Q or M");
  for (auto& v : c) v /= total - tail;
  auto out = detail::from_half_grid(transforms::cosine_synthesis(c));
  for (std::size_t k = 0; k < out.size(); ++k)
    if (!(out.values[k] > 0)) throw domain_error("rg_step produced a non-positive activity transform");
  out.tail_mass = tail / total;
  out.l1_norm = l1 / total;
  return out;
}

/// u(x) = −ln λ̂(x) + ln λ̂(0) on x_k = πk/(M/2), as an even grid function.
inline GridFunction effective_potential(const FourierActivity& a) {
  auto h = detail::half_grid(a);
  const double origin = std::log(h[0]);
  for (auto& v : h) v = origin - std::log(v);
  return transform(h, Parity::even);
}

/// n steps with L = e^{t/n}; returns the effective potential normalized to u(0) = 0.
inline GridFunction iterate_to_time(const FourierActivity& a0, double beta, double t, std::size_t n,
                                    std::size_t Q = default_charge_cutoff) {
  if (n < 1) throw domain_error("iterate_to_time needs n >= 1");
  if (t < 0) throw domain_error("scale time t must be non-negative");
  FourierActivity a = a0;
  if (t > 0) {
    const double L = std::exp(t / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) a = rg_step(a, beta, L, Q);
  }
  return effective_potential(a);
}

struct ComparisonRow {
  std::size_t n = 0;
  double L = 1.0;
  double sup_gap = 0.0;
  std::optional<double> order_estimate;
};

struct CompareOptions {
  ActivityKind kind = ActivityKind::hardcore;
  std::size_t M = default_fourier_points;
  std::size_t Q = default_charge_cutoff;
  double dt = 1e-4;
};

struct ComparisonTable {
  double beta = 0.0;
  double z = 0.0;
  double t = 0.0;
  CompareOptions options;
  std::vector<ComparisonRow> rows;
  bool converging = true;
};

/// Sup-norm gaps between the discrete iteration and the continuum ũ-flow at
/// α = β/4π from the same initial potential.
inline ComparisonTable continuum_compare(double beta, double z, double t, const std::vector<std::size_t>& n_list,
                                         const CompareOptions& opt = {}) {
  if (n_list.empty()) throw domain_error("continuum_compare needs at least one n");
  if (!std::is_sorted(n_list.begin(), n_list.end()) ||
      std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
    throw domain_error("n_list must be strictly ascending");
  const auto a0 = to_fourier(make_activity(opt.kind, z, opt.Q, beta), opt.M);
  const GridFunction u0 = effective_potential(a0);

  GridFunction reference = u0;
  if (t > 0) {
    flow::FlowConfig cfg;
    cfg.alpha = alpha_from_beta(beta);
    cfg.dt = opt.dt;
    cfg.stride = flow::step_count(t, opt.dt);
    reference = flow::evolve_u_tilde(u0, cfg, t).final_state().v;
  }

  ComparisonTable table{beta, z, t, opt, {}, true};
  for (std::size_t n : n_list) {
    const auto un = iterate_to_time(a0, beta, t, n, opt.Q);
    double gap = 0.0;
    for (std::size_t k = 0; k < un.values().size(); ++k)
      gap = std::max(gap, std::abs(un.values()[k] - reference.values()[k]));
    ComparisonRow row{n, std::exp(t / static_cast<double>(n)), gap, std::nullopt};
    if (!table.rows.empty()) {
      const auto& prev = table.rows.back();
      if (prev.sup_gap > 0 && gap > 0)
        row.order_estimate = std::log(prev.sup_gap / gap) / std::log(static_cast<double>(n) / static_cast<double>(prev.n));
      if (gap >= prev.sup_gap && prev.sup_gap > 0) table.converging = false;
    }
    table.rows.push_back(row);
  }
  return table;
}

inline void require_convergence(const ComparisonTable& table) {
  if (table.converging) return;
  std::string msg = "discrete iteration does not approach the continuum flow: gaps";
  for (const auto& r : table.rows) msg += " " + io::format_number(r.sup_gap);
  throw convergence_error(msg);
}

inline void write_csv(std::ostream& out, const ComparisonTable& table) {
  io::csv_writer w(out);
  w.header({"n", "L", "sup_gap", "order_estimate"});
  for (const auto& r : table.rows) {
    if (r.order_estimate)
      w.row(r.n, r.L, r.sup_gap, *r.order_estimate);
    else
      w.row(r.n, r.L, r.sup_gap, "");
  }
}

inline nlohmann::ordered_json to_json(const ChargeActivity& a) {
  nlohmann::ordered_json j;
  j["beta"] = a.beta;
  j["Q"] = a.Q;
  j["lambda"] = a.lambda;
  return j;
}

inline ChargeActivity charge_activity_from_json(const nlohmann::json& j) {
  ChargeActivity a{j.at("Q").get<std::size_t>(), j.at("lambda").get<std::vector<double>>(), j.at("beta").get<double>()};
  if (a.lambda.size() != 2 * a.Q + 1) throw sizing_error("activity length does not match Q");
  if (!(a.beta > 0)) throw domain_error("beta must be positive");
  return a;
}

}  // namespace hierarg::discrete
