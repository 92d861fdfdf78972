#pragma once

// Stationary solutions of α(ψ″ − 2ψψ′) + 2ψ = 0 through the phase system
// w′ = 2p(w − α⁻¹), p′ = w (ψ = p, ψ′ = w). Closed orbits are handled in the
// variable q = ln(1 − αw), where H(q, p) = αp² + v(q) with v(q) = e^q − q − 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hierarg/error.hpp"
#include "hierarg/grid_function.hpp"
#include "hierarg/quadrature.hpp"
#include "hierarg/rk4.hpp"

namespace hierarg::equilibria {

namespace detail {

/// expm1(d) − d without cancellation.
inline double expm1_minus_linear(double d) {
  if (std::abs(d) > 0.5) return std::expm1(d) - d;
  double term = d * d / 2.0, sum = term;
  for (int k = 3; k < 30 && std::abs(term) > 1e-18 * std::abs(sum); ++k) {
    term *= d / k;
    sum += term;
  }
  return sum;
}

/// v(b + d) − v(b), accurate for small d even when b + d rounds to b.
inline double potential_increment(double b, double d) {
  return d * std::expm1(b) + std::exp(b) * expm1_minus_linear(d);
}

}  // namespace detail

inline double potential_v(double q) { return detail::expm1_minus_linear(q); }

inline double potential_v_prime(double q) { return std::expm1(q); }

/// q = ln(1 − α w); only defined for α w < 1.
inline double q_from_w(double alpha, double w) {
  if (alpha * w >= 1.0) throw unbounded_orbit_error("alpha*w0 >= 1: orbit is not closed");
  return std::log1p(-alpha * w);
}

inline double w_from_q(double alpha, double q) { return -std::expm1(q) / alpha; }

inline double energy_from_w0(double alpha, double w0) {
  if (!(alpha > 0)) throw domain_error("alpha must be positive");
  return potential_v(q_from_w(alpha, w0));
}

struct TurningPoints {
  double q_minus = 0.0;
  double q_plus = 0.0;
  bool degenerate = false;
};

namespace detail {

/// Root of v(q) = E in [lo, hi] where v − E changes sign; Newton with a
/// bisection fallback.
inline double solve_potential(double energy, double lo, double hi) {
  double q = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = potential_v(q) - energy;
    if (f == 0.0) return q;
    const bool rising = potential_v(hi) > potential_v(lo);
    if ((f > 0) == rising) hi = q; else lo = q;
    const double slope = potential_v_prime(q);
    double next = slope != 0.0 ? q - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - q);
    q = next;
    if (step <= 1e-15 * std::max(1.0, std::abs(q)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(q))) break;
  }
  return q;
}

}  // namespace detail

inline TurningPoints turning_points(double energy) {
  if (!(energy > 0)) return {0.0, 0.0, true};
  // v(−E−1) ≥ E and v(q) ≥ q²/2 for q ≥ 0 bracket both roots.
  const double qm = detail::solve_potential(energy, -energy - 1.0, 0.0);
  const double qp = detail::solve_potential(energy, 0.0, std::sqrt(2.0 * energy) + 1e-300);
  return {qm, qp, false};
}

struct PeriodResult {
  double T = 0.0;
  double E = 0.0;
  double q_minus = 0.0;
  double q_plus = 0.0;
  double quadrature_error = 0.0;
  bool limit_value = false;  // w0 = 0: linearized period
};

inline double linearized_period(double alpha) { return 2.0 * std::numbers::pi * std::sqrt(alpha / 2.0); }

/// T̃ = ∫_{q₋}^{q₊} dq / √(v(q₊) − v(q)), split at q = 0. The turning points
/// are taken as exact, so the radicand is a difference of potentials.
inline PeriodResult reduced_period(double q_minus, double q_plus) {
  auto left = quadrature::tanh_sinh(
      [&](double, double da, double) {
        return 1.0 / std::sqrt(detail::potential_increment(q_minus + da, -da));
      },
      q_minus, 0.0);
  auto right = quadrature::tanh_sinh(
      [&](double, double, double db) {
        return 1.0 / std::sqrt(detail::potential_increment(q_plus - db, db));
      },
      0.0, q_plus);
  PeriodResult r;
  r.T = left.value + right.value;
  r.quadrature_error = left.error + right.error;
  r.q_minus = q_minus;
  r.q_plus = q_plus;
  r.E = potential_v(q_minus);
  return r;
}

inline PeriodResult reduced_period_from_energy(double energy) {
  const auto tp = turning_points(energy);
  if (tp.degenerate) {
    PeriodResult r;
    r.T = linearized_period(1.0);
    r.limit_value = true;
    return r;
  }
  auto r = reduced_period(tp.q_minus, tp.q_plus);
  r.E = energy;
  return r;
}

struct OrbitQuery {
  double alpha = 1.0;
  double w0 = 0.0;
};

/// T(α, w0) = √α T̃(E). Negative w0 labels the same orbit from its other
/// turning point.
inline PeriodResult period(const OrbitQuery& query) {
  const double alpha = query.alpha;
  if (!(alpha > 0)) throw domain_error("alpha must be positive");
  if (query.w0 == 0.0) {
    PeriodResult r;
    r.T = linearized_period(alpha);
    r.limit_value = true;
    return r;
  }
  const double q0 = q_from_w(alpha, query.w0);
  const double energy = potential_v(q0);
  const auto tp = turning_points(energy);
  const double qm = q0 < 0 ? q0 : tp.q_minus;
  const double qp = q0 > 0 ? q0 : tp.q_plus;
  auto r = reduced_period(qm, qp);
  const double scale = std::sqrt(alpha);
  r.T *= scale;
  r.quadrature_error *= scale;
  r.E = energy;
  return r;
}

enum class OrbitClass { point, closed, separatrix, unbounded };

inline const char* to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::point: return "point";
    case OrbitClass::closed: return "closed";
    case OrbitClass::separatrix: return "separatrix";
    case OrbitClass::unbounded: return "unbounded";
  }
  return "?";
}

inline OrbitClass classify_orbit(const OrbitQuery& query) {
  if (query.w0 < 0) throw domain_error("classify_orbit expects w0 >= 0");
  if (query.w0 == 0.0) return OrbitClass::point;
  const double s = query.alpha * query.w0;
  if (std::abs(s - 1.0) <= 1e-14) return OrbitClass::separatrix;
  return s < 1.0 ? OrbitClass::closed : OrbitClass::unbounded;
}

inline double branch_threshold(int j) { return 2.0 / (static_cast<double>(j) * j); }

struct BranchPoint {
  double alpha = 0.0;
  int j = 1;
  double w_hat = 0.0;
  double gap = 0.0;  // α⁻¹ − ŵ_j, computed as e^{q₋}/α
  double q_minus = 0.0;
  double q_plus = 0.0;
  double energy = 0.0;
  double period = 0.0;
};

/// Solves √α T̃(v(q₋)) = 2π/j for the left turning point. T̃ decreases
/// strictly in q₋ on (−∞, 0).
inline BranchPoint branch_point(double alpha, int j) {
  if (j < 1) throw domain_error("branch index j must be >= 1");
  if (!(alpha > 0)) throw domain_error("alpha must be positive");
  if (alpha >= branch_threshold(j))
    throw no_branch_error("no branch j = " + std::to_string(j) + " for alpha = " + std::to_string(alpha) +
                          " (threshold 2/j^2 = " + std::to_string(branch_threshold(j)) + ")");
  const double target = 2.0 * std::numbers::pi / (j * std::sqrt(alpha));
  auto reduced = [](double qm) {
    const double e = potential_v(qm);
    return reduced_period(qm, turning_points(e).q_plus).T;
  };
  double hi = 0.0;
  double lo = -1.0;
  while (reduced(lo) < target) {
    hi = lo;
    lo *= 2.0;
    if (lo < -1e6) throw convergence_error("branch root not bracketed");
  }
  double f_lo = reduced(lo) - target;
  double f_hi = hi == 0.0 ? linearized_period(1.0) - target : reduced(hi) - target;
  while (hi - lo > 1e-13 * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double f = reduced(mid) - target;
    if (f > 0) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
      f_hi = f;
    }
  }
  // Newton polish with the secant slope of the final bracket.
  double qm = 0.5 * (lo + hi);
  if (f_lo != f_hi) {
    const double s = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    if (s >= lo && s <= hi) qm = s;
  }
  BranchPoint b;
  b.alpha = alpha;
  b.j = j;
  b.q_minus = qm;
  b.energy = potential_v(qm);
  b.q_plus = turning_points(b.energy).q_plus;
  b.w_hat = w_from_q(alpha, qm);
  b.gap = std::exp(qm) / alpha;
  b.period = std::sqrt(alpha) * reduced_period(qm, b.q_plus).T;
  return b;
}

inline double w_hat(double alpha, int j) { return branch_point(alpha, j).w_hat; }

enum class Sign { plus, minus };

inline const char* to_string(Sign s) { return s == Sign::plus ? "plus" : "minus"; }

/// Right-hand side of the orbit equations in (q, p); Φ = ∫₀ˣ p is carried as a
/// third component for the weight p(x) = e^{−2Φ}.
struct OrbitField {
  double alpha;
  state_vector<3> operator()(double, const state_vector<3>& y) const {
    return {2.0 * y[1], -std::expm1(y[0]) / alpha, y[1]};
  }
};

struct EquilibriumOrbit {
  double alpha = 1.0;
  int j = 0;  // 0: the trivial solution ψ ≡ 0
  Sign sign = Sign::plus;
  double w0 = 0.0;       // ψ′(0), signed
  double q_start = 0.0;  // q at x = 0
  double energy = 0.0;
  double period = 0.0;
  GridFunction psi;
  GridFunction psi_prime;
  double h2_residual = 0.0;
  double hamiltonian_drift = 0.0;
  double closure = 0.0;
  double worst_x = 0.0;
};

inline constexpr double h2_tolerance = 1e-8;
inline constexpr double closure_tolerance = 1e-8;
inline constexpr double drift_target = 1e-11;

inline EquilibriumOrbit trivial_orbit(double alpha, std::size_t n = default_grid_size) {
  EquilibriumOrbit o;
  o.alpha = alpha;
  o.j = 0;
  o.period = linearized_period(alpha);
  o.psi = GridFunction::zero(Parity::odd, n);
  o.psi_prime = GridFunction::zero(Parity::even, n);
  return o;
}

/// Integrates the orbit from (ψ, ψ′) = (0, ±ŵ_j) by RK4 with nodes on the
/// collocation grid and samples ψ, ψ′ there.
inline EquilibriumOrbit reconstruct_orbit(double alpha, int j, Sign sign = Sign::plus,
                                          std::size_t n = default_grid_size) {
  require_grid_size(n);
  if (j == 0) return trivial_orbit(alpha, n);
  const auto b = branch_point(alpha, j);
  EquilibriumOrbit o;
  o.alpha = alpha;
  o.j = j;
  o.sign = sign;
  o.energy = b.energy;
  o.period = b.period;
  o.q_start = sign == Sign::plus ? b.q_minus : b.q_plus;
  o.w0 = sign == Sign::plus ? b.w_hat : w_from_q(alpha, b.q_plus);

  // ψ vanishes at x = π for every j; for j = 1 the orbit is followed over a
  // full period as well.
  const std::size_t last_node = j == 1 ? 2 * n : n;
  const double grid_h = std::numbers::pi / static_cast<double>(n);
  std::vector<double> psi(n + 1, 0.0), dpsi(n + 1, 0.0);
  OrbitField field{alpha};
  auto residual = [&](const state_vector<3>& s) {
    return s[1] * s[1] - detail::potential_increment(s[0], o.q_start - s[0]) / alpha;
  };

  auto integrate = [&](std::size_t sub) {
    const double h = grid_h / static_cast<double>(sub);
    o.h2_residual = o.hamiltonian_drift = o.closure = 0.0;
    compensated_rk4<3> stepper({o.q_start, 0.0, 0.0});
    const auto& y = stepper.state();
    dpsi[0] = w_from_q(alpha, y[0]);
    for (std::size_t node = 1; node <= last_node; ++node) {
      const double x0 = static_cast<double>(node - 1) * grid_h;
      for (std::size_t s = 0; s < sub; ++s) stepper.step(field, x0 + static_cast<double>(s) * h, h);
      const double r = std::abs(residual(y));
      if (r > o.h2_residual) {
        o.h2_residual = r;
        o.worst_x = static_cast<double>(node) * grid_h;
      }
      o.hamiltonian_drift = std::max(o.hamiltonian_drift, alpha * r);
      if (node <= n) {
        psi[node] = y[1];
        dpsi[node] = w_from_q(alpha, y[0]);
      }
      if (node == n || node == last_node) o.closure = std::max(o.closure, std::abs(y[1]));
    }
  };

  // Start from h ≤ T/(4096 j) and halve until the energy drift is negligible.
  const double h_max = b.period / (4096.0 * j);
  auto sub = static_cast<std::size_t>(std::ceil(grid_h / h_max));
  integrate(sub);
  for (int refine = 0; refine < 8 && o.hamiltonian_drift > drift_target; ++refine) integrate(sub *= 2);

  psi[0] = psi[n] = 0.0;
  o.psi = transform(psi, Parity::odd);
  o.psi_prime = transform(dpsi, Parity::even);
  if (o.h2_residual > h2_tolerance)
    throw accuracy_error("orbit-equation residual " + io::format_number(o.h2_residual) + " exceeds tolerance",
                         o.worst_x);
  if (o.closure > closure_tolerance)
    throw accuracy_error("orbit does not close: |psi| = " + io::format_number(o.closure),
                         std::numbers::pi * static_cast<double>(last_node) / static_cast<double>(n));
  return o;
}

/// Doubles the grid from `n` until the sine spectrum of ψ is resolved.
inline EquilibriumOrbit reconstruct_resolved_orbit(double alpha, int j, Sign sign = Sign::plus,
                                                   std::size_t n = default_grid_size,
                                                   std::size_t n_max = 4096, double tail_tol = 1e-12) {
  for (;; n *= 2) {
    auto o = reconstruct_orbit(alpha, j, sign, n);
    if (spectral_tail(o.psi) <= tail_tol || n >= n_max) return o;
  }
}

/// ‖α(ψ″ − 2ψψ′) + 2ψ‖_{L2} with ψ″ from spectral differentiation of ψ′.
inline double stationary_residual(const EquilibriumOrbit& o) {
  auto r = o.alpha * (differentiate(o.psi_prime) - 2.0 * multiply(o.psi, o.psi_prime));
  r += 2.0 * o.psi;
  return norm(r, NormKind::L2);
}

/// g(q) = e^{2q} + 4(1 − q)e^q − 2q − 5, nonnegative with a fourth-order zero at 0.
inline double chicone_g(double q) {
  if (std::abs(q) < 0.5) {
    // Σ_{k≥4} (2^k + 4 − 4k) q^k / k!
    double sum = 0.0, power = q * q * q * q, fact = 24.0, two_k = 16.0;
    for (int k = 4; k < 40; ++k) {
      const double term = (two_k + 4.0 - 4.0 * k) * power / fact;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      power *= q;
      fact *= k + 1;
      two_k *= 2.0;
    }
    return sum;
  }
  return std::exp(2.0 * q) + 4.0 * (1.0 - q) * std::exp(q) - 2.0 * q - 5.0;
}

struct ChiconeReport {
  double g_min = 0.0;      // smallest g over the nonzero grid points
  double g_min_q = 0.0;
  std::vector<double> energies;
  std::vector<double> dT_dE;
  bool passed = true;
};

inline ChiconeReport chicone_check(const std::vector<double>& energy_samples, double q_lo = -10.0,
                                   double q_hi = 5.0, std::size_t q_points = 3001, double de = 1e-5) {
  ChiconeReport rep;
  rep.g_min = INFINITY;
  for (std::size_t i = 0; i < q_points; ++i) {
    const double q = q_lo + (q_hi - q_lo) * static_cast<double>(i) / static_cast<double>(q_points - 1);
    const double g = chicone_g(q);
    if (q == 0.0) {
      if (g != 0.0) rep.passed = false;
      continue;
    }
    if (g < rep.g_min) {
      rep.g_min = g;
      rep.g_min_q = q;
    }
  }
  if (!(rep.g_min > 0)) {
    rep.passed = false;
    throw property_violation("g(q) is not positive away from q = 0", rep.g_min_q);
  }
  for (double e : energy_samples) {
    if (!(e > 0)) throw domain_error("energy samples must be positive");
    const double step = std::min(de, 0.5 * e);
    const double d = (reduced_period_from_energy(e + step).T - reduced_period_from_energy(e - step).T) / (2 * step);
    rep.energies.push_back(e);
    rep.dT_dE.push_back(d);
    if (!(d > 0)) {
      rep.passed = false;
      throw property_violation("dT/dE is not positive at E = " + std::to_string(e), e);
    }
  }
  return rep;
}

struct PhaseTrace {
  double w0 = 0.0;
  OrbitClass kind = OrbitClass::point;
  std::vector<double> x, w, p;
};

/// Integrates (w, p) directly from (w0, 0); stops early once the orbit leaves
/// |w|, |p| ≤ escape.
inline PhaseTrace phase_trace(double alpha, double w0, double x_max, std::size_t steps, double escape = 1e3) {
  PhaseTrace tr;
  tr.w0 = w0;
  tr.kind = classify_orbit({alpha, std::abs(w0)});
  auto f = [alpha](double, const state_vector<2>& y) -> state_vector<2> {
    return {2.0 * y[1] * (y[0] - 1.0 / alpha), y[0]};
  };
  state_vector<2> y{w0, 0.0};
  const double h = x_max / static_cast<double>(steps);
  tr.x.push_back(0.0);
  tr.w.push_back(y[0]);
  tr.p.push_back(y[1]);
  for (std::size_t i = 1; i <= steps; ++i) {
    y = rk4_step<2>(f, (i - 1) * h, y, h);
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || std::abs(y[0]) > escape || std::abs(y[1]) > escape) break;
    tr.x.push_back(i * h);
    tr.w.push_back(y[0]);
    tr.p.push_back(y[1]);
  }
  return tr;
}

}  // namespace hierarg::equilibria
