#pragma once

// Linearization L[ψ]ζ = −αζ″ + 2αψζ′ − 2(1 − αψ′)ζ about a stationary ψ,
// in the self-adjoint form pLζ = −α(pζ′)′ − 2p(1 − αψ′)ζ with p = e^{−2∫₀ˣψ},
// together with the shooting criterium, the identities along orbits and the
// Liapunov functional of the flow.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hierarg/equilibria.hpp"
#include "hierarg/error.hpp"
#include "hierarg/grid_function.hpp"
#include "hierarg/io.hpp"
#include "hierarg/rg_flow.hpp"
#include "hierarg/rk4.hpp"
#include "json.hpp"

namespace hierarg::stability {

using equilibria::EquilibriumOrbit;

inline GridFunction weight_p(const EquilibriumOrbit& orbit) {
  const auto phi = integrate_from_zero(orbit.psi);
  std::vector<double> p(phi.values().begin(), phi.values().end());
  for (auto& v : p) v = std::exp(-2.0 * v);
  return transform(p, Parity::even);
}

/// Symmetric tridiagonal stiffness with diagonal mass on the interior nodes
/// x_i = iπ/n, i = 1..n−1 (Dirichlet ends).
struct OperatorMatrix {
  std::size_t n = 0;
  double h = 0.0;
  double alpha = 0.0;
  std::vector<double> diag;     // K_ii
  std::vector<double> offdiag;  // K_{i,i+1}
  std::vector<double> mass;     // p(x_i)
  std::shared_ptr<const EquilibriumOrbit> source;
};

inline constexpr std::size_t min_operator_size = 16;

inline OperatorMatrix assemble_L(std::shared_ptr<const EquilibriumOrbit> orbit, std::size_t n) {
  if (n < min_operator_size)
    throw sizing_error("operator grid n = " + std::to_string(n) + " is too coarse (minimum 16)");
  const double alpha = orbit->alpha;
  const auto phi = integrate_from_zero(orbit->psi);
  OperatorMatrix m;
  m.n = n;
  m.h = std::numbers::pi / static_cast<double>(n);
  m.alpha = alpha;
  m.source = orbit;
  const double h2 = m.h * m.h;
  const std::size_t dim = n - 1;
  std::vector<double> p_mid(n);  // p at x_{i+½}, i = 0..n−1
  for (std::size_t i = 0; i < n; ++i) p_mid[i] = std::exp(-2.0 * phi.evaluate((static_cast<double>(i) + 0.5) * m.h));
  m.diag.resize(dim);
  m.offdiag.resize(dim > 0 ? dim - 1 : 0);
  m.mass.resize(dim);
  for (std::size_t i = 1; i <= dim; ++i) {
    const double x = static_cast<double>(i) * m.h;
    const double p = std::exp(-2.0 * phi.evaluate(x));
    const double dpsi = orbit->psi_prime.evaluate(x);
    m.mass[i - 1] = p;
    m.diag[i - 1] = alpha * (p_mid[i - 1] + p_mid[i]) / h2 - 2.0 * p * (1.0 - alpha * dpsi);
    if (i < dim) m.offdiag[i - 1] = -alpha * p_mid[i] / h2;
  }
  return m;
}

inline OperatorMatrix assemble_L(const EquilibriumOrbit& orbit, std::size_t n) {
  return assemble_L(std::make_shared<const EquilibriumOrbit>(orbit), n);
}

namespace detail {

struct SymmetricTridiagonal {
  std::vector<double> a;  // diagonal
  std::vector<double> b;  // off-diagonal
};

/// D^{-1/2} K D^{-1/2}.
inline SymmetricTridiagonal reduce(const OperatorMatrix& m) {
  SymmetricTridiagonal t;
  t.a.resize(m.diag.size());
  t.b.resize(m.offdiag.size());
  for (std::size_t i = 0; i < t.a.size(); ++i) t.a[i] = m.diag[i] / m.mass[i];
  for (std::size_t i = 0; i < t.b.size(); ++i) t.b[i] = m.offdiag[i] / std::sqrt(m.mass[i] * m.mass[i + 1]);
  return t;
}

/// Number of eigenvalues below x (Sturm sequence via the LDLᵀ pivots).
inline std::size_t count_below(const SymmetricTridiagonal& t, double x) {
  std::size_t count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < t.a.size(); ++i) {
    const double off = i == 0 ? 0.0 : t.b[i - 1] * t.b[i - 1];
    d = t.a[i] - x - (i == 0 ? 0.0 : off / d);
    if (d == 0.0) d = -1e-300;
    if (d < 0) ++count;
  }
  return count;
}

inline std::vector<double> lowest_eigenvalues(const SymmetricTridiagonal& t, std::size_t k) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < t.a.size(); ++i) {
    const double r = (i > 0 ? std::abs(t.b[i - 1]) : 0.0) + (i < t.b.size() ? std::abs(t.b[i]) : 0.0);
    lo = std::min(lo, t.a[i] - r);
    hi = std::max(hi, t.a[i] + r);
  }
  k = std::min(k, t.a.size());
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    double l = j > 0 ? out[j - 1] : lo, u = hi;
    // λ_j is the smallest x with count_below(x) ≥ j + 1.
    for (int it = 0; it < 200 && u - l > 1e-14 * std::max(1.0, std::abs(l) + std::abs(u)); ++it) {
      const double mid = 0.5 * (l + u);
      if (count_below(t, mid) >= j + 1) u = mid; else l = mid;
    }
    out[j] = 0.5 * (l + u);
  }
  return out;
}

}  // namespace detail

inline std::vector<double> eigenvalues(const OperatorMatrix& m, std::size_t k) {
  return detail::lowest_eigenvalues(detail::reduce(m), k);
}

inline std::size_t negative_count(const OperatorMatrix& m) {
  return detail::count_below(detail::reduce(m), 0.0);
}

struct SpectrumReport {
  std::vector<double> eigenvalues;  // Richardson (4λ(2n) − λ(n))/3
  std::vector<double> coarse;       // λ(n)
  std::vector<double> fine;         // λ(2n)
  std::size_t negative_count = 0;
  std::vector<std::size_t> grid_sizes;
};

/// k lowest eigenvalues at n and 2n with Richardson extrapolation; the
/// negative count must agree between the two grids.
inline SpectrumReport smallest_eigenvalues(const OperatorMatrix& m, std::size_t k) {
  if (k == 0 || k > 10) throw domain_error("k must be in 1..10");
  if (!m.source) throw domain_error("operator matrix carries no source orbit");
  const auto fine = assemble_L(m.source, 2 * m.n);
  SpectrumReport r;
  r.coarse = eigenvalues(m, k);
  r.fine = eigenvalues(fine, k);
  r.grid_sizes = {m.n, 2 * m.n};
  for (std::size_t i = 0; i < r.coarse.size(); ++i) r.eigenvalues.push_back((4.0 * r.fine[i] - r.coarse[i]) / 3.0);
  const auto nc = negative_count(m), nf = negative_count(fine);
  if (nc != nf)
    throw unresolved_spectrum_error("negative eigenvalue count differs between n = " + std::to_string(m.n) + " (" +
                                    std::to_string(nc) + ") and n = " + std::to_string(2 * m.n) + " (" +
                                    std::to_string(nf) + ")");
  r.negative_count = nc;
  return r;
}

inline nlohmann::ordered_json spectrum_json(const SpectrumReport& r, const EquilibriumOrbit& orbit) {
  nlohmann::ordered_json j;
  j["alpha"] = orbit.alpha;
  j["branch"] = {{"j", orbit.j}, {"sign", orbit.j == 0 ? "trivial" : equilibria::to_string(orbit.sign)}};
  j["eigenvalues"] = r.eigenvalues;
  j["negative_count"] = r.negative_count;
  j["grid_sizes"] = r.grid_sizes;
  return j;
}

enum class Verdict { stable, unstable, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct CriteriumResult {
  std::vector<double> x, phi, dphi;
  std::optional<double> first_zero;
  Verdict verdict = Verdict::stable;
  double min_phi = 0.0;
  double wronskian_deviation = 0.0;  // max |αp(φ′ψ′ − φψ″) − αψ′(0)|
  double wronskian_worst_x = 0.0;
  double wronskian_constant = 0.0;   // αψ′(0)
};

inline constexpr std::size_t criterium_steps = 8192;
inline constexpr double grazing_tolerance = 1e-9;

/// Shoots L[ψ]φ = 0, φ(0) = 0, φ′(0) = 1 on [0, π] together with the orbit
/// (q, ψ, Φ), so ψ and ψ′ are exact along the trace.
inline CriteriumResult criterium_phi(const EquilibriumOrbit& orbit, std::size_t steps = criterium_steps) {
  const double alpha = orbit.alpha;
  // y = (q, ψ, Φ, φ, φ′); 1 − αψ′ = e^q.
  auto field = [alpha](double, const state_vector<5>& y) -> state_vector<5> {
    const double eq = std::exp(y[0]);
    return {2.0 * y[1], -std::expm1(y[0]) / alpha, y[1], y[4], 2.0 * y[1] * y[4] - 2.0 / alpha * eq * y[3]};
  };
  CriteriumResult r;
  const double h = std::numbers::pi / static_cast<double>(steps);
  compensated_rk4<5> stepper({orbit.j == 0 ? 0.0 : orbit.q_start, 0.0, 0.0, 0.0, 1.0});
  r.wronskian_constant = alpha * equilibria::w_from_q(alpha, stepper.state()[0]);
  auto wronskian = [alpha](const state_vector<5>& y) {
    const double psi = y[1], dpsi = equilibria::w_from_q(alpha, y[0]);
    const double ddpsi = 2.0 * psi * dpsi - 2.0 * psi / alpha;
    return alpha * std::exp(-2.0 * y[2]) * (y[4] * dpsi - y[3] * ddpsi);
  };
  r.min_phi = INFINITY;
  for (std::size_t i = 0; i <= steps; ++i) {
    if (i > 0) stepper.step(field, static_cast<double>(i - 1) * h, h);
    const auto& y = stepper.state();
    const double x = static_cast<double>(i) * h;
    r.x.push_back(x);
    r.phi.push_back(y[3]);
    r.dphi.push_back(y[4]);
    const double dev = std::abs(wronskian(y) - r.wronskian_constant);
    if (dev > r.wronskian_deviation) {
      r.wronskian_deviation = dev;
      r.wronskian_worst_x = x;
    }
    if (i == 0) continue;
    r.min_phi = std::min(r.min_phi, y[3]);
    if (!r.first_zero && y[3] <= 0.0) {
      // Cubic Hermite on the last step, then bisection for the root.
      const double x0 = x - h, f0 = r.phi[i - 1], d0 = r.dphi[i - 1], f1 = y[3], d1 = y[4];
      auto hermite = [&](double s) {
        const double t = (s - x0) / h, t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
      };
      double a = x0, b = x;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (a + b);
        if (hermite(mid) > 0) a = mid; else b = mid;
      }
      r.first_zero = 0.5 * (a + b);
    }
  }
  if (r.first_zero) r.verdict = Verdict::unstable;
  else if (r.min_phi < grazing_tolerance) r.verdict = Verdict::inconclusive;
  else r.verdict = Verdict::stable;
  return r;
}

inline void write_csv(std::ostream& out, const CriteriumResult& r) {
  io::csv_writer w(out);
  w.header({"x", "phi"});
  for (std::size_t i = 0; i < r.x.size(); ++i) w.row(r.x[i], r.phi[i]);
}

/// L[ψ]f on the collocation grid, derivatives spectral.
inline std::vector<double> apply_L(const EquilibriumOrbit& orbit, const GridFunction& f) {
  const double alpha = orbit.alpha;
  const auto df = differentiate(f);
  const auto ddf = differentiate(df);
  std::vector<double> out(f.values().size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double psi = orbit.psi.values()[k], dpsi = orbit.psi_prime.values()[k];
    out[k] = -alpha * ddf.values()[k] + 2.0 * alpha * psi * df.values()[k] - 2.0 * (1.0 - alpha * dpsi) * f.values()[k];
  }
  return out;
}

struct IdentityReport {
  bool skipped = false;
  std::string note;
  double c = 0.0;  // χ = c(−αψ″ + 4ψ), χ′(0) = 1
  double chi_residual = 0.0;
  double chi_worst_x = 0.0;
  double psi_prime_residual = 0.0;
  double psi_prime_worst_x = 0.0;
  double wronskian_deviation = 0.0;
  double wronskian_worst_x = 0.0;
  double wronskian_constant = 0.0;
};

inline constexpr double identity_tolerance = 1e-6;

/// Residuals of L[ψ]χ = 8cα²ψψ′², L[ψ]ψ′ = 0 and Wronskian constancy;
/// throws property_violation on a breach unless `throw_on_breach` is false.
inline IdentityReport identity_checks(const EquilibriumOrbit& orbit, bool throw_on_breach = true) {
  IdentityReport rep;
  if (orbit.j == 0) {
    rep.skipped = true;
    rep.note = "psi = 0: identities are trivial (psi' = 0, chi = 0)";
    return rep;
  }
  const double alpha = orbit.alpha;
  const auto ddpsi = differentiate(orbit.psi_prime);
  const auto dddpsi = differentiate(ddpsi);
  rep.c = 1.0 / (-alpha * dddpsi.values()[0] + 4.0 * orbit.psi_prime.values()[0]);
  auto chi = -alpha * ddpsi + 4.0 * orbit.psi;
  chi *= rep.c;
  const auto lchi = apply_L(orbit, chi);
  const auto lpsi = apply_L(orbit, orbit.psi_prime);
  for (std::size_t k = 0; k < lchi.size(); ++k) {
    const double psi = orbit.psi.values()[k], dpsi = orbit.psi_prime.values()[k];
    const double target = 8.0 * rep.c * alpha * alpha * psi * dpsi * dpsi;
    if (std::abs(lchi[k] - target) > rep.chi_residual) {
      rep.chi_residual = std::abs(lchi[k] - target);
      rep.chi_worst_x = orbit.psi.x(k);
    }
    if (std::abs(lpsi[k]) > rep.psi_prime_residual) {
      rep.psi_prime_residual = std::abs(lpsi[k]);
      rep.psi_prime_worst_x = orbit.psi.x(k);
    }
  }
  const auto shoot = criterium_phi(orbit);
  rep.wronskian_deviation = shoot.wronskian_deviation;
  rep.wronskian_worst_x = shoot.wronskian_worst_x;
  rep.wronskian_constant = shoot.wronskian_constant;
  if (throw_on_breach) {
    if (rep.chi_residual > identity_tolerance)
      throw property_violation("L[psi]chi identity residual " + io::format_number(rep.chi_residual), rep.chi_worst_x);
    if (rep.psi_prime_residual > identity_tolerance)
      throw property_violation("L[psi]psi' residual " + io::format_number(rep.psi_prime_residual),
                               rep.psi_prime_worst_x);
    if (rep.wronskian_deviation > identity_tolerance)
      throw property_violation("Wronskian deviation " + io::format_number(rep.wronskian_deviation),
                               rep.wronskian_worst_x);
  }
  return rep;
}

namespace detail {

/// (1 − s) ln(1 − s) + s, series for small |s|.
inline double entropy_like(double s) {
  if (std::abs(s) < 0.1) {
    double power = s * s, sum = 0.0;
    for (int k = 2; k < 40; ++k) {
      const double term = power / (static_cast<double>(k) * (k - 1));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      power *= s;
    }
    return sum;
  }
  return (1.0 - s) * std::log1p(-s) + s;
}

inline std::size_t refined_size(std::size_t n) { return 4 * n; }

}  // namespace detail

/// V(v) = ∫_{−π}^{π} {(α⁻¹ − v′) ln(1 − αv′) + v′ − v²} dx.
inline double liapunov_V(const GridFunction& v, double alpha) {
  if (v.parity() != Parity::odd) throw domain_error("liapunov_V expects an odd function");
  const auto fine = resample(v, detail::refined_size(v.n_modes()));
  const auto dv = differentiate(fine);
  std::vector<double> g(fine.values().size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double s = alpha * dv.values()[k];
    if (!(s < 1.0)) throw domain_error("alpha*v' >= 1 at x = " + io::format_number(fine.x(k)));
    const double w = fine.values()[k];
    g[k] = detail::entropy_like(s) / alpha - w * w;
  }
  return symmetric_quadrature(g);
}

/// V̇ = −∫_{−π}^{π} v_t² / (1 − αv_x) dx with v_t from the flow equation.
inline double liapunov_Vdot(const GridFunction& v, double alpha) {
  const auto vt = resample(flow::time_derivative(v, alpha), detail::refined_size(v.n_modes()));
  const auto dv = differentiate(resample(v, detail::refined_size(v.n_modes())));
  std::vector<double> g(vt.values().size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double s = alpha * dv.values()[k];
    if (!(s < 1.0)) throw domain_error("alpha*v_x >= 1 at x = " + io::format_number(vt.x(k)));
    g[k] = vt.values()[k] * vt.values()[k] / (1.0 - s);
  }
  return -symmetric_quadrature(g);
}

inline double liapunov_Vdot(const flow::FlowState& s) { return liapunov_Vdot(s.v, s.alpha); }

}  // namespace hierarg::stability
