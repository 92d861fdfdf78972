#pragma once

// Flow v_t = α(v_xx − 2v v_x) + 2v on odd 2π-periodic v, and its integrated
// form for ũ(t, x) = ∫₀ˣ v with the multiplier keeping ũ(t, 0) = 0.
// Time stepping is ETD2RK in the sine (cosine) basis with the nonlinearity
// evaluated on a 3/2-padded grid.

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
#include "hierarg/transforms.hpp"
#include "json.hpp"

namespace hierarg::flow {

struct FlowConfig {
  double alpha = 1.0;
  double dt = 1e-3;
  std::size_t stride = 100;
  double blow_up_threshold = 1e6;
  double convergence_threshold = 1e-10;
  std::size_t multiplier_stride = 1;  // ũ-form: sampling of α ũ_xx(t, 0)
};

inline void validate(const FlowConfig& c) {
  if (!(c.alpha > 0)) throw domain_error("alpha must be positive");
  if (!(c.dt > 0)) throw domain_error("dt must be positive");
  if (c.stride == 0 || c.multiplier_stride == 0) throw domain_error("stride must be positive");
}

struct FlowState {
  double t = 0.0;
  double alpha = 1.0;
  double dt = 1e-3;
  GridFunction v;
};

/// Theorem-cone bounds on the interior of (0, π): α⁻¹(x − π) < v < α⁻¹x and
/// α v_x < 1. Margins are the minimum slack of each inequality.
struct MonitorRecord {
  double upper_margin = 0.0;
  double lower_margin = 0.0;
  double slope_margin = 0.0;
  double max_abs_v = 0.0;
  bool ok() const { return upper_margin > 0 && lower_margin > 0 && slope_margin > 0; }
};

inline MonitorRecord check_monitors(const GridFunction& v, double alpha) {
  MonitorRecord m;
  m.upper_margin = m.lower_margin = m.slope_margin = INFINITY;
  const auto vals = v.values();
  const std::size_t n = v.n_modes();
  for (std::size_t k = 1; k < n; ++k) {
    const double x = v.x(k);
    m.upper_margin = std::min(m.upper_margin, x / alpha - vals[k]);
    m.lower_margin = std::min(m.lower_margin, vals[k] - (x - std::numbers::pi) / alpha);
  }
  const auto dv = differentiate(v);
  for (double d : dv.values()) m.slope_margin = std::min(m.slope_margin, 1.0 - alpha * d);
  m.max_abs_v = v.max_abs_value();
  return m;
}

namespace detail {

inline double phi1(double z) {
  if (std::abs(z) > 0.1) return std::expm1(z) / z;
  double term = 1.0, sum = 1.0;
  for (int k = 2; k < 20; ++k) {
    term *= z / k;
    sum += term;
  }
  return sum;
}

inline double phi2(double z) {
  if (std::abs(z) > 0.1) return (std::expm1(z) - z) / (z * z);
  double term = 0.5, sum = 0.5;
  for (int k = 3; k < 21; ++k) {
    term *= z / k;
    sum += term;
  }
  return sum;
}

/// ETD2RK coefficients for the diagonal linear part −(αn² − 2).
struct EtdTables {
  std::vector<double> e, f1, f2;
  EtdTables(double alpha, double dt, std::size_t n, bool include_zero) : e(n + 1, 0.0), f1(n + 1, 0.0), f2(n + 1, 0.0) {
    for (std::size_t m = include_zero ? 0 : 1; m < n; ++m) {
      const double z = -(alpha * static_cast<double>(m * m) - 2.0) * dt;
      e[m] = std::exp(z);
      f1[m] = dt * phi1(z);
      f2[m] = dt * phi2(z);
    }
  }
};

}  // namespace detail

/// Right-hand side pieces in the sine basis.
class VForm {
 public:
  VForm(double alpha, std::size_t n) : alpha_(alpha), n_(n), padded_(3 * n / 2) {}

  /// Sine coefficients of −α (v²)_x.
  std::vector<double> nonlinear(const std::vector<double>& a) const {
    auto vals = transforms::sine_synthesis(transforms::resize_modes(a, padded_));
    for (auto& x : vals) x *= x;
    const auto c = transforms::cosine_analysis(vals);
    std::vector<double> out(n_ + 1, 0.0);
    for (std::size_t m = 1; m < n_; ++m) out[m] = alpha_ * static_cast<double>(m) * c[m];
    return out;
  }

  std::vector<double> rhs(const std::vector<double>& a) const {
    auto out = nonlinear(a);
    for (std::size_t m = 1; m < n_; ++m) out[m] -= (alpha_ * static_cast<double>(m * m) - 2.0) * a[m];
    return out;
  }

 private:
  double alpha_;
  std::size_t n_;
  std::size_t padded_;
};

/// Advances sine coefficients by ETD2RK with a fixed step.
class VStepper {
 public:
  VStepper(double alpha, double dt, std::size_t n) : form_(alpha, n), tab_(alpha, dt, n, false), n_(n) {}

  void step(std::vector<double>& a) const {
    const auto na = form_.nonlinear(a);
    std::vector<double> b(n_ + 1, 0.0);
    for (std::size_t m = 1; m < n_; ++m) b[m] = tab_.e[m] * a[m] + tab_.f1[m] * na[m];
    const auto nb = form_.nonlinear(b);
    for (std::size_t m = 1; m < n_; ++m) a[m] = b[m] + tab_.f2[m] * (nb[m] - na[m]);
  }

  const VForm& form() const { return form_; }

 private:
  VForm form_;
  detail::EtdTables tab_;
  std::size_t n_;
};

/// v_t from the equation's right-hand side.
inline GridFunction time_derivative(const GridFunction& v, double alpha) {
  if (v.parity() != Parity::odd) throw domain_error("flow state must be odd");
  std::vector<double> a(v.coeffs().begin(), v.coeffs().end());
  return GridFunction(Parity::odd, VForm(alpha, v.n_modes()).rhs(a));
}

/// ‖α(v″ − 2v v′) + 2v‖_{L2}.
inline double stationary_residual(const GridFunction& v, double alpha) {
  return norm(time_derivative(v, alpha), NormKind::L2);
}

namespace detail {

inline void check_blow_up(const GridFunction& v, double t, double threshold) {
  const auto vals = v.values();
  std::size_t worst = 0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (!std::isfinite(vals[k])) throw blow_up_error(t, v.x(k), INFINITY);
    if (std::abs(vals[k]) > std::abs(vals[worst])) worst = k;
  }
  if (std::abs(vals[worst]) > threshold) throw blow_up_error(t, v.x(worst), std::abs(vals[worst]));
}

}  // namespace detail

inline FlowState step_v(const FlowState& s, double blow_up_threshold = 1e6) {
  if (!(s.dt > 0)) throw domain_error("dt must be positive");
  if (s.v.parity() != Parity::odd) throw domain_error("flow state must be odd");
  std::vector<double> a(s.v.coeffs().begin(), s.v.coeffs().end());
  VStepper(s.alpha, s.dt, s.v.n_modes()).step(a);
  FlowState out{s.t + s.dt, s.alpha, s.dt, GridFunction(Parity::odd, std::move(a))};
  detail::check_blow_up(out.v, out.t, blow_up_threshold);
  return out;
}

struct Trajectory {
  FlowConfig config;
  std::vector<FlowState> states;
  std::vector<MonitorRecord> monitor_log;
  std::vector<double> vt_norms;  // ‖v_t‖_{L2} (ũ_t for the integrated form)
  bool converged = false;
  bool monitor_warning = false;
  bool initial_admissible = true;
  // ũ-form only: α ũ_xx(t, 0) sampled every `multiplier_stride` steps from t = 0.
  std::vector<double> multiplier;

  const FlowState& final_state() const { return states.back(); }
  double final_residual() const { return vt_norms.empty() ? NAN : vt_norms.back(); }
};

inline std::size_t step_count(double t_end, double dt) {
  if (t_end < 0) throw domain_error("t_end must be nonnegative");
  return static_cast<std::size_t>(std::llround(t_end / dt));
}

/// Integrates from v0 to t_end, recording every `stride` steps and the final
/// state. Monitor violations are logged, not fatal.
inline Trajectory evolve(const GridFunction& v0, const FlowConfig& cfg, double t_end) {
  validate(cfg);
  if (v0.parity() != Parity::odd) throw domain_error("initial data must be odd");
  const std::size_t n = v0.n_modes();
  const std::size_t steps = step_count(t_end, cfg.dt);
  VStepper stepper(cfg.alpha, cfg.dt, n);
  Trajectory tr;
  tr.config = cfg;
  std::vector<double> a(v0.coeffs().begin(), v0.coeffs().end());

  auto record = [&](std::size_t k, GridFunction v) {
    const double t = static_cast<double>(k) * cfg.dt;
    auto mon = check_monitors(v, cfg.alpha);
    if (!mon.ok()) tr.monitor_warning = true;
    tr.vt_norms.push_back(norm(GridFunction(Parity::odd, stepper.form().rhs(a)), NormKind::L2));
    tr.monitor_log.push_back(mon);
    tr.states.push_back({t, cfg.alpha, cfg.dt, std::move(v)});
  };
  record(0, v0);
  tr.initial_admissible = tr.monitor_log.front().ok();
  for (std::size_t k = 1; k <= steps; ++k) {
    stepper.step(a);
    const bool snap = k % cfg.stride == 0 || k == steps;
    if (snap || k % 16 == 0) {
      GridFunction v(Parity::odd, a);
      detail::check_blow_up(v, static_cast<double>(k) * cfg.dt, cfg.blow_up_threshold);
      if (snap) record(k, std::move(v));
    }
  }
  tr.converged = tr.final_residual() < cfg.convergence_threshold;
  return tr;
}

/// Cosine-basis right-hand side of ũ_t = αũ_xx + 2ũ − αũ_x² − αũ_xx(t, 0)
/// for modes n ≥ 1; the constant mode is slaved to ũ(t, 0) = 0.
class UForm {
 public:
  UForm(double alpha, std::size_t n) : alpha_(alpha), n_(n), padded_(3 * n / 2) {}

  std::vector<double> nonlinear(const std::vector<double>& b) const {
    std::vector<double> s(n_ + 1, 0.0);
    for (std::size_t m = 1; m < n_; ++m) s[m] = -static_cast<double>(m) * b[m];
    auto vals = transforms::sine_synthesis(transforms::resize_modes(s, padded_));
    for (auto& x : vals) x *= x;
    const auto c = transforms::cosine_analysis(vals);
    std::vector<double> out(n_ + 1, 0.0);
    for (std::size_t m = 1; m < n_; ++m) out[m] = -alpha_ * c[m];
    return out;
  }

  /// α ũ_xx(t, 0).
  double multiplier(const std::vector<double>& b) const {
    double s = 0.0;
    for (std::size_t m = n_ - 1; m >= 1; --m) s -= static_cast<double>(m * m) * b[m];
    return alpha_ * s;
  }

  std::vector<double> rhs(const std::vector<double>& b) const {
    auto out = nonlinear(b);
    double sum = 0.0;
    for (std::size_t m = 1; m < n_; ++m) {
      out[m] -= (alpha_ * static_cast<double>(m * m) - 2.0) * b[m];
      sum += out[m];
    }
    out[0] = -sum;
    return out;
  }

  static void pin_origin(std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t m = b.size() - 1; m >= 1; --m) s += b[m];
    b[0] = -s;
  }

 private:
  double alpha_;
  std::size_t n_;
  std::size_t padded_;
};

inline Trajectory evolve_u_tilde(const GridFunction& u0, const FlowConfig& cfg, double t_end) {
  validate(cfg);
  if (u0.parity() != Parity::even) throw domain_error("initial data for the integrated form must be even");
  if (std::abs(u0.evaluate(0.0)) > 1e-12) throw domain_error("initial data must vanish at x = 0");
  const std::size_t n = u0.n_modes();
  const std::size_t steps = step_count(t_end, cfg.dt);
  UForm form(cfg.alpha, n);
  detail::EtdTables tab(cfg.alpha, cfg.dt, n, false);
  std::vector<double> b(u0.coeffs().begin(), u0.coeffs().end());
  b[n] = 0.0;
  UForm::pin_origin(b);

  Trajectory tr;
  tr.config = cfg;
  auto record = [&](std::size_t k) {
    GridFunction u(Parity::even, b);
    auto mon = check_monitors(differentiate(u), cfg.alpha);
    if (!mon.ok()) tr.monitor_warning = true;
    tr.vt_norms.push_back(norm(GridFunction(Parity::even, form.rhs(b)), NormKind::L2));
    tr.monitor_log.push_back(mon);
    tr.states.push_back({static_cast<double>(k) * cfg.dt, cfg.alpha, cfg.dt, std::move(u)});
  };
  record(0);
  tr.initial_admissible = tr.monitor_log.front().ok();
  tr.multiplier.push_back(form.multiplier(b));
  std::vector<double> c(n + 1, 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const auto nb = form.nonlinear(b);
    for (std::size_t m = 1; m < n; ++m) c[m] = tab.e[m] * b[m] + tab.f1[m] * nb[m];
    const auto nc = form.nonlinear(c);
    for (std::size_t m = 1; m < n; ++m) b[m] = c[m] + tab.f2[m] * (nc[m] - nb[m]);
    UForm::pin_origin(b);
    if (k % cfg.multiplier_stride == 0) tr.multiplier.push_back(form.multiplier(b));
    const bool snap = k % cfg.stride == 0 || k == steps;
    if (snap || k % 16 == 0) {
      GridFunction u(Parity::even, b);
      detail::check_blow_up(u, static_cast<double>(k) * cfg.dt, cfg.blow_up_threshold);
      if (snap) record(k);
    }
  }
  tr.converged = tr.final_residual() < cfg.convergence_threshold;
  return tr;
}

/// Composite Simpson over equally spaced samples (3/8 rule on the last panel
/// when the interval count is odd).
inline double simpson(const std::vector<double>& f, double h) {
  const std::size_t intervals = f.size() - 1;
  if (intervals == 0) return 0.0;
  if (intervals == 1) return 0.5 * h * (f[0] + f[1]);
  std::size_t even_part = intervals % 2 == 0 ? intervals : intervals - 3;
  double s = 0.0;
  for (std::size_t i = 0; i + 2 <= even_part; i += 2) s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  if (even_part != intervals) {
    const std::size_t i = even_part;
    s += 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  return s;
}

struct RecoveredU {
  GridFunction u;
  double u_at_origin = 0.0;  // α ∫₀ᵗ e^{2(t−s)} ũ_xx(s, 0) ds
  bool tolerance_warning = false;
};

/// u(t, x) = ũ(t, x) + α ∫₀ᵗ e^{2(t−s)} ũ_xx(s, 0) ds at the final time.
inline RecoveredU recover_u(const Trajectory& traj) {
  if (traj.states.empty()) throw domain_error("empty trajectory");
  const auto& last = traj.final_state();
  if (last.v.parity() != Parity::even) throw domain_error("recover_u needs an integrated-form trajectory");
  const double h = traj.config.dt * static_cast<double>(traj.config.multiplier_stride);
  const double t = h * static_cast<double>(traj.multiplier.size() - 1);
  if (std::abs(t - last.t) > 1e-9 * std::max(1.0, last.t))
    throw domain_error("multiplier samples do not cover the trajectory");
  std::vector<double> f(traj.multiplier.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(2.0 * (t - h * static_cast<double>(i))) * traj.multiplier[i];
  RecoveredU r;
  r.u_at_origin = simpson(f, h);
  r.tolerance_warning = h > 1e-2;
  std::vector<double> c(last.v.coeffs().begin(), last.v.coeffs().end());
  c[0] += r.u_at_origin;
  r.u = GridFunction(Parity::even, std::move(c));
  return r;
}

/// −slope of ln‖v(t) − reference‖_{L2} over the last decade of the recorded
/// distances.
inline double decay_rate(const Trajectory& traj, const std::optional<GridFunction>& reference = std::nullopt) {
  std::vector<double> t, d;
  for (const auto& s : traj.states) {
    t.push_back(s.t);
    d.push_back(norm(reference ? s.v - *reference : s.v, NormKind::L2));
  }
  if (d.size() < 3) throw estimation_error("too few snapshots for a decay rate");
  const double last = d.back();
  if (!(last < 1e-3)) throw estimation_error("trajectory has not reached the linear regime (final distance " +
                                             io::format_number(last) + ")");
  if (!(last > 0)) throw estimation_error("trajectory sits exactly on the reference");
  std::size_t first = d.size() - 1;
  while (first > 0 && d[first - 1] <= 10.0 * last) --first;
  if (d.size() - first < 3) first = d.size() - 3;
  for (std::size_t i = first + 1; i < d.size(); ++i)
    if (!(d[i] < d[i - 1])) throw estimation_error("distance is not monotone in the fitting window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  const auto m = static_cast<double>(d.size() - first);
  for (std::size_t i = first; i < d.size(); ++i) {
    const double y = std::log(d[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
  }
  return -(m * sty - st * sy) / (m * stt - st * st);
}

inline void write_csv(std::ostream& out, const Trajectory& traj) {
  io::csv_writer w(out);
  w.header({"t", "x", "v"});
  for (const auto& s : traj.states)
    for (std::size_t k = 0; k <= s.v.n_modes(); ++k) w.row(s.t, s.v.x(k), s.v.values()[k]);
}

inline nlohmann::ordered_json summary_json(const Trajectory& traj, std::optional<double> rate = std::nullopt) {
  nlohmann::ordered_json j;
  j["alpha"] = traj.config.alpha;
  j["dt"] = traj.config.dt;
  j["N"] = traj.states.empty() ? 0 : traj.final_state().v.n_modes();
  j["t_end"] = traj.states.empty() ? 0.0 : traj.final_state().t;
  j["converged"] = traj.converged;
  j["final_residual"] = traj.final_residual();
  j["decay_rate"] = rate ? nlohmann::ordered_json(*rate) : nlohmann::ordered_json(nullptr);
  j["monitor_warning"] = traj.monitor_warning;
  return j;
}

}  // namespace hierarg::flow
