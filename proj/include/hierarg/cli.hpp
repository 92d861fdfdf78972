#pragma once

// Command-line front end. Every subcommand writes <prefix>.csv and/or
// <prefix>.json stamped with the code version and the full run configuration;
// --plot-data adds whitespace-separated <prefix>.dat for gnuplot.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hierarg/discrete_rg.hpp"
#include "hierarg/equilibria.hpp"
#include "hierarg/error.hpp"
#include "hierarg/grid_function.hpp"
#include "hierarg/init_expression.hpp"
#include "hierarg/io.hpp"
#include "hierarg/rg_flow.hpp"
#include "hierarg/stability.hpp"
#include "json.hpp"

namespace hierarg::cli {

inline constexpr int format_version = 1;
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// HIERARG_THREADS if set, else the hardware concurrency.
inline std::size_t thread_cap() {
  const char* env = std::getenv("HIERARG_THREADS");
  if (env == nullptr || *env == '\0') return std::max(1u, std::thread::hardware_concurrency());
  std::size_t n = 0;
  const char* end = env + std::strlen(env);
  auto [ptr, ec] = std::from_chars(env, end, n);
  if (ec != std::errc{} || ptr != end || n == 0) throw usage_error("HIERARG_THREADS must be a positive integer");
  return n;
}

/// f(i) for i < count on up to thread_cap() threads; failures are rethrown in
/// index order.
template <class F>
void parallel_for(std::size_t count, F&& f) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(thread_cap(), std::max<std::size_t>(count, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Output {
  std::string prefix;
  bool plot_data = false;
  nlohmann::ordered_json config;

  std::string path(std::string_view ext) const { return prefix + std::string(ext); }

  std::ofstream open(std::string_view ext) const {
    const auto p = path(ext);
    if (auto parent = std::filesystem::path(p).parent_path(); !parent.empty())
      std::filesystem::create_directories(parent);
    auto f = io::open_output(p);
    f << "# hierarg " << io::version << '\n' << "# config " << config.dump() << '\n';
    return f;
  }

  void json(nlohmann::ordered_json doc) const {
    const auto p = path(".json");
    if (auto parent = std::filesystem::path(p).parent_path(); !parent.empty())
      std::filesystem::create_directories(parent);
    io::write_json(p, io::with_provenance(std::move(doc), config));
  }
};

inline void require_positive(const char* name, double v) {
  if (!(v > 0) || !std::isfinite(v)) throw usage_error(std::string(name) + " must be a positive number");
}

inline void require_grid(const char* name, std::size_t n) {
  if (!is_power_of_two(n)) throw usage_error(std::string(name) + " must be a power of two >= 4");
}

inline nlohmann::ordered_json base_config(std::string_view command) {
  nlohmann::ordered_json c;
  c["format_version"] = format_version;
  c["command"] = std::string(command);
  return c;
}

// ---------------------------------------------------------------------------
// shared option groups

struct FlowOptions {
  double alpha = 1.0;
  double t_end = 20.0;
  double dt = 1e-3;
  std::size_t n = default_grid_size;
  std::size_t stride = 100;
  std::string init = "0.1*sin(x)";
  std::string init_potential;
};

inline void add_flow_options(CLI::App* sub, FlowOptions& o) {
  sub->add_option("--alpha", o.alpha, "diffusion constant β/4π")->capture_default_str();
  auto* init = sub->add_option("--init", o.init, "odd initial data v0(x)")->capture_default_str();
  sub->add_option("--init-potential", o.init_potential, "even initial potential u0(x); v0 = u0'")->excludes(init);
  sub->add_option("--t-end", o.t_end, "final time")->capture_default_str();
  sub->add_option("--dt", o.dt, "time step")->capture_default_str();
  sub->add_option("--N", o.n, "grid intervals on [0, pi]")->capture_default_str();
  sub->add_option("--stride", o.stride, "steps between snapshots")->capture_default_str();
}

inline void validate(const FlowOptions& o) {
  require_positive("--alpha", o.alpha);
  require_positive("--t-end", o.t_end);
  require_positive("--dt", o.dt);
  require_grid("--N", o.n);
  if (o.stride == 0) throw usage_error("--stride must be positive");
}

inline nlohmann::ordered_json to_json(const FlowOptions& o, std::string_view command) {
  auto c = base_config(command);
  c["alpha"] = o.alpha;
  c["t_end"] = o.t_end;
  c["dt"] = o.dt;
  c["N"] = o.n;
  c["stride"] = o.stride;
  if (o.init_potential.empty())
    c["init"] = o.init;
  else
    c["init_potential"] = o.init_potential;
  return c;
}

inline GridFunction initial_v(const FlowOptions& o) {
  if (!o.init_potential.empty())
    return differentiate(sample_expression(parse_expression(o.init_potential), Parity::even, o.n));
  return sample_expression(parse_expression(o.init), Parity::odd, o.n);
}

inline flow::Trajectory run_flow(const FlowOptions& o) {
  flow::FlowConfig cfg;
  cfg.alpha = o.alpha;
  cfg.dt = o.dt;
  cfg.stride = o.stride;
  return flow::evolve(initial_v(o), cfg, o.t_end);
}

struct BranchOptions {
  double alpha = 1.0;
  std::string branch = "plus";
  int j = 1;
  std::size_t orbit_n = 0;
};

inline void add_branch_options(CLI::App* sub, BranchOptions& o) {
  sub->add_option("--alpha", o.alpha, "diffusion constant")->capture_default_str();
  sub->add_option("--branch", o.branch, "trivial, plus or minus")
      ->check(CLI::IsMember({"trivial", "plus", "minus"}))
      ->capture_default_str();
  sub->add_option("--j", o.j, "branch index")->capture_default_str();
  sub->add_option("--orbit-N", o.orbit_n, "orbit grid size (0: refine until resolved)")->capture_default_str();
}

inline void validate(const BranchOptions& o) {
  require_positive("--alpha", o.alpha);
  if (o.j < 1) throw usage_error("--j must be at least 1");
  if (o.orbit_n != 0) require_grid("--orbit-N", o.orbit_n);
}

inline void add_to_config(nlohmann::ordered_json& c, const BranchOptions& o) {
  c["alpha"] = o.alpha;
  c["branch"] = o.branch;
  if (o.branch != "trivial") c["j"] = o.j;
  c["orbit_N"] = o.orbit_n;
}

inline equilibria::EquilibriumOrbit select_orbit(const BranchOptions& o) {
  if (o.branch == "trivial") return equilibria::trivial_orbit(o.alpha, o.orbit_n ? o.orbit_n : default_grid_size);
  const auto sign = o.branch == "plus" ? equilibria::Sign::plus : equilibria::Sign::minus;
  if (o.orbit_n == 0) return equilibria::reconstruct_resolved_orbit(o.alpha, o.j, sign, default_grid_size);
  return equilibria::reconstruct_orbit(o.alpha, o.j, sign, o.orbit_n);
}

inline std::string orbit_name(const equilibria::EquilibriumOrbit& o) {
  if (o.j == 0) return "zero";
  return "psi_" + std::to_string(o.j) + "_" + equilibria::to_string(o.sign);
}

struct Attractor {
  std::string name = "none";
  double distance = std::numeric_limits<double>::infinity();
  std::optional<GridFunction> reference;
};

/// The equilibrium within H1 distance `tol` of v, if any.
inline Attractor identify_attractor(const GridFunction& v, double alpha, double tol = 1e-5) {
  const std::size_t n = v.n_modes();
  Attractor best;
  if (const double d = norm(v, NormKind::H1); d < tol) return {"zero", d, std::nullopt};
  for (int j = 1; j <= 32 && equilibria::branch_threshold(j) > alpha; ++j) {
    for (auto sign : {equilibria::Sign::plus, equilibria::Sign::minus}) {
      try {
        auto o = equilibria::reconstruct_resolved_orbit(alpha, j, sign, n);
        auto psi = resample(o.psi, n);
        const double d = norm(v - psi, NormKind::H1);
        if (d < best.distance) best = {orbit_name(o), d, psi};
      } catch (const error&) {
      }
    }
  }
  if (best.distance >= tol) return {"none", best.distance, std::nullopt};
  return best;
}

// ---------------------------------------------------------------------------
// subcommands

inline int cmd_flow(const FlowOptions& o, const Output& out, std::ostream& log) {
  const auto traj = run_flow(o);
  const auto& final_v = traj.final_state().v;
  const auto att = identify_attractor(final_v, o.alpha);
  std::optional<double> rate;
  if (att.name != "none") {
    try {
      rate = flow::decay_rate(traj, att.reference);
    } catch (const estimation_error&) {
    }
  }
  {
    auto f = out.open(".csv");
    flow::write_csv(f, traj);
  }
  auto doc = flow::summary_json(traj, rate);
  doc["initial_admissible"] = traj.initial_admissible;
  doc["attractor"] = att.name;
  doc["attractor_distance_H1"] = std::isfinite(att.distance) ? nlohmann::ordered_json(att.distance) : nullptr;
  out.json(doc);
  if (out.plot_data) {
    auto f = out.open(".dat");
    for (std::size_t k = 0; k <= final_v.n_modes(); ++k)
      f << io::format_number(final_v.x(k)) << ' ' << io::format_number(final_v.values()[k]) << '\n';
  }
  log << "converged " << (traj.converged ? "true" : "false") << ", attractor " << att.name << ", final residual "
      << io::format_number(traj.final_residual()) << '\n';
  return exit_ok;
}

struct EquilibriumOptions {
  double alpha = 1.0;
  int j = 1;
  std::string sign = "plus";
  std::size_t n = 0;
};

inline int cmd_equilibrium(const EquilibriumOptions& o, const Output& out, std::ostream& log) {
  const auto sign = o.sign == "plus" ? equilibria::Sign::plus : equilibria::Sign::minus;
  const auto orbit = o.n == 0 ? equilibria::reconstruct_resolved_orbit(o.alpha, o.j, sign, default_grid_size)
                              : equilibria::reconstruct_orbit(o.alpha, o.j, sign, o.n);
  const double stationary = equilibria::stationary_residual(orbit);
  {
    auto f = out.open(".csv");
    io::csv_writer w(f);
    w.header({"x", "psi", "psi_prime"});
    for (std::size_t k = 0; k <= orbit.psi.n_modes(); ++k)
      w.row(orbit.psi.x(k), orbit.psi.values()[k], orbit.psi_prime.values()[k]);
  }
  nlohmann::ordered_json doc;
  doc["orbit"] = orbit_name(orbit);
  doc["alpha"] = orbit.alpha;
  doc["j"] = orbit.j;
  doc["sign"] = equilibria::to_string(orbit.sign);
  doc["N"] = orbit.psi.n_modes();
  doc["w0"] = orbit.w0;
  doc["energy"] = orbit.energy;
  doc["period"] = orbit.period;
  doc["h2_residual"] = orbit.h2_residual;
  doc["hamiltonian_drift"] = orbit.hamiltonian_drift;
  doc["closure"] = orbit.closure;
  doc["stationary_residual"] = stationary;
  doc["spectral_tail"] = spectral_tail(orbit.psi);
  out.json(doc);
  if (out.plot_data) {
    auto f = out.open(".dat");
    for (std::size_t k = 0; k <= orbit.psi.n_modes(); ++k)
      f << io::format_number(orbit.psi.x(k)) << ' ' << io::format_number(orbit.psi.values()[k]) << '\n';
  }
  log << orbit_name(orbit) << ": w0 " << io::format_number(orbit.w0) << ", h2 residual "
      << io::format_number(orbit.h2_residual) << ", stationary residual " << io::format_number(stationary) << '\n';
  return exit_ok;
}

struct BifurcationOptions {
  int j = 1;
  double alpha_min = 0.1;
  double alpha_max = 1.99;
  std::size_t steps = 50;
};

struct BifurcationRow {
  double alpha = 0.0;
  double w_hat = 0.0;
  double gap = 0.0;
  bool exists = false;
};

inline int cmd_bifurcation(const BifurcationOptions& o, const Output& out, std::ostream& log) {
  std::vector<BifurcationRow> rows(o.steps);
  parallel_for(o.steps, [&](std::size_t k) {
    const double a = o.alpha_min + (o.alpha_max - o.alpha_min) * static_cast<double>(k) / static_cast<double>(o.steps - 1);
    BifurcationRow r{a, 0.0, 1.0 / a, false};
    if (a < equilibria::branch_threshold(o.j)) {
      const auto b = equilibria::branch_point(a, o.j);
      r = {a, b.w_hat, b.gap, true};
    }
    rows[k] = r;
  });
  {
    auto f = out.open(".csv");
    io::csv_writer w(f);
    w.header({"alpha", "w_hat", "inverse_alpha", "gap", "exists"});
    for (const auto& r : rows) w.row(r.alpha, r.w_hat, 1.0 / r.alpha, r.gap, r.exists ? 1 : 0);
  }
  if (out.plot_data) {
    auto f = out.open(".dat");
    f << "# alpha w_hat inverse_alpha\n";
    for (const auto& r : rows)
      f << io::format_number(r.alpha) << ' ' << io::format_number(r.w_hat) << ' ' << io::format_number(1.0 / r.alpha) << '\n';
  }
  log << rows.size() << " points on branch " << o.j << " written to " << out.path(".csv") << '\n';
  return exit_ok;
}

struct SpectrumOptions {
  BranchOptions branch;
  std::size_t n = 512;
  std::size_t k = 5;
};

inline int cmd_spectrum(const SpectrumOptions& o, const Output& out, std::ostream& log) {
  const auto orbit = select_orbit(o.branch);
  const auto rep = stability::smallest_eigenvalues(stability::assemble_L(orbit, o.n), o.k);
  auto doc = stability::spectrum_json(rep, orbit);
  doc["verdict"] = rep.eigenvalues.front() > 0 ? "stable" : "unstable";
  out.json(doc);
  if (out.plot_data) {
    auto f = out.open(".dat");
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
      f << i + 1 << ' ' << io::format_number(rep.eigenvalues[i]) << '\n';
  }
  log << "eigenvalues";
  for (double e : rep.eigenvalues) log << ' ' << io::format_number(e);
  log << "\nnegative_count " << rep.negative_count << '\n';
  return exit_ok;
}

struct CriteriumOptions {
  BranchOptions branch;
  std::size_t steps = stability::criterium_steps;
};

inline int cmd_criterium(const CriteriumOptions& o, const Output& out, std::ostream& log) {
  const auto orbit = select_orbit(o.branch);
  const auto r = stability::criterium_phi(orbit, o.steps);
  {
    auto f = out.open(".csv");
    stability::write_csv(f, r);
  }
  nlohmann::ordered_json doc;
  doc["orbit"] = orbit_name(orbit);
  doc["alpha"] = orbit.alpha;
  doc["verdict"] = stability::to_string(r.verdict);
  doc["first_zero"] = r.first_zero ? nlohmann::ordered_json(*r.first_zero) : nullptr;
  doc["min_phi"] = r.min_phi;
  doc["wronskian_constant"] = r.wronskian_constant;
  doc["wronskian_deviation"] = r.wronskian_deviation;
  out.json(doc);
  if (out.plot_data) {
    auto f = out.open(".dat");
    for (std::size_t i = 0; i < r.x.size(); ++i) f << io::format_number(r.x[i]) << ' ' << io::format_number(r.phi[i]) << '\n';
  }
  log << "verdict " << stability::to_string(r.verdict);
  if (r.first_zero) log << ", first zero at x = " << io::format_number(*r.first_zero);
  log << '\n';
  return exit_ok;
}

inline int cmd_liapunov(const FlowOptions& o, const Output& out, std::ostream& log) {
  const auto traj = run_flow(o);
  std::vector<double> V, Vdot;
  for (const auto& s : traj.states) {
    V.push_back(stability::liapunov_V(s.v, s.alpha));
    Vdot.push_back(stability::liapunov_Vdot(s));
  }
  {
    auto f = out.open(".csv");
    io::csv_writer w(f);
    w.header({"t", "V", "Vdot"});
    for (std::size_t i = 0; i < V.size(); ++i) w.row(traj.states[i].t, V[i], Vdot[i]);
  }
  if (out.plot_data) {
    auto f = out.open(".dat");
    for (std::size_t i = 0; i < V.size(); ++i) f << io::format_number(traj.states[i].t) << ' ' << io::format_number(V[i]) << '\n';
  }
  for (std::size_t i = 0; i < V.size(); ++i) {
    if (Vdot[i] > 0)
      throw property_violation("Vdot = " + io::format_number(Vdot[i]) + " > 0", traj.states[i].t);
    if (i > 0 && V[i] > V[i - 1] + 1e-9)
      throw property_violation("V increases by " + io::format_number(V[i] - V[i - 1]) + " at t = " +
                                   io::format_number(traj.states[i].t),
                               traj.states[i].t);
  }
  log << "V nonincreasing over " << V.size() << " snapshots, V(end) = " << io::format_number(V.back()) << '\n';
  return exit_ok;
}

struct DiscreteOptions {
  std::string beta = "12*pi";
  double z = 0.1;
  std::string kind = "hardcore";
  double t = 1.0;
  std::vector<std::size_t> n_list{8, 16, 32, 64, 128};
  std::size_t M = discrete::default_fourier_points;
  std::size_t Q = discrete::default_charge_cutoff;
  double dt = 1e-4;
};

inline int cmd_discrete(const DiscreteOptions& o, double beta, const Output& out, std::ostream& log) {
  discrete::CompareOptions opt;
  opt.kind = o.kind == "bessel" ? discrete::ActivityKind::bessel : discrete::ActivityKind::hardcore;
  opt.M = o.M;
  opt.Q = o.Q;
  opt.dt = o.dt;
  const auto table = discrete::continuum_compare(beta, o.z, o.t, o.n_list, opt);
  {
    auto f = out.open(".csv");
    discrete::write_csv(f, table);
  }
  nlohmann::ordered_json doc;
  doc["beta"] = beta;
  doc["alpha"] = discrete::alpha_from_beta(beta);
  doc["converging"] = table.converging;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"n", r.n},
                    {"L", r.L},
                    {"sup_gap", r.sup_gap},
                    {"order_estimate", r.order_estimate ? nlohmann::ordered_json(*r.order_estimate) : nullptr}});
  out.json(doc);
  if (out.plot_data) {
    auto f = out.open(".dat");
    for (const auto& r : table.rows) f << r.n << ' ' << io::format_number(r.sup_gap) << '\n';
  }
  for (const auto& r : table.rows) {
    log << "n " << r.n << " gap " << io::format_number(r.sup_gap);
    if (r.order_estimate) log << " order " << io::format_number(*r.order_estimate);
    log << '\n';
  }
  discrete::require_convergence(table);
  return exit_ok;
}

struct PhaseOptions {
  double alpha = 1.0;
  std::vector<double> w0;
  double x_max = 4.0 * std::numbers::pi;
  std::size_t steps = 4000;
};

inline int cmd_phase_portrait(const PhaseOptions& o, const Output& out, std::ostream& log) {
  std::vector<double> w0 = o.w0;
  if (w0.empty())
    for (double s : {0.2, 0.4, 0.6, 0.8, 0.95, 1.0, 1.2}) w0.push_back(s / o.alpha);
  std::vector<equilibria::PhaseTrace> traces(w0.size());
  parallel_for(w0.size(), [&](std::size_t i) { traces[i] = equilibria::phase_trace(o.alpha, w0[i], o.x_max, o.steps); });
  {
    auto f = out.open(".csv");
    io::csv_writer w(f);
    w.header({"w0", "class", "x", "w", "p"});
    for (const auto& tr : traces)
      for (std::size_t k = 0; k < tr.x.size(); ++k) w.row(tr.w0, equilibria::to_string(tr.kind), tr.x[k], tr.w[k], tr.p[k]);
  }
  nlohmann::ordered_json doc;
  doc["alpha"] = o.alpha;
  auto& orbits = doc["orbits"] = nlohmann::ordered_json::array();
  for (const auto& tr : traces) {
    nlohmann::ordered_json e{{"w0", tr.w0}, {"class", equilibria::to_string(tr.kind)}, {"samples", tr.x.size()}};
    if (tr.kind == equilibria::OrbitClass::closed) e["period"] = equilibria::period({o.alpha, tr.w0}).T;
    orbits.push_back(e);
  }
  out.json(doc);
  if (out.plot_data) {
    auto f = out.open(".dat");
    for (const auto& tr : traces) {
      f << "# w0 = " << io::format_number(tr.w0) << " (" << equilibria::to_string(tr.kind) << ")\n";
      for (std::size_t k = 0; k < tr.x.size(); ++k) f << io::format_number(tr.w[k]) << ' ' << io::format_number(tr.p[k]) << '\n';
      f << "\n\n";
    }
  }
  for (const auto& tr : traces) log << "w0 " << io::format_number(tr.w0) << ": " << equilibria::to_string(tr.kind) << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Hierarchical Coulomb gas RG flow laboratory", "hierarg"};
  app.set_version_flag("--version", std::string(io::version));
  app.require_subcommand(1, 1);

  std::string prefix;
  bool plot_data = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--prefix", prefix, "output path prefix (default: subcommand name)");
    sub->add_flag("--plot-data", plot_data, "also write gnuplot data <prefix>.dat");
  };

  std::map<std::string, std::function<int(Output&)>> actions;

  FlowOptions flow_opt;
  auto* flow_cmd = app.add_subcommand("flow", "evolve v from initial data");
  add_flow_options(flow_cmd, flow_opt);
  actions["flow"] = [&](Output& out) {
    validate(flow_opt);
    out.config = to_json(flow_opt, "flow");
    return cmd_flow(flow_opt, out, log);
  };

  EquilibriumOptions eq_opt;
  auto* eq_cmd = app.add_subcommand("equilibrium", "reconstruct an equilibrium psi_j^±");
  eq_cmd->add_option("--alpha", eq_opt.alpha, "diffusion constant")->capture_default_str();
  eq_cmd->add_option("--j", eq_opt.j, "branch index")->capture_default_str();
  eq_cmd->add_option("--sign", eq_opt.sign, "plus or minus")->check(CLI::IsMember({"plus", "minus"}))->capture_default_str();
  eq_cmd->add_option("--N", eq_opt.n, "grid intervals (0: refine until resolved)")->capture_default_str();
  actions["equilibrium"] = [&](Output& out) {
    require_positive("--alpha", eq_opt.alpha);
    if (eq_opt.j < 1) throw usage_error("--j must be at least 1");
    if (eq_opt.n != 0) require_grid("--N", eq_opt.n);
    out.config = base_config("equilibrium");
    out.config["alpha"] = eq_opt.alpha;
    out.config["j"] = eq_opt.j;
    out.config["sign"] = eq_opt.sign;
    out.config["N"] = eq_opt.n;
    return cmd_equilibrium(eq_opt, out, log);
  };

  BifurcationOptions bif_opt;
  auto* bif_cmd = app.add_subcommand("bifurcation", "sweep w_hat_j(alpha)");
  bif_cmd->add_option("--j", bif_opt.j, "branch index")->capture_default_str();
  bif_cmd->add_option("--alpha-min", bif_opt.alpha_min, "first alpha")->capture_default_str();
  bif_cmd->add_option("--alpha-max", bif_opt.alpha_max, "last alpha, below 2/j^2")->capture_default_str();
  bif_cmd->add_option("--steps", bif_opt.steps, "number of alpha values")->capture_default_str();
  actions["bifurcation"] = [&](Output& out) {
    require_positive("--alpha-min", bif_opt.alpha_min);
    require_positive("--alpha-max", bif_opt.alpha_max);
    if (bif_opt.alpha_max <= bif_opt.alpha_min) throw usage_error("--alpha-max must exceed --alpha-min");
    if (bif_opt.steps < 2) throw usage_error("--steps must be at least 2");
    if (bif_opt.j < 1) throw usage_error("--j must be at least 1");
    out.config = base_config("bifurcation");
    out.config["j"] = bif_opt.j;
    out.config["alpha_min"] = bif_opt.alpha_min;
    out.config["alpha_max"] = bif_opt.alpha_max;
    out.config["steps"] = bif_opt.steps;
    return cmd_bifurcation(bif_opt, out, log);
  };

  SpectrumOptions spec_opt;
  auto* spec_cmd = app.add_subcommand("spectrum", "lowest eigenvalues of the linearized operator");
  add_branch_options(spec_cmd, spec_opt.branch);
  spec_cmd->add_option("--N", spec_opt.n, "finite-difference intervals (Richardson uses N and 2N)")->capture_default_str();
  spec_cmd->add_option("--k", spec_opt.k, "number of eigenvalues")->capture_default_str();
  actions["spectrum"] = [&](Output& out) {
    validate(spec_opt.branch);
    if (spec_opt.n < stability::min_operator_size) throw usage_error("--N must be at least 16");
    if (spec_opt.k < 1 || spec_opt.k > 10) throw usage_error("--k must be between 1 and 10");
    out.config = base_config("spectrum");
    add_to_config(out.config, spec_opt.branch);
    out.config["N"] = spec_opt.n;
    out.config["k"] = spec_opt.k;
    return cmd_spectrum(spec_opt, out, log);
  };

  CriteriumOptions crit_opt;
  auto* crit_cmd = app.add_subcommand("criterium", "shooting test phi on (0, pi]");
  add_branch_options(crit_cmd, crit_opt.branch);
  crit_cmd->add_option("--steps", crit_opt.steps, "RK4 steps on [0, pi]")->capture_default_str();
  actions["criterium"] = [&](Output& out) {
    validate(crit_opt.branch);
    if (crit_opt.steps < 16) throw usage_error("--steps must be at least 16");
    out.config = base_config("criterium");
    add_to_config(out.config, crit_opt.branch);
    out.config["steps"] = crit_opt.steps;
    return cmd_criterium(crit_opt, out, log);
  };

  FlowOptions lia_opt;
  auto* lia_cmd = app.add_subcommand("liapunov", "V(t) along a flow run");
  add_flow_options(lia_cmd, lia_opt);
  actions["liapunov"] = [&](Output& out) {
    validate(lia_opt);
    out.config = to_json(lia_opt, "liapunov");
    return cmd_liapunov(lia_opt, out, log);
  };

  DiscreteOptions dis_opt;
  auto* dis_cmd = app.add_subcommand("discrete", "discrete RG iteration vs continuum flow");
  dis_cmd->add_option("--beta", dis_opt.beta, "inverse temperature, e.g. 12*pi")->capture_default_str();
  dis_cmd->add_option("--z", dis_opt.z, "activity")->capture_default_str();
  dis_cmd->add_option("--kind", dis_opt.kind, "initial charge activity")->check(CLI::IsMember({"hardcore", "bessel"}))->capture_default_str();
  dis_cmd->add_option("--t", dis_opt.t, "scale time")->capture_default_str();
  dis_cmd->add_option("--n", dis_opt.n_list, "step counts, ascending")->delimiter(',')->capture_default_str();
  dis_cmd->add_option("--M", dis_opt.M, "Fourier grid points")->capture_default_str();
  dis_cmd->add_option("--Q", dis_opt.Q, "charge cutoff")->capture_default_str();
  dis_cmd->add_option("--dt", dis_opt.dt, "time step of the continuum reference")->capture_default_str();
  actions["discrete"] = [&](Output& out) {
    const double beta = parse_constant(dis_opt.beta);
    require_positive("--beta", beta);
    require_positive("--z", dis_opt.z);
    require_positive("--dt", dis_opt.dt);
    if (dis_opt.t < 0) throw usage_error("--t must be non-negative");
    if (dis_opt.n_list.empty() || !std::is_sorted(dis_opt.n_list.begin(), dis_opt.n_list.end()) ||
        std::adjacent_find(dis_opt.n_list.begin(), dis_opt.n_list.end()) != dis_opt.n_list.end() ||
        dis_opt.n_list.front() == 0)
      throw usage_error("--n must be a strictly ascending list of positive integers");
    if (!is_power_of_two(dis_opt.M / 2) || dis_opt.M % 2 != 0) throw usage_error("--M must be twice a power of two");
    if (dis_opt.Q < 8 || 2 * dis_opt.Q > dis_opt.M) throw usage_error("--Q must lie in [8, M/2]");
    out.config = base_config("discrete");
    out.config["beta"] = beta;
    out.config["beta_expression"] = dis_opt.beta;
    out.config["z"] = dis_opt.z;
    out.config["kind"] = dis_opt.kind;
    out.config["t"] = dis_opt.t;
    out.config["n"] = dis_opt.n_list;
    out.config["M"] = dis_opt.M;
    out.config["Q"] = dis_opt.Q;
    out.config["dt"] = dis_opt.dt;
    return cmd_discrete(dis_opt, beta, out, log);
  };

  PhaseOptions ph_opt;
  auto* ph_cmd = app.add_subcommand("phase-portrait", "sample and classify phase-plane orbits");
  ph_cmd->add_option("--alpha", ph_opt.alpha, "diffusion constant")->capture_default_str();
  ph_cmd->add_option("--w0", ph_opt.w0, "initial values (default: multiples of 1/alpha)")->delimiter(',');
  ph_cmd->add_option("--x-max", ph_opt.x_max, "integration length in x")->capture_default_str();
  ph_cmd->add_option("--steps", ph_opt.steps, "RK4 steps over [0, x-max]")->capture_default_str();
  actions["phase-portrait"] = [&](Output& out) {
    require_positive("--alpha", ph_opt.alpha);
    require_positive("--x-max", ph_opt.x_max);
    if (ph_opt.steps < 1) throw usage_error("--steps must be positive");
    out.config = base_config("phase-portrait");
    out.config["alpha"] = ph_opt.alpha;
    out.config["w0"] = ph_opt.w0;
    out.config["x_max"] = ph_opt.x_max;
    out.config["steps"] = ph_opt.steps;
    return cmd_phase_portrait(ph_opt, out, log);
  };

  for (auto* sub : app.get_subcommands({})) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  auto* chosen = app.get_subcommands().front();
  Output out;
  out.prefix = prefix.empty() ? chosen->get_name() : prefix;
  out.plot_data = plot_data;
  try {
    return actions.at(chosen->get_name())(out);
  } catch (const usage_error& e) {
    err << "hierarg " << chosen->get_name() << ": " << e.what() << '\n';
    return exit_usage;
  } catch (const expression_error& e) {
    err << "hierarg " << chosen->get_name() << ": " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "hierarg " << chosen->get_name() << ": error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace hierarg::cli
