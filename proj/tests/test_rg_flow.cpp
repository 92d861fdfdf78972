#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hierarg/equilibria.hpp"
#include "hierarg/rg_flow.hpp"
#include "oracles/galerkin.hpp"

using namespace hierarg;
using namespace hierarg::flow;
using Catch::Approx;

namespace {

GridFunction sine(double amp, int mode = 1, std::size_t n = 256) {
  return sample(Parity::odd, n, [=](double x) { return amp * std::sin(mode * x); });
}

double coeff_l2_distance(std::span<const double> a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t m = 0; m < b.size(); ++m) s += (a[m] - b[m]) * (a[m] - b[m]);
  return std::sqrt(std::numbers::pi * s);
}

}  // namespace

TEST_CASE("small data decays at the linear rate") {
  const double eps = 1e-6, alpha = 3.0;
  auto tr = evolve(sine(eps), {.alpha = alpha}, 1.0);
  CHECK(tr.final_state().v.coeffs()[1] == Approx(eps * std::exp(-(alpha - 2.0))).epsilon(1e-6));
}

TEST_CASE("zero is a fixed point") {
  auto tr = evolve(GridFunction::zero(Parity::odd), {.alpha = 1.0}, 0.5);
  CHECK(tr.final_state().v.max_abs_value() == 0.0);
  CHECK(tr.converged);
}

TEST_CASE("one step matches a fine explicit Euler oracle") {
  const std::size_t n = 64;
  auto v0 = sine(0.3, 1, n);
  auto s1 = step_v({0.0, 1.0, 1e-3, v0});
  CHECK(s1.t == Approx(1e-3));
  auto ref = oracles::galerkin_euler({v0.coeffs().begin(), v0.coeffs().end()}, 1.0, 1e-3, 10000);
  CHECK(coeff_l2_distance(s1.v.coeffs(), ref) < 1e-8);
}

TEST_CASE("one-step error is third order") {
  const std::size_t n = 64;
  auto v0 = sample(Parity::odd, n, [](double x) { return 0.3 * std::sin(x) + 0.1 * std::sin(2 * x); });
  std::vector<double> errs;
  for (double dt : {8e-3, 4e-3, 2e-3}) {
    auto s = step_v({0.0, 1.0, dt, v0});
    auto ref = oracles::galerkin_rk4({v0.coeffs().begin(), v0.coeffs().end()}, 1.0, dt, 400);
    errs.push_back(coeff_l2_distance(s.v.coeffs(), ref));
  }
  CHECK(errs[0] / errs[1] >= 3.8);
  CHECK(errs[1] / errs[2] >= 3.8);
}

TEST_CASE("oddness is exact") {
  auto tr = evolve(sine(0.3), {.alpha = 1.0, .stride = 50}, 1.0);
  for (const auto& s : tr.states) {
    CHECK(s.v.values().front() == 0.0);
    CHECK(s.v.values().back() == 0.0);
    CHECK(s.v.parity() == Parity::odd);
  }
}

TEST_CASE("supercritical alpha: convergence to zero at rate alpha - 2") {
  auto tr = evolve(sine(0.1), {.alpha = 3.0}, 20.0);
  CHECK(norm(tr.final_state().v, NormKind::L2) < 1e-8);
  CHECK(decay_rate(tr) == Approx(1.0).epsilon(0.02));
  auto tr4 = evolve(sine(0.1), {.alpha = 4.0}, 10.0);
  CHECK(decay_rate(tr4) == Approx(2.0).epsilon(0.02));
}

TEST_CASE("norm decreases for small data above the transition") {
  auto v0 = sample(Parity::odd, 256, [](double x) { return 0.02 * std::sin(x) + 0.01 * std::sin(2 * x); });
  REQUIRE(norm(v0, NormKind::H1) <= 0.1);
  auto tr = evolve(v0, {.alpha = 2.5, .stride = 20}, 5.0);
  for (std::size_t i = 1; i < tr.states.size(); ++i)
    CHECK(norm(tr.states[i].v, NormKind::L2) < norm(tr.states[i - 1].v, NormKind::L2));
}

TEST_CASE("alpha = 1 converges to the first branch") {
  auto tr = evolve(sine(0.1), {.alpha = 1.0}, 20.0);
  const auto& v = tr.final_state().v;
  CHECK(stationary_residual(v, 1.0) < 1e-6);
  auto orbit = equilibria::reconstruct_orbit(1.0, 1);
  CHECK(norm(v - orbit.psi, NormKind::H1) < 1e-5);
  CHECK(!tr.monitor_warning);
  for (const auto& m : tr.monitor_log) CHECK(m.ok());
}

TEST_CASE("decay toward the first branch follows the lowest eigenvalue") {
  auto orbit = equilibria::reconstruct_orbit(1.0, 1);
  auto v0 = orbit.psi + sine(1e-3);
  auto tr = evolve(v0, {.alpha = 1.0, .stride = 50}, 6.0);
  // Lowest eigenvalue of the linearization at the first branch, α = 1
  // (Richardson-extrapolated finite differences, n = 512..2048).
  CHECK(decay_rate(tr, orbit.psi) == Approx(1.89463464).epsilon(0.05));
}

TEST_CASE("second branch is unstable") {
  auto orbit = equilibria::reconstruct_orbit(0.4, 2);
  auto tr = evolve(orbit.psi + sine(1e-3), {.alpha = 0.4, .stride = 50}, 10.0);
  double far = 0.0;
  for (const auto& s : tr.states) far = std::max(far, norm(s.v - orbit.psi, NormKind::L2));
  CHECK(far > 1e-2);
}

TEST_CASE("blow-up is reported with position and time") {
  try {
    evolve(sine(0.1), {.alpha = 1.0, .blow_up_threshold = 0.05}, 1.0);
    FAIL("no blow-up reported");
  } catch (const blow_up_error& e) {
    CHECK(e.time() > 0);
    CHECK(e.position() == Approx(std::numbers::pi / 2).margin(0.05));
  }
}

TEST_CASE("integrated form keeps the origin pinned and matches the v-form") {
  const double z = 0.1, alpha = 1.0;
  auto u0 = sample(Parity::even, 256, [=](double x) { return z * (1 - std::cos(x)); });
  FlowConfig cfg{.alpha = alpha, .stride = 100};
  auto tu = evolve_u_tilde(u0, cfg, 2.0);
  auto tv = evolve(differentiate(u0), cfg, 2.0);
  REQUIRE(tu.states.size() == tv.states.size());
  for (std::size_t i = 0; i < tu.states.size(); ++i) {
    CHECK(std::abs(tu.states[i].v.evaluate(0.0)) < 1e-10);
    CHECK(norm(differentiate(tu.states[i].v) - tv.states[i].v, NormKind::L2) < 1e-6);
  }
}

TEST_CASE("integrated form: standard initial condition decays for alpha = 3") {
  auto u0 = sample(Parity::even, 256, [](double x) { return 0.1 * (1 - std::cos(x)); });
  auto tr = evolve_u_tilde(u0, {.alpha = 3.0}, 20.0);
  CHECK(tr.final_state().v.max_abs_value() < 1e-8);
  auto zero = evolve_u_tilde(GridFunction::zero(Parity::even), {.alpha = 3.0}, 1.0);
  CHECK(zero.final_state().v.max_abs_value() == 0.0);
  CHECK_THROWS_AS(evolve_u_tilde(sample(Parity::even, 64, [](double) { return 1.0; }), {.alpha = 3.0}, 1.0),
                  domain_error);
}

TEST_CASE("recover_u") {
  auto zero = evolve_u_tilde(GridFunction::zero(Parity::even), {.alpha = 1.0}, 0.5);
  auto r0 = recover_u(zero);
  CHECK(r0.u.max_abs_value() == 0.0);

  auto u0 = sample(Parity::even, 128, [](double x) { return 0.1 * (1 - std::cos(x)); });
  auto tr = evolve_u_tilde(u0, {.alpha = 1.0, .stride = 100}, 1.0);
  auto r = recover_u(tr);
  CHECK(!r.tolerance_warning);
  CHECK(r.u.evaluate(0.0) == Approx(r.u_at_origin).margin(1e-14));
  for (double x : {0.5, 1.5, 3.0})
    CHECK(r.u.evaluate(x) - r.u.evaluate(0.0) == Approx(tr.final_state().v.evaluate(x)).margin(1e-13));

  auto coarse = evolve_u_tilde(u0, {.alpha = 1.0, .stride = 100, .multiplier_stride = 20}, 1.0);
  CHECK(recover_u(coarse).tolerance_warning);
}

TEST_CASE("recover_u time quadrature against a refined oracle") {
  // Synthetic trajectory whose multiplier is a Gaussian bump in time.
  Trajectory tr;
  tr.config = {.alpha = 1.0, .dt = 1e-3};
  const double t_end = 1.0;
  auto bump = [](double s) { return std::exp(-(s - 0.5) * (s - 0.5) / 0.01); };
  for (int k = 0; k <= 1000; ++k) tr.multiplier.push_back(bump(k * 1e-3));
  tr.states.push_back({t_end, 1.0, 1e-3, GridFunction::zero(Parity::even, 16)});
  const double got = recover_u(tr).u_at_origin;
  double ref = 0.0;
  const long m = 2000000;
  for (long i = 0; i < m; ++i) {
    const double s = (i + 0.5) * t_end / m;
    ref += std::exp(2 * (t_end - s)) * bump(s);
  }
  ref *= t_end / m;
  CHECK(got == Approx(ref).margin(1e-6));
}

TEST_CASE("simpson rule handles odd interval counts") {
  std::vector<double> f;
  for (int i = 0; i <= 7; ++i) f.push_back(std::pow(i * 0.1, 3));
  CHECK(simpson(f, 0.1) == Approx(std::pow(0.7, 4) / 4).epsilon(1e-13));
}

TEST_CASE("decay rate rejects unsuitable trajectories") {
  auto tr = evolve(sine(0.1), {.alpha = 1.0}, 1.0);
  CHECK_THROWS_AS(decay_rate(tr), estimation_error);
}

TEST_CASE("trajectory export") {
  auto tr = evolve(sine(0.1, 1, 16), {.alpha = 3.0, .stride = 500}, 1.0);
  std::ostringstream out;
  write_csv(out, tr);
  const std::string csv = out.str();
  CHECK(csv.rfind("t,x,v\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 17);
  auto j = summary_json(tr);
  CHECK(j["alpha"] == 3.0);
  CHECK(j["N"] == 16);
  CHECK(j["decay_rate"].is_null());
  CHECK(j.contains("converged"));
}
