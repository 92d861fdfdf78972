#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hierarg/stability.hpp"

using namespace hierarg;
using namespace hierarg::stability;
namespace eq = hierarg::equilibria;
using Catch::Approx;

constexpr double pi = std::numbers::pi;

TEST_CASE("weight p") {
  auto zero = eq::trivial_orbit(1.0);
  auto p0 = weight_p(zero);
  for (double v : p0.values()) CHECK(v == 1.0);

  auto o = eq::reconstruct_orbit(1.0, 1);
  auto p = weight_p(o);
  CHECK(p.values()[0] == Approx(1.0).margin(1e-14));
  for (double v : p.values()) CHECK(v > 0);
  const double phi_pi = integrate_from_zero(o.psi).evaluate(pi);
  CHECK(phi_pi > 0);
  CHECK(p.evaluate(pi) == Approx(std::exp(-2 * phi_pi)).epsilon(1e-12));
  CHECK(p.evaluate(pi) < 1.0);
  CHECK(p.evaluate(0.7) == Approx(p.evaluate(-0.7)).epsilon(1e-14));
}

TEST_CASE("operator matrix structure") {
  auto m = assemble_L(eq::reconstruct_orbit(1.0, 1), 64);
  CHECK(m.diag.size() == 63);
  CHECK(m.offdiag.size() == 62);
  for (double w : m.mass) CHECK(w > 0);
  CHECK_THROWS_AS(assemble_L(eq::trivial_orbit(1.0), 8), sizing_error);
}

TEST_CASE("trivial spectrum converges to alpha n^2 - 2 at second order") {
  for (double alpha : {0.4, 1.0, 2.0, 3.0}) {
    auto zero = eq::trivial_orbit(alpha);
    std::vector<double> err_n, err_2n;
    auto e1 = eigenvalues(assemble_L(zero, 128), 5);
    auto e2 = eigenvalues(assemble_L(zero, 256), 5);
    for (int k = 1; k <= 5; ++k) {
      const double exact = alpha * k * k - 2.0;
      err_n.push_back(std::abs(e1[k - 1] - exact));
      err_2n.push_back(std::abs(e2[k - 1] - exact));
      CHECK(err_n.back() / err_2n.back() == Approx(4.0).epsilon(0.01));
    }
    auto rep = smallest_eigenvalues(assemble_L(zero, 512), 5);
    for (int k = 1; k <= 5; ++k) CHECK(rep.eigenvalues[k - 1] == Approx(alpha * k * k - 2).margin(1e-6));
  }
  CHECK(smallest_eigenvalues(assemble_L(eq::trivial_orbit(3.0), 512), 1).eigenvalues[0] == Approx(1.0).margin(1e-4));
  CHECK(std::abs(smallest_eigenvalues(assemble_L(eq::trivial_orbit(2.0), 512), 1).eigenvalues[0]) < 1e-4);
}

TEST_CASE("first branch spectrum at alpha = 1") {
  // Richardson values from n = 1024/2048 (frozen refinement oracle).
  auto rep = smallest_eigenvalues(assemble_L(eq::reconstruct_orbit(1.0, 1), 512), 5);
  const double ref[] = {1.89463464, 5.13092916, 9.45756722, 16.27675244, 25.22153967};
  for (int i = 0; i < 5; ++i) CHECK(rep.eigenvalues[i] == Approx(ref[i]).margin(2e-7));
  CHECK(rep.negative_count == 0);
  CHECK(rep.grid_sizes == std::vector<std::size_t>{512, 1024});
}

TEST_CASE("negative counts") {
  CHECK(smallest_eigenvalues(assemble_L(eq::trivial_orbit(0.4), 512), 3).negative_count == 2);
  CHECK(smallest_eigenvalues(assemble_L(eq::reconstruct_orbit(0.4, 2), 512), 3).negative_count == 1);
  CHECK(smallest_eigenvalues(assemble_L(eq::reconstruct_orbit(0.4, 1), 512), 3).negative_count == 0);
  for (int j = 1; j <= 3; ++j) {
    auto o = eq::reconstruct_resolved_orbit(0.15, j);
    CHECK(smallest_eigenvalues(assemble_L(o, 512), 3).negative_count == static_cast<std::size_t>(j - 1));
  }
  auto rep = smallest_eigenvalues(assemble_L(eq::trivial_orbit(0.4), 512), 2);
  CHECK(rep.eigenvalues[0] == Approx(-1.6).margin(1e-6));
  CHECK(rep.eigenvalues[1] == Approx(-0.4).margin(1e-6));
  CHECK_THROWS_AS(smallest_eigenvalues(assemble_L(eq::trivial_orbit(0.4), 512), 11), domain_error);
}

TEST_CASE("spectrum JSON") {
  auto o = eq::reconstruct_orbit(1.0, 1);
  auto j = spectrum_json(smallest_eigenvalues(assemble_L(o, 64), 2), o);
  CHECK(j["branch"]["j"] == 1);
  CHECK(j["branch"]["sign"] == "plus");
  CHECK(j["eigenvalues"].size() == 2);
  CHECK(j["grid_sizes"][1] == 128);
}

TEST_CASE("criterium on the trivial solution has a closed form") {
  auto c3 = criterium_phi(eq::trivial_orbit(3.0));
  CHECK(c3.verdict == Verdict::stable);
  const double k = std::sqrt(2.0 / 3.0);
  for (std::size_t i = 0; i < c3.x.size(); i += 512) CHECK(c3.phi[i] == Approx(std::sin(k * c3.x[i]) / k).margin(1e-12));

  auto c15 = criterium_phi(eq::trivial_orbit(1.5));
  CHECK(c15.verdict == Verdict::unstable);
  REQUIRE(c15.first_zero);
  CHECK(*c15.first_zero == Approx(pi * std::sqrt(0.75)).margin(1e-10));

  CHECK(criterium_phi(eq::trivial_orbit(2.0)).verdict == Verdict::inconclusive);
}

TEST_CASE("criterium on branches") {
  auto o2 = eq::reconstruct_orbit(0.4, 2);
  auto c = criterium_phi(o2);
  CHECK(c.verdict == Verdict::unstable);
  REQUIRE(c.first_zero);
  CHECK(*c.first_zero < 3 * pi / 4);
  // The zero precedes the minimum of ψ₂⁺.
  CHECK(*c.first_zero < 2.0884365483268867);

  for (double alpha : {0.5, 1.0, 1.5}) CHECK(criterium_phi(eq::reconstruct_orbit(alpha, 1)).verdict == Verdict::stable);

  std::ostringstream out;
  write_csv(out, c);
  CHECK(out.str().rfind("x,phi\n", 0) == 0);
}

TEST_CASE("criterium agrees with the sign of the spectrum") {
  struct Case { double alpha; int j; };
  for (auto cs : {Case{0.5, 1}, Case{1.0, 1}, Case{0.15, 2}, Case{0.15, 3}, Case{0.4, 2}, Case{0.35, 2},
                  Case{3.0, 0}, Case{1.0, 0}, Case{0.4, 1}}) {
    auto o = eq::reconstruct_resolved_orbit(cs.alpha, cs.j);
    const double lowest = smallest_eigenvalues(assemble_L(o, 512), 1).eigenvalues[0];
    const auto v = criterium_phi(o).verdict;
    CHECK((v == Verdict::stable) == (lowest > 0));
  }
}

TEST_CASE("identities along orbits") {
  for (auto [alpha, j] : {std::pair{1.0, 1}, std::pair{0.4, 2}, std::pair{0.35, 2}}) {
    auto rep = identity_checks(eq::reconstruct_orbit(alpha, j));
    CHECK(rep.chi_residual < 1e-6);
    CHECK(rep.psi_prime_residual < 1e-6);
    CHECK(rep.wronskian_deviation < 1e-6);
  }
  auto rep = identity_checks(eq::reconstruct_orbit(0.35, 2));
  CHECK(rep.wronskian_constant == Approx(0.35 * 2.7472207100569693343).margin(1e-6));
  auto triv = identity_checks(eq::trivial_orbit(1.0));
  CHECK(triv.skipped);
  CHECK(!triv.note.empty());
}

TEST_CASE("Liapunov functional") {
  CHECK(liapunov_V(GridFunction::zero(Parity::odd), 1.0) == 0.0);
  auto small = sample(Parity::odd, 256, [](double x) { return 0.01 * std::sin(x); });
  CHECK(liapunov_V(small, 3.0) == Approx(0.5 * pi * 1e-4).epsilon(1e-3));
  CHECK(liapunov_V(eq::reconstruct_orbit(1.0, 1).psi, 1.0) < 0);
  auto steep = sample(Parity::odd, 256, [](double x) { return 2.0 * std::sin(x); });
  CHECK_THROWS_AS(liapunov_V(steep, 1.0), domain_error);
}

TEST_CASE("Liapunov derivative") {
  for (auto [alpha, j] : {std::pair{1.0, 1}, std::pair{0.4, 2}, std::pair{0.15, 3}})
    CHECK(std::abs(liapunov_Vdot(eq::reconstruct_orbit(alpha, j).psi, alpha)) < 1e-10);
  auto v = sample(Parity::odd, 256, [](double x) { return 0.1 * std::sin(x); });
  CHECK(liapunov_Vdot(v, 3.0) < 0);
}

TEST_CASE("Liapunov derivative matches a finite difference along the flow") {
  auto v0 = sample(Parity::odd, 256, [](double x) { return 0.1 * std::sin(x); });
  auto tr = flow::evolve(v0, {.alpha = 1.0, .dt = 1e-3, .stride = 500}, 2.0);
  const double delta = 1e-5;
  for (const auto& s : tr.states) {
    auto fwd = flow::evolve(s.v, {.alpha = 1.0, .dt = delta / 10, .stride = 10}, delta).final_state().v;
    const double fd = (liapunov_V(fwd, 1.0) - liapunov_V(s.v, 1.0)) / delta;
    CHECK(fd == Approx(liapunov_Vdot(s)).epsilon(1e-2));
  }
}

TEST_CASE("Liapunov functional decreases along trajectories") {
  auto v0 = sample(Parity::odd, 256, [](double x) { return 0.1 * std::sin(x) + 0.05 * std::sin(3 * x); });
  auto tr = flow::evolve(v0, {.alpha = 1.0, .stride = 200}, 10.0);
  for (std::size_t i = 1; i < tr.states.size(); ++i) {
    CHECK(liapunov_V(tr.states[i].v, 1.0) <= liapunov_V(tr.states[i - 1].v, 1.0) + 1e-9);
    CHECK(liapunov_Vdot(tr.states[i]) <= 0);
  }
}
