#include <cmath>

#include "doctest.h"
#include "hjhom/solvers.hpp"
#include "test_support.hpp"

using namespace hjhom;
using namespace hjhom::testing;

namespace {

Scales baseline_scales(const ProblemInstance& in) {
  return Scales::from(validate_assumptions(in));
}

EffectiveTable eikonal_table() {
  EffectiveTable t;
  t.z2_grid = {-1.0, 1.0};
  t.M_f = 1.0;
  for (int k = -20; k <= 20; ++k) t.p2_grid.push_back(0.5 * k);
  for (std::size_t iz = 0; iz < 2; ++iz)
    for (double p : t.p2_grid) {
      EffectiveSample s;
      s.z2 = t.z2_grid[iz];
      s.p2 = p;
      s.E = std::fabs(p) - 1.0;
      s.converged = true;
      t.values.push_back(s.E);
      t.samples.push_back(s);
    }
  return t;
}

ProblemInstance constant_cost_instance(double c) {
  return ProblemInstance(eikonal_side(Side::L, c), eikonal_side(Side::R, c),
                         baseline_profile(), 1.0);
}

EffectiveTable constant_table(double c, double K) {
  EffectiveTable t;
  t.z2_grid = {-1.0, 1.0};
  t.p2_grid = {-K, 0.0, K};
  t.M_f = 1.0;
  for (double z2 : t.z2_grid)
    for (double p : t.p2_grid) {
      EffectiveSample s;
      s.z2 = z2;
      s.p2 = p;
      s.E = std::fabs(p) - c;  // exact for constant cost on both sides
      s.converged = true;
      t.values.push_back(s.E);
      t.samples.push_back(s);
    }
  return t;
}

}  // namespace

TEST_CASE("box grid: column on the interface") {
  const BoxGrid g = BoxGrid::make(1.0, 1.0, 41, 41);
  CHECK(g.z1(g.mid()) == 0.0);
  CHECK(g.h1 == doctest::Approx(0.05));
  CHECK_THROWS_AS((void)BoxGrid::make(1.0, 1.0, 40, 41), Error);
}

TEST_CASE("solve_effective: constant cost solves to c/lambda") {
  auto cc = constant_cost_instance(1.0);
  SolverParams prm;
  const EffectiveTable tk = ek_modify(constant_table(1.0, 3.0), 3.0, 1.0);
  const ValueField v = solve_effective(cc, tk, BoxGrid::make(1, 1, 33, 33), prm);
  for (double x : v.values) CHECK(std::fabs(x - 1.0) < 2.0 * prm.eps_fix);
  CHECK(effective_residual(v, cc, tk, prm) <= prm.eps_fix);

  // perturbing one node leaves a visible residual
  ValueField w = v;
  w.values[w.grid.at(5, 7)] += 0.1;
  CHECK(effective_residual(w, cc, tk, prm) >= 0.09);
}

TEST_CASE("solve_effective on the baseline: bounds and comparison") {
  auto in = baseline_instance();
  SolverParams prm;
  const EffectiveTable tk = ek_modify(eikonal_table(), 10.0, 1.0);
  const BoxGrid grid = BoxGrid::make(1.0, 1.0, 41, 41);
  const ValueField v = solve_effective(in, tk, grid, prm);
  for (double x : v.values) CHECK(std::fabs(x) <= in.M_ell() / in.discount() + 1e-6);

  // pointwise cost ordering implies nodewise value ordering
  auto dearer = ProblemInstance(eikonal_side(Side::L, 1.0), eikonal_side(Side::R, 2.5),
                                baseline_profile(), 1.0);
  const ValueField vb = solve_effective(dearer, tk, grid, prm);
  for (std::size_t n = 0; n < v.values.size(); ++n)
    CHECK(v.values[n] <= vb.values[n] + 1e-6);

  // interface column nodes exist and interp matches nodes
  CHECK(v.interp({0.0, 0.0}) == doctest::Approx(v.at(grid.mid(), (grid.n2 - 1) / 2)));
  CHECK_THROWS_AS((void)v.interp({2.0, 0.0}), Error);
}

TEST_CASE("solve_effective requires an ek table with sufficient K") {
  auto in = baseline_instance();
  SolverParams prm;
  const EffectiveTable raw = eikonal_table();
  CHECK_THROWS_AS((void)solve_effective(in, raw, BoxGrid::make(1, 1, 17, 17), prm), Error);
  const EffectiveTable small_k = ek_modify(eikonal_table(), 1.0, 1.0);
  CHECK_THROWS_AS((void)solve_effective(in, small_k, BoxGrid::make(1, 1, 17, 17), prm),
                  Error);
}

TEST_CASE("solve_epsilon: grid resolution guard and flat-profile identity") {
  auto flat = flat_instance();
  SolverParams prm;
  const BoxGrid grid = BoxGrid::make(1.0, 1.0, 41, 41);
  CHECK_THROWS_AS((void)solve_epsilon(flat, 0.1, grid, prm), Error);  // h > eps/8

  // flat profile: no eps-dependence remains (identical fields bitwise)
  const ValueField a = solve_epsilon(flat, 0.4, grid, prm);
  const ValueField b = solve_epsilon(flat, 0.8, grid, prm);
  for (std::size_t n = 0; n < a.values.size(); ++n) CHECK(a.values[n] == b.values[n]);
}

TEST_CASE("solve_epsilon: value bound and constant cost") {
  auto in = baseline_instance();
  SolverParams prm;
  const BoxGrid grid = BoxGrid::make(1.0, 1.0, 41, 41);
  const ValueField v = solve_epsilon(in, 0.4, grid, prm);
  for (double x : v.values) CHECK(std::fabs(x) <= in.M_ell() / in.discount() + 1e-6);

  auto cc = constant_cost_instance(2.0);
  const ValueField vc = solve_epsilon(cc, 0.4, grid, prm);
  for (double x : vc.values) CHECK(std::fabs(x - 2.0) < 2.0 * prm.eps_fix);
}

TEST_CASE("cost shift moves the field by s/lambda") {
  auto in = baseline_instance();
  SolverParams tight;
  tight.eps_fix = 1e-13;
  const double s = 0.3;
  auto shifted = ProblemInstance(eikonal_side(Side::L, 1.0 + s), eikonal_side(Side::R, 2.0 + s),
                                 baseline_profile(), 1.0);
  const BoxGrid grid = BoxGrid::make(0.5, 0.5, 33, 33);
  const ValueField va = solve_epsilon(in, 0.5, grid, tight);
  const ValueField vb = solve_epsilon(shifted, 0.5, grid, tight);
  for (std::size_t n = 0; n < va.values.size(); ++n)
    CHECK(std::fabs(vb.values[n] - va.values[n] - s) < 1e-10);
}

TEST_CASE("map_to_original composes the straightening") {
  auto in = baseline_instance();
  SolverParams prm;
  const BoxGrid grid = BoxGrid::make(1.0, 1.0, 41, 41);
  const ValueField v = solve_epsilon(in, 0.4, grid, prm);
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const Vec2 z{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
    const Vec2 x = unstraighten(in.profile(), z, 0.4);
    CHECK(map_to_original(v, in, 0.4, x) == doctest::Approx(v.interp(z)).epsilon(1e-12));
  }
  // interface points map onto the z1 = 0 column
  const Vec2 xg = unstraighten(in.profile(), {0.0, 0.25}, 0.4);
  CHECK(map_to_original(v, in, 0.4, xg) == doctest::Approx(v.interp({0.0, 0.25})));
}

TEST_CASE("one Bellman sweep of the box operators preserves order") {
  auto in = baseline_instance();
  SolverParams prm;
  const BoxGrid grid = BoxGrid::make(1.0, 1.0, 17, 17);
  const EffectiveTable tk = ek_modify(eikonal_table(), 10.0, 1.0);
  Rng rng(55);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> u(grid.size()), w(grid.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
      u[n] = rng.uniform(-3, 3);
      w[n] = u[n] + rng.uniform(0, 2);
    }
    const auto Tu = epsilon_bellman_apply(in, 0.5, grid, prm, u);
    const auto Tw = epsilon_bellman_apply(in, 0.5, grid, prm, w);
    const auto Su = effective_bellman_apply(in, tk, grid, prm, u);
    const auto Sw = effective_bellman_apply(in, tk, grid, prm, w);
    for (std::size_t n = 0; n < u.size(); ++n) {
      CHECK(Tu[n] <= Tw[n] + 1e-12);
      CHECK(Su[n] <= Sw[n] + 1e-12);
    }
  }
}

TEST_CASE("trajectory simulation: frozen control and value dominance") {
  auto in = baseline_instance();
  const double eps = 0.4;
  // zero control freezes the state: cost = l (1 - e^{-lambda T}) / lambda
  const Control zero = in.spec(Side::L).control(64);
  REQUIRE(zero.a.norm() == 0.0);
  const double T = 10.0;
  const TrajectoryResult tr =
      simulate_trajectory(in, eps, {-0.3, 0.2}, {PolicyPiece{T, zero}}, T, 0.01);
  CHECK(tr.discounted_cost == doctest::Approx(1.0 * (1.0 - std::exp(-T))).epsilon(1e-9));
  CHECK(tr.truncation_bound == doctest::Approx(2.0 * std::exp(-T)).epsilon(1e-12));
  CHECK(tr.state.back().x == -0.3);

  // mixing rule: a left control strictly inside the right region throws
  CHECK_THROWS_AS((void)simulate_trajectory(in, eps, {0.3, 0.0},
                                            {PolicyPiece{1.0, zero}}, 1.0, 0.01),
                  Error);

  // straightened/original equivalence within ODE tolerance
  const Control a = in.spec(Side::L).control(40);
  const Vec2 z0{-0.5, 0.1};
  const TrajectoryResult zs =
      simulate_trajectory(in, eps, z0, {PolicyPiece{2.0, a}}, 2.0, 0.002);
  const double orig = simulate_trajectory_original(
      in, eps, unstraighten(in.profile(), z0, eps), {PolicyPiece{2.0, a}}, 2.0, 0.002);
  CHECK(std::fabs(zs.discounted_cost - orig) < 1e-4);
}
