#include <cmath>

#include "doctest.h"
#include "hjhom/cell.hpp"
#include "test_support.hpp"

using namespace hjhom;
using namespace hjhom::testing;

namespace {

Scales baseline_scales(const ProblemInstance& in) {
  return Scales::from(validate_assumptions(in));
}

ProblemInstance constant_cost_instance(double c) {
  return ProblemInstance(eikonal_side(Side::L, c), eikonal_side(Side::R, c),
                         baseline_profile(), 1.0);
}

// Effective table built from the exact eikonal closed form (fixture for the
// E_K / Fenchel machinery; the solver-built tables are exercised elsewhere).
EffectiveTable synthetic_table(const std::vector<double>& p2_grid) {
  EffectiveTable t;
  t.z2_grid = {0.0};
  t.p2_grid = p2_grid;
  t.M_f = 1.0;
  for (double p : p2_grid) {
    EffectiveSample s;
    s.z2 = 0.0;
    s.p2 = p;
    s.E = std::fabs(p) - 1.0;
    s.converged = true;
    t.values.push_back(s.E);
    t.samples.push_back(s);
  }
  return t;
}

}  // namespace

TEST_CASE("strip grid construction") {
  const StripGrid g = StripGrid::make(2.0, 1.0 / 64.0);
  CHECK(g.n1 % 2 == 1);
  CHECK(g.y1(g.mid()) == 0.0);
  CHECK(g.h2 == 1.0 / g.n2);
  CHECK(g.n2 == 64);
  CHECK(g.y1(0) == -2.0);
  CHECK(g.y1(g.n1 - 1) == 2.0);
}

TEST_CASE("solve_discounted: constant cost fixed point is exact") {
  auto in = constant_cost_instance(1.5);
  const Scales sc = baseline_scales(in);
  SolverParams prm;
  prm.grid_h = 1.0 / 32.0;
  const StripGrid grid = StripGrid::make(1.0, prm.grid_h);
  const double eta = 0.05;
  const DiscountedSolve ds = solve_discounted(in, sc, 0.0, 0.0, grid, eta, prm);
  CHECK(ds.residual <= prm.eps_fix);
  for (double x : ds.values) CHECK(std::fabs(x - 1.5 / eta) < 1e-6);
}

TEST_CASE("solve_discounted: discounted sup bound and junction value") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);
  SolverParams prm;
  prm.grid_h = 1.0 / 32.0;
  const StripGrid grid = StripGrid::make(1.0, prm.grid_h);
  for (double p2 : {0.0, 2.0}) {
    const double eta = 0.05;
    const DiscountedSolve ds = solve_discounted(in, sc, 0.0, p2, grid, eta, prm);
    const double bound = (in.M_f() * std::fabs(p2) + in.M_ell()) / eta;
    for (double x : ds.values) CHECK(std::fabs(x) <= bound * (1 + 1e-9) + 1e-6);
  }
  // sit-still on the cheap side pins the origin value: -eta v(0,0) = -1
  const DiscountedSolve ds = solve_discounted(in, sc, 0.0, 0.0, grid, 0.05, prm);
  const double lam = -0.05 * ds.values[grid.at(grid.mid(), 0)];
  CHECK(std::fabs(lam + 1.0) < 1e-5);
  CHECK(lam >= -1.05);
  CHECK(lam <= -0.95);
}

TEST_CASE("cell Bellman operator: monotone and a contraction") {
  auto in = baseline_instance();
  SolverParams prm;
  prm.grid_h = 1.0 / 16.0;
  const StripGrid grid = StripGrid::make(1.0, prm.grid_h);
  const double eta = 0.1;
  const double dt = std::min(grid.h1, grid.h2) / in.sheared_speed_bound();
  const double gamma = std::exp(-eta * dt);
  Rng rng(101);
  for (int k = 0; k < 10; ++k) {
    std::vector<double> u(grid.size()), w(grid.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
      u[n] = rng.uniform(-5, 5);
      w[n] = u[n] + rng.uniform(0, 3);
    }
    const auto Tu = cell_bellman_apply(in, 0.0, 1.0, grid, eta, prm, u);
    const auto Tw = cell_bellman_apply(in, 0.0, 1.0, grid, eta, prm, w);
    double dmax = 0.0, umax = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
      CHECK(Tu[n] <= Tw[n] + 1e-12);
      dmax = std::max(dmax, std::fabs(Tu[n] - Tw[n]));
      umax = std::max(umax, std::fabs(u[n] - w[n]));
    }
    CHECK(dmax <= gamma * umax + 1e-12);
  }
}

TEST_CASE("ergodic_constant: constant cost and rho monotonicity") {
  auto cc = constant_cost_instance(0.7);
  const Scales scc = baseline_scales(cc);
  SolverParams prm;
  prm.grid_h = 1.0 / 32.0;
  const CellResult r = ergodic_constant(cc, scc, 0.0, 0.0, 1.0, prm);
  CHECK(std::fabs(r.lambda_rho + 0.7) < 1e-4);
  CHECK(r.corrector[r.grid.at(r.grid.mid(), 0)] == 0.0);

  // strip too narrow for the shear band is rejected
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);
  CHECK_THROWS_AS((void)ergodic_constant(in, sc, 0.0, 0.0, 0.15, prm), Error);

  // lambda_rho nondecreasing over rho in {1, 2} (full spread in acceptance)
  const double l1 = ergodic_constant(in, sc, 0.0, 2.0, 1.0, prm).lambda_rho;
  const double l2 = ergodic_constant(in, sc, 0.0, 2.0, 2.0, prm).lambda_rho;
  CHECK(l2 >= l1 - 2e-3);
}

TEST_CASE("ergodic_constant: eikonal band value at p2 = 2") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);
  SolverParams prm;  // default 1/64 grid
  const CellResult r = ergodic_constant(in, sc, 0.0, 2.0, 2.0, prm);
  // band trajectory riding the cheap side at full tangential speed: lambda = 1
  CHECK(std::fabs(r.lambda_rho - 1.0) < 0.05);
  CHECK(r.eta_trace.size() == 7);
  CHECK(r.eta_trace.front().first == 0.2);
  // corrector is normalized at the origin; observed Lipschitz constant obeys
  // L(p2) = (M_f |p2| + M_ell) / delta0~
  CHECK(r.corrector[r.grid.at(r.grid.mid(), 0)] == 0.0);
  const double d0t = sc.delta0 / in.profile().shear_norm_bound();
  const double Lp = (in.M_f() * 2.0 + in.M_ell()) / d0t;
  CHECK(r.lipschitz_observed <= Lp * (1.0 + 2.0 * prm.grid_h));
}

TEST_CASE("effective_E on the baseline matches the eikonal oracle") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);
  SolverParams prm;
  for (double p2 : {0.0, 2.0}) {
    const EffectiveSample s = effective_E(in, sc, 0.0, p2, prm);
    CHECK(s.converged);
    CHECK(std::fabs(s.E - (std::fabs(p2) - 1.0)) < 0.05);
    CHECK(s.E >= tangential_min_both(in, sc, 0.0, p2) - 5e-3);
    CHECK(s.E >= sc.delta0 * std::fabs(p2) - sc.M_ell - 0.05);
    CHECK(s.E <= sc.M_f * std::fabs(p2) + sc.M_ell + 0.05);
    for (std::size_t k = 0; k + 1 < s.rho_trace.size(); ++k)
      CHECK(s.rho_trace[k + 1].second >= s.rho_trace[k].second - 2e-3);
  }
  // slopes at p2 = 0: E = -1, side R root of q - 2 = -1 -> Pi_bar = Pi_hat = 1
  const EffectiveSample s0 = effective_E(in, sc, 0.0, 0.0, prm);
  CHECK(std::fabs(s0.slopes_R.bar - 1.0) < 5e-3);
  CHECK(std::fabs(s0.slopes_R.hat - 1.0) < 5e-3);
  CHECK(s0.slopes_R.bar <= s0.slopes_R.hat + 1e-8);
  CHECK(s0.slopes_L.hat <= s0.slopes_L.bar + 1e-8);
}

TEST_CASE("interior 1D cell identity") {
  SolverParams prm;
  // flat profile: the corrector is constant, the residual is solver noise
  auto flat = flat_instance();
  const InteriorCellCheck f =
      interior_cell_check(flat, Side::R, {0.5, 0.0}, {1.0, 0.0}, 64, prm);
  CHECK(f.residual < 1e-4);
  CHECK(f.analytic_corrector_residual < 1e-10);

  auto in = baseline_instance();
  for (Vec2 p : {Vec2{1, 0}, Vec2{0, 1}, Vec2{1, 1}}) {
    const InteriorCellCheck c = interior_cell_check(in, Side::R, {0.5, 0.0}, p, 128, prm);
    CHECK(c.residual < 0.02 * (1.0 + std::fabs(c.reference)));
    // analytic corrector p1 g(y2) cancels the shear exactly
    CHECK(c.analytic_corrector_residual < 1e-10);
  }
}

TEST_CASE("corrector slope diagnostic on the baseline") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);
  SolverParams prm;
  const EffectiveSample s = effective_E(in, sc, 0.0, 2.0, prm);
  const CellResult cell = ergodic_constant(in, sc, 0.0, 2.0, 2.0, prm);
  const SlopeDiagnostic d = corrector_slope_diagnostic(cell, s);
  // right-side growth slope ~ Pi_bar^R = sqrt((E + c_R)^2 - p2^2)
  const double ref = std::sqrt((s.E + 2.0) * (s.E + 2.0) - 4.0);
  CHECK(std::fabs(s.slopes_R.bar - ref) < 0.01);
  CHECK(std::fabs(d.fit_slope_right - s.slopes_R.bar) < 0.1);
  CHECK(d.sandwich_violation <= d.sandwich_slack);
  CHECK(d.M_right >= 0.0);
}

TEST_CASE("ek_modify: identity inside K, affine outside") {
  std::vector<double> grid;
  for (int k = -20; k <= 20; ++k) grid.push_back(0.5 * k);
  EffectiveTable t = synthetic_table(grid);
  const EffectiveTable tk = ek_modify(t, 10.0, 1.0);
  CHECK(tk.ek_applied);
  CHECK(tk.K == 10.0);
  // |p2| <= K: values unchanged bitwise
  for (std::size_t ip = 0; ip < grid.size(); ++ip)
    CHECK(tk.value(0, ip) == t.value(0, ip));
  // eikonal tail slope is already M_f, and beyond the grid E_K extends affinely
  CHECK(tk.ek_value(0.0, 11.0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(tk.ek_value(0.0, 11.0) == doctest::Approx(tk.ek_value(0.0, 10.0) + 1.0));
}

TEST_CASE("fenchel transform of the truncated table") {
  std::vector<double> grid;
  for (int k = -20; k <= 20; ++k) grid.push_back(0.5 * k);
  const EffectiveTable tk = ek_modify(synthetic_table(grid), 10.0, 1.0);

  // E(p) = |p| - 1: E*(b) = 1 on [-1,1] (sup of bp - |p| + 1 at p = 0 or tie)
  CHECK(fenchel_star(tk, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fenchel_star(tk, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

  // bound |E_K*| <= C_K and K-Lipschitz continuity in b
  const double delta0 = 0.99879545620517241;  // cos(pi/64)
  const double CK = (1.0 - delta0) * 10.0 + 1.0;
  double prev = 0.0;
  for (int m = 0; m <= 40; ++m) {
    const double b = -1.0 + 2.0 * m / 40.0;
    const double st = fenchel_star(tk, 0.0, b);
    CHECK(std::fabs(st) <= CK + 1e-6);
    if (m > 0) CHECK(std::fabs(st - prev) <= 10.0 * (2.0 / 40.0) + 1e-6);
    prev = st;
  }
  CHECK_THROWS_AS((void)fenchel_star(tk, 0.0, 1.5), Error);
}

TEST_CASE("tail fitting detects the eikonal tails") {
  std::vector<double> grid;
  for (int k = -10; k <= 10; ++k) grid.push_back(static_cast<double>(k));
  EffectiveTable t = synthetic_table(grid);
  SolverParams prm;
  Scales sc{1.0, 2.0, 0.9988};
  fit_tails(t, sc, prm);
  REQUIRE(t.tails.size() == 1);
  CHECK(t.tails[0].f_hat == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.tails[0].l_hat == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(t.tails[0].f_check == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.tails[0].K_hat <= 1.0 + 1e-9);
}
