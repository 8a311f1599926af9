#include <cmath>

#include "doctest.h"
#include "hjhom/harness.hpp"
#include "test_support.hpp"

using namespace hjhom;
using namespace hjhom::testing;

namespace {

EffectiveTable exact_eikonal_table() {
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

}  // namespace

TEST_CASE("convergence study: constant cost gives vanishing errors") {
  auto cc = ProblemInstance(eikonal_side(Side::L, 1.0), eikonal_side(Side::R, 1.0),
                            baseline_profile(), 1.0);
  const Scales sc = Scales::from(validate_assumptions(cc));
  SolverParams prm;
  EffectiveTable t;
  t.z2_grid = {-1.0, 1.0};
  t.p2_grid = {-3.0, 0.0, 3.0};
  t.M_f = 1.0;
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
  const EffectiveTable tk = ek_modify(t, 3.0, 1.0);
  const BoxGrid grid = BoxGrid::make(1.0, 1.0, 41, 41);
  const ConvergenceReport rep = convergence_study(cc, sc, tk, {0.4, 0.2}, grid, 0.2, prm);
  // both solutions are the constant c/lambda up to solver tolerance
  for (double e : rep.errors) CHECK(e < 2.0 * prm.eps_fix);
}

TEST_CASE("convergence study: flat profile errors are eps-independent") {
  auto flat = flat_instance();
  const Scales sc = Scales::from(validate_assumptions(flat));
  SolverParams prm;
  const EffectiveTable tk = ek_modify(exact_eikonal_table(), 10.0, 1.0);
  const BoxGrid grid = BoxGrid::make(1.0, 1.0, 81, 81);
  const ConvergenceReport rep = convergence_study(flat, sc, tk, {0.4, 0.2}, grid, 0.2, prm);
  // no oscillation: e(eps) is pure discretization error, small on both grids
  for (double e : rep.errors) CHECK(e < 0.05);
}

TEST_CASE("property suite: zero-slack run fails only by solver-scale amounts") {
  auto in = flat_instance();
  const Scales sc = Scales::from(validate_assumptions(in));
  SolverParams prm;
  RunSpec spec;
  spec.z2_grid = {-1.0, 0.0, 1.0};
  spec.p2_grid = {-2.0, -1.0, 0.0, 1.0, 2.0};
  spec.box_n1 = 41;
  spec.box_n2 = 41;
  spec.eps_list = {0.4};
  spec.props_slack = 0.0;
  const PropertyReport rep = property_suite(in, sc, spec, prm);
  CHECK_FALSE(rep.passed);
  int failed = 0;
  for (const auto& c : rep.checks) {
    if (c.pass) continue;
    ++failed;
    // violations are on the order of the solver tolerances, not structural
    CHECK(c.value - c.bound < 0.05);
  }
  CHECK(failed >= 1);
}
