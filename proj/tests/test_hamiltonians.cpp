#include <cmath>

#include "doctest.h"
#include "hjhom/hamiltonians.hpp"
#include "test_support.hpp"

using namespace hjhom;
using namespace hjhom::testing;

namespace {
constexpr double kPi = 3.14159265358979323846;

Scales baseline_scales(const ProblemInstance& in) {
  return Scales::from(validate_assumptions(in));
}

// Exact root of max_k(-q a1k - p2 a2k) - c = level on the increasing branch
// (side R): the smallest q where some control with a1 < 0 reaches the level.
double pl_branch_root_R(const ProblemInstance& in, double p2, double c, double level) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& a : in.spec(Side::R).controls) {
    if (a.x >= 0.0) continue;
    best = std::min(best, (level + c + p2 * a.y) / (-a.x));
  }
  return best;
}
}  // namespace

TEST_CASE("hamiltonian: sampled eikonal oracle") {
  auto in = baseline_instance();
  // closed-form sampled max: |p| cos(angle gap) - c
  const double h = hamiltonian(in, Side::R, {0, 0}, {3, 4});
  CHECK(h == doctest::Approx(eikonal_sampled_h({3, 4}, 2.0)).epsilon(1e-12));
  CHECK(std::fabs(h - 3.0) < 5.0 * (1.0 - std::cos(kPi / 64)) + 1e-12);

  // p = 0: the dynamics term vanishes
  CHECK(hamiltonian(in, Side::L, {7, -3}, {0, 0}) == -1.0);

  // coercivity H >= delta0 |p| - M_ell on random p
  const Scales sc = baseline_scales(in);
  Rng rng(23);
  for (int k = 0; k < 300; ++k) {
    const Vec2 p{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    CHECK(hamiltonian(in, Side::R, {0, 0}, p) >= sc.delta0 * p.norm() - sc.M_ell - 1e-12);
  }
}

TEST_CASE("half hamiltonians: constrained maxima and symmetry") {
  auto in = baseline_instance();
  const Vec2 z{0.0, 0.3};

  // optimum in the open half-disc stays admissible
  const double a = half_hamiltonian(in, Side::R, HalfSign::plus, z, {-3, 4});
  CHECK(a == doctest::Approx(eikonal_sampled_h({-3, 4}, 2.0)).epsilon(1e-12));
  CHECK(std::fabs(a - 3.0) < 0.01);

  // optimum pinned to the a1 = 0 boundary: (0,-1) is sampled, so exact
  const double b = half_hamiltonian(in, Side::R, HalfSign::plus, z, {3, 4});
  CHECK(b == doctest::Approx(2.0).epsilon(1e-12));

  // reflection symmetry of the disc controls
  Rng rng(29);
  for (int k = 0; k < 200; ++k) {
    const Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    CHECK(half_hamiltonian(in, Side::R, HalfSign::minus, z, p) ==
          doctest::Approx(half_hamiltonian(in, Side::R, HalfSign::plus, z, {-p.x, p.y}))
              .epsilon(1e-12));
    // constrained maxima never exceed the full one
    const double full = hamiltonian(in, Side::R, z, p);
    CHECK(half_hamiltonian(in, Side::R, HalfSign::plus, z, p) <= full + 1e-12);
    CHECK(half_hamiltonian(in, Side::R, HalfSign::minus, z, p) <= full + 1e-12);
  }
}

TEST_CASE("interface hamiltonian: max of entering halves, monotone in pL1") {
  auto in = baseline_instance();
  const Vec2 z{0.0, 0.0};
  // H^{+,L} is pinned to a1 = 0 for pL = (-3,4): 4 - 1 = 3; H^{+,R} gives 2.
  const double v = interface_hamiltonian(in, z, {-3, 4}, {3, 4});
  CHECK(v == doctest::Approx(3.0).epsilon(1e-12));

  CHECK(interface_hamiltonian(in, z, {0, 0}, {0, 0}) == doctest::Approx(-1.0));

  // nondecreasing in pL1
  double prev = -1e300;
  for (int m = 0; m <= 40; ++m) {
    const double p1 = -4.0 + 8.0 * m / 40.0;
    const double h = interface_hamiltonian(in, z, {p1, 0.5}, {0.2, 0.5});
    CHECK(h >= prev - 1e-12);
    prev = h;
  }
}

TEST_CASE("oscillatory hamiltonians") {
  auto in = baseline_instance();
  const Vec2 z{0.0, 0.0};
  // g'(y2) = 0 at y2 = 0.25 (peak of sin): reduces to the plain Hamiltonian
  for (int k = 0; k < 20; ++k) {
    const Vec2 p{0.3 * k - 3, 0.2 * k - 2};
    CHECK(oscillatory_hamiltonian(in, Side::R, z, p, 0.25) ==
          doctest::Approx(hamiltonian(in, Side::R, z, p)).epsilon(1e-12));
  }

  // sampled oracle: max over controls of |J~^T p| cos(gap) - c at y2 = 0
  const double gp = 0.2 * kPi;
  const Vec2 p{1.0, 0.0};
  const Vec2 jtp{p.x, -gp * p.x};  // J~(0)^T p
  CHECK(oscillatory_hamiltonian(in, Side::R, z, p, 0.0) ==
        doctest::Approx(eikonal_sampled_h(jtp, 2.0)).epsilon(1e-12));
  CHECK(std::fabs(oscillatory_hamiltonian(in, Side::R, z, p, 0.0) -
                  (std::sqrt(1.0 + gp * gp) - 2.0)) < 2e-3);

  // Lipschitz in p with constant M_f
  Rng rng(31);
  for (int k = 0; k < 200; ++k) {
    const double y2 = rng.uniform(0, 1);
    const Vec2 p1{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const Vec2 p2{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double d = std::fabs(oscillatory_hamiltonian(in, Side::L, z, p1, y2) -
                               oscillatory_hamiltonian(in, Side::L, z, p2, y2));
    // Lipschitz constant of p -> H~ is the sheared speed bound, not M_f: the
    // gradient is -J~(y2) f and |J~ f| reaches (1+||g'||)|f|.
    CHECK(d <= in.sheared_speed_bound() * (p1 - p2).norm() + 1e-12);
  }

  // half version: empty-filter guard never fires for the disc sample
  CHECK_NOTHROW((void)oscillatory_half(in, Side::L, HalfSign::plus, z, p, 0.37));
}

TEST_CASE("eps hamiltonian reduces correctly") {
  auto flat = flat_instance();
  Rng rng(37);
  for (int k = 0; k < 50; ++k) {
    const Vec2 z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Vec2 p{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    CHECK(eps_hamiltonian(flat, Side::R, z, p, 0.3) ==
          doctest::Approx(hamiltonian(flat, Side::R, z, p)).epsilon(1e-13));
  }
  // x-independent presets: equals the oscillatory Hamiltonian at y2 = z2/eps
  auto in = baseline_instance();
  for (int k = 0; k < 50; ++k) {
    const Vec2 z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Vec2 p{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double eps = rng.uniform(0.1, 0.6);
    CHECK(eps_hamiltonian(in, Side::L, z, p, eps) ==
          doctest::Approx(oscillatory_hamiltonian(in, Side::L, z, p, z.y / eps))
              .epsilon(1e-13));
    // periodicity in z2 with period eps (dyadic shift keeps z2/eps exact)
  }
  const double eps = 0.25;
  for (int k = 0; k < 50; ++k) {
    const Vec2 z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Vec2 p{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    CHECK(eps_hamiltonian(in, Side::R, z, p, eps) ==
          doctest::Approx(eps_hamiltonian(in, Side::R, {z.x, z.y + eps}, p, eps))
              .epsilon(1e-12));
  }
}

TEST_CASE("tangential minimum E0") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);

  // eikonal c_R = 2, p2 = 0: minimum -2 at q = 0
  CHECK(tangential_min(in, sc, Side::R, 0.0, 0.0) == doctest::Approx(-2.0).epsilon(1e-7));

  // p2 = 2: dense-scan oracle on the sampled closed form
  double dense = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= 200000; ++m) {
    const double q = -10.0 + 20.0 * m / 200000.0;
    dense = std::min(dense, eikonal_sampled_h({q, 2.0}, 2.0));
  }
  const double e0 = tangential_min(in, sc, Side::R, 0.0, 2.0);
  CHECK(e0 == doctest::Approx(dense).epsilon(5e-6));
  CHECK(std::fabs(e0 - 0.0) < 0.0025);  // vs continuum |p2| - c

  // E0 = max over sides
  const double both = tangential_min_both(in, sc, 0.0, 2.0);
  CHECK(std::fabs(both - 1.0) < 0.0025);
}

TEST_CASE("threshold slopes: argmin interval ends") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);

  const ThresholdSlopes r0 = threshold_slopes(in, sc, Side::R, 0.0, 0.0);
  CHECK(std::fabs(r0.p_plus) < 1e-7);
  CHECK(std::fabs(r0.p_minus) < 1e-7);
  const ThresholdSlopes l0 = threshold_slopes(in, sc, Side::L, 0.0, 0.0);
  CHECK(std::fabs(l0.p_plus) < 1e-7);
  CHECK(std::fabs(l0.p_minus) < 1e-7);

  // ordering invariant on random p2
  Rng rng(41);
  for (int k = 0; k < 25; ++k) {
    const double p2 = rng.uniform(-3, 3);
    const ThresholdSlopes r = threshold_slopes(in, sc, Side::R, 0.0, p2);
    CHECK(r.p_plus <= r.p_minus + 1e-7);
    const ThresholdSlopes l = threshold_slopes(in, sc, Side::L, 0.0, p2);
    CHECK(l.p_minus <= l.p_plus + 1e-7);
  }
}

TEST_CASE("solve_slope: bisection against the piecewise-linear oracle") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);

  // p2 = 0, level 1: branch H^R(q) = q - 2 exactly -> root 3
  const double s = solve_slope(in, sc, Side::R, 0.0, 0.0, 1.0, SlopeWhich::min);
  CHECK(s == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(solve_slope(in, sc, Side::R, 0.0, 0.0, 1.0, SlopeWhich::max) ==
        doctest::Approx(s).epsilon(1e-10));

  // independent PL-root oracle at several (p2, level)
  for (double p2 : {-1.0, 0.5, 2.0}) {
    for (double level : {0.5, 1.0, 2.5}) {
      const double e0 = tangential_min(in, sc, Side::R, 0.0, p2);
      if (level <= e0 + 1e-6) continue;
      const double got = solve_slope(in, sc, Side::R, 0.0, p2, level, SlopeWhich::min);
      const double oracle = pl_branch_root_R(in, p2, 2.0, level);
      CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
    }
  }

  // level = E0 exactly brackets the flat segment (single point for the disc)
  const double e0 = tangential_min(in, sc, Side::R, 0.0, 0.0);
  const double lo = solve_slope(in, sc, Side::R, 0.0, 0.0, e0, SlopeWhich::min);
  const double hi = solve_slope(in, sc, Side::R, 0.0, 0.0, e0, SlopeWhich::max);
  CHECK(lo <= hi + 1e-7);
  CHECK(std::fabs(lo) < 1e-6);
  CHECK(std::fabs(hi) < 1e-6);

  // below the minimum: error
  CHECK_THROWS_AS((void)solve_slope(in, sc, Side::R, 0.0, 0.0, e0 - 1.0, SlopeWhich::min),
                  Error);
}

TEST_CASE("flat/active decomposition of H^{+,R}") {
  auto in = baseline_instance();
  const Scales sc = baseline_scales(in);
  for (double p2 : {0.0, 1.5}) {
    const ThresholdSlopes th = threshold_slopes(in, sc, Side::R, 0.0, p2);
    const double e0 = tangential_min(in, sc, Side::R, 0.0, p2);
    for (int m = 1; m <= 20; ++m) {
      const double d = 0.1 * m;
      CHECK(std::fabs(half_hamiltonian(in, Side::R, HalfSign::plus, {0, 0},
                                       {th.p_plus + d, p2}) -
                      e0) < 1e-6);
      const double q = th.p_plus - d;
      CHECK(std::fabs(half_hamiltonian(in, Side::R, HalfSign::plus, {0, 0}, {q, p2}) -
                      hamiltonian(in, Side::R, {0, 0}, {q, p2})) < 1e-6);
    }
  }
}
