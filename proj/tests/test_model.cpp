#include <cmath>

#include "doctest.h"
#include "hjhom/model.hpp"
#include "test_support.hpp"

using namespace hjhom;
using namespace hjhom::testing;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("dynamics presets") {
  auto in = baseline_instance();
  const Control aR = in.spec(Side::R).control(0);  // (1, 0)
  CHECK(in.dynamics(Side::R, {5, 5}, aR).x == 1.0);
  CHECK(in.dynamics(Side::R, {5, 5}, aR).y == 0.0);

  SideSpec scaled = eikonal_side(Side::L, 1.0, 8);
  scaled.dynamics = DynamicsSpec{DynamicsKind::scaled, 0.5, {}};
  SideSpec drift = eikonal_side(Side::R, 1.0, 8);
  drift.dynamics = DynamicsSpec{DynamicsKind::drift, 1.0, {0.2, 0.0}};
  ProblemInstance mixed(scaled, drift, OscillationProfile{}, 1.0);
  CHECK(mixed.dynamics(Side::L, {0, 0}, mixed.spec(Side::L).control(0)).x == 0.5);
  const Control up = mixed.spec(Side::R).control(2);  // (0,1) on the 8-gon
  CHECK(mixed.dynamics(Side::R, {0, 0}, up).x == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(mixed.dynamics(Side::R, {0, 0}, up).y == doctest::Approx(1.0).epsilon(1e-15));

  // wrong-side control is rejected
  CHECK_THROWS_AS((void)in.dynamics(Side::L, {0, 0}, aR), Error);
}

TEST_CASE("cost presets") {
  auto in = baseline_instance();
  CHECK(in.cost(Side::L, {0.3, -2}, in.spec(Side::L).control(5)) == 1.0);

  SideSpec quad = eikonal_side(Side::L, 1.0, 8);
  quad.cost = CostSpec{CostKind::quadratic, 1.0, 0.5, 0.0};
  SideSpec bump = eikonal_side(Side::R, 1.0, 8);
  bump.cost = CostSpec{CostKind::bump, 1.0, 0.0, 0.5};
  ProblemInstance mixed(quad, bump, OscillationProfile{}, 1.0);
  // c + kappa |a|^2 with a = (0.6, 0.8) scaled onto the unit circle entries
  const Control a0 = mixed.spec(Side::L).control(0);
  CHECK(mixed.cost(Side::L, {0, 0}, a0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(mixed.cost(Side::R, {0, 0}, mixed.spec(Side::R).control(0)) ==
        doctest::Approx(1.5).epsilon(1e-15));
  CHECK(mixed.cost(Side::R, {10, 0}, mixed.spec(Side::R).control(0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("straightened dynamics applies the shear at the unstraightened base point") {
  auto in = baseline_instance();
  // g'(0) = 0.2 pi; control (0,1) is index 16 of the 64-gon
  const Control up = in.spec(Side::R).control(16);
  const Vec2 f = in.straightened_dynamics(Side::R, {0.5, 0.0}, up, 0.5);
  CHECK(f.x == doctest::Approx(-0.2 * kPi).epsilon(1e-12));
  CHECK(f.y == doctest::Approx(1.0).epsilon(1e-15));

  auto flat = flat_instance();
  for (int k : {0, 7, 33}) {
    const Control a = flat.spec(Side::L).control(k);
    const Vec2 fs = flat.straightened_dynamics(Side::L, {0.4, 0.3}, a, 0.25);
    const Vec2 fd = flat.dynamics(Side::L, {0.4, 0.3}, a);
    CHECK(fs.x == fd.x);
    CHECK(fs.y == fd.y);
  }

  // norm bound sqrt(2)(1+||g'||) M_f over random samples
  Rng rng(17);
  const double bound = in.sheared_speed_bound();
  for (int k = 0; k < 1000; ++k) {
    const Side s = rng.next_double() < 0.5 ? Side::L : Side::R;
    const Control a =
        in.spec(s).control(static_cast<int>(rng.next_u64() % in.spec(s).controls.size()));
    const Vec2 z{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    CHECK(in.straightened_dynamics(s, z, a, 0.5).norm() <= bound + 1e-12);
  }
}

TEST_CASE("freezed dynamics and cost") {
  auto in = baseline_instance();
  const Control down = in.spec(Side::L).control(48);  // (0,-1)
  const Vec2 f = in.freezed_dynamics(0.0, {-0.5, 0.0}, down);
  CHECK(f.x == doctest::Approx(0.2 * kPi).epsilon(1e-12));
  CHECK(f.y == doctest::Approx(-1.0).epsilon(1e-15));

  // e1 is fixed by the shear
  const Control right = in.spec(Side::R).control(0);
  const Vec2 fr = in.freezed_dynamics(0.0, {0.5, 0.37}, right);
  CHECK(fr.x == 1.0);
  CHECK(fr.y == 0.0);

  // side/region mismatch
  CHECK_THROWS_AS((void)in.freezed_dynamics(0.0, {0.5, 0.0}, down), Error);
  // either side is allowed exactly on the junction
  CHECK_NOTHROW((void)in.freezed_dynamics(0.0, {0.0, 0.0}, down));

  // freezed cost: f2 p2 + cost
  CHECK(in.freezed_cost(0.0, 2.0, down) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(in.freezed_cost(0.3, 0.0, down) == 1.0);
  const double bound = in.M_f() * 2.0 + in.M_ell();
  for (int k = 0; k < 65; ++k)
    CHECK(std::fabs(in.freezed_cost(0.0, 2.0, in.spec(Side::R).control(k))) <= bound + 1e-12);
}

TEST_CASE("inscribed hull radius: regular n-gon oracle") {
  // Exact inscribed radius of the regular n-gon is cos(pi/n).
  for (int n : {8, 16, 32, 64}) {
    const double r = inscribed_radius_at_origin(sample_unit_disc_controls(n));
    CHECK(r == doctest::Approx(std::cos(kPi / n)).epsilon(1e-12));
  }
  // monotone refinement toward 1
  double prev = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const double r = inscribed_radius_at_origin(sample_unit_disc_controls(n));
    CHECK(r >= prev);
    prev = r;
  }
  // degenerate sets
  CHECK(inscribed_radius_at_origin({{1, 0}}) == 0.0);
  CHECK(inscribed_radius_at_origin({{1, 0}, {2, 0}, {3, 0}}) == 0.0);
  CHECK(inscribed_radius_at_origin({{1, 0}, {0, 1}, {1, 1}}) == 0.0);  // origin outside
}

TEST_CASE("validate_assumptions on the baseline") {
  auto in = baseline_instance();
  const AssumptionReport rep = validate_assumptions(in);
  CHECK(rep.passed);
  CHECK(rep.M_f == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.M_ell == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.delta0 == doctest::Approx(std::cos(kPi / 64)).epsilon(1e-12));
  // delta0_tilde = delta0 / (sqrt(2)(1+||g'||))
  CHECK(rep.delta0_tilde ==
        doctest::Approx(rep.delta0 / in.profile().shear_norm_bound()).epsilon(1e-15));
  CHECK(rep.delta0_tilde == doctest::Approx(0.43377).epsilon(2e-3));
  CHECK(rep.delta0_tilde <= rep.delta0);
  CHECK(rep.delta0 <= rep.M_f + 1e-12);
  CHECK(rep.L_f_estimate == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("validate_assumptions rejects degenerate control sets") {
  SideSpec single = eikonal_side(Side::L, 1.0, 8);
  single.controls = {{1.0, 0.0}};
  ProblemInstance in(single, eikonal_side(Side::R, 2.0, 8), baseline_profile(), 1.0);
  CHECK_THROWS_AS((void)validate_assumptions(in), Error);
  try {
    (void)validate_assumptions(in);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_instance);
  }
}
