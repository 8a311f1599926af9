#ifndef HJHOM_TESTS_SUPPORT_HPP
#define HJHOM_TESTS_SUPPORT_HPP

#include <cmath>
#include <vector>

#include "hjhom/model.hpp"

namespace hjhom::testing {

// Baseline instance used throughout: eikonal dynamics, constant costs
// c_L = 1, c_R = 2, 64+1 unit-disc controls per side, g = 0.1 sin(2 pi t),
// discount 1.
inline SideSpec eikonal_side(Side side, double c, int n = 64) {
  SideSpec s;
  s.side = side;
  s.dynamics.kind = DynamicsKind::eikonal;
  s.cost = CostSpec{CostKind::constant, c, 0.0, 0.0};
  s.controls = sample_unit_disc_controls(n);
  return s;
}

inline OscillationProfile baseline_profile() { return OscillationProfile({0.1}, {}); }

inline ProblemInstance baseline_instance(int n = 64) {
  return ProblemInstance(eikonal_side(Side::L, 1.0, n), eikonal_side(Side::R, 2.0, n),
                         baseline_profile(), 1.0);
}

inline ProblemInstance flat_instance(int n = 64) {
  return ProblemInstance(eikonal_side(Side::L, 1.0, n), eikonal_side(Side::R, 2.0, n),
                         OscillationProfile{}, 1.0);
}

// Closed-form value of max_{a in n-gon+center} (-p . a) - c: the sampled
// eikonal Hamiltonian. Independent reference for the scan-based evaluators.
inline double eikonal_sampled_h(Vec2 p, double c, int n = 64) {
  const double r = p.norm();
  if (r == 0.0) return -c;
  const double phi = std::atan2(-p.y, -p.x);  // direction of -p
  const double step = 2.0 * 3.14159265358979323846 / n;
  // distance from phi to the nearest multiple of step
  double k = std::round(phi / step);
  double delta = std::fabs(phi - k * step);
  return std::max(0.0, r * std::cos(delta)) - c;
}

}  // namespace hjhom::testing

#endif
