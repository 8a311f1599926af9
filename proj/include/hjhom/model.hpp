#ifndef HJHOM_MODEL_HPP
#define HJHOM_MODEL_HPP

#include <string>
#include <vector>

#include "hjhom/geometry.hpp"

namespace hjhom {

// Dynamics presets: closed-form Lipschitz constants, x-independent velocities.
//   eikonal: f(x,a) = a
//   scaled:  f(x,a) = s * a
//   drift:   f(x,a) = a + d
enum class DynamicsKind { eikonal, scaled, drift };

// Cost presets:
//   constant:  l(x,a) = c
//   quadratic: l(x,a) = c + kappa * |a|^2
//   bump:      l(x,a) = c + b * exp(-|x|^2)
enum class CostKind { constant, quadratic, bump };

struct DynamicsSpec {
  DynamicsKind kind{DynamicsKind::eikonal};
  double scale{1.0};  // scaled
  Vec2 drift{};       // drift
};

struct CostSpec {
  CostKind kind{CostKind::constant};
  double c{1.0};
  double kappa{0.0};  // quadratic
  double bump{0.0};   // bump amplitude
};

// A control is a sampled point of A^i; the side tag travels with it so the two
// sides' control sets stay disjoint as tagged sets.
struct Control {
  Side side{Side::L};
  int index{0};
  Vec2 a{};
};

struct SideSpec {
  Side side{Side::L};
  DynamicsSpec dynamics;
  CostSpec cost;
  std::vector<Vec2> controls;  // sampled A^i (unit-disc sample by default)

  Control control(int index) const;
  Vec2 f(Vec2 x, Vec2 a) const;
  double ell(Vec2 x, Vec2 a) const;

  // Closed-form preset bounds.
  double bound_f() const;
  double bound_ell() const;
  double lipschitz_f() const;    // exact for the presets
  double lipschitz_ell() const;  // valid on the sampling box (see model.cpp)
  bool cost_depends_on_x() const { return cost.kind == CostKind::bump && cost.bump != 0.0; }
};

// n equi-angular unit controls plus the center. Refining n makes the control
// hull fill the unit disc.
std::vector<Vec2> sample_unit_disc_controls(int n);

struct AssumptionReport {
  double M_f{0.0};
  double M_ell{0.0};
  double L_f_estimate{0.0};
  double L_ell_estimate{0.0};
  double delta0{0.0};
  double delta0_tilde{0.0};
  bool passed{false};
  bool bounded_dynamics_ok{false};
  bool bounded_cost_ok{false};
  bool controllability_ok{false};
  bool chain_ok{false};  // delta0_tilde <= delta0 <= M_f
};

class ProblemInstance {
 public:
  ProblemInstance(SideSpec left, SideSpec right, OscillationProfile profile, double discount);

  const SideSpec& spec(Side s) const { return s == Side::L ? left_ : right_; }
  const OscillationProfile& profile() const { return profile_; }
  double discount() const { return discount_; }

  // f^i(x,a); throws unknown_control when the control does not belong to the side.
  Vec2 dynamics(Side side, Vec2 x, const Control& a) const;
  // l^i(x,a)
  double cost(Side side, Vec2 x, const Control& a) const;

  // J~(z2/eps) f^i(G^{-1}(z), a): dynamics of the straightened eps-problem.
  Vec2 straightened_dynamics(Side side, Vec2 z, const Control& a, double eps) const;
  double straightened_cost(Side side, Vec2 z, const Control& a, double eps) const;

  // Freezed cell-problem data at base point (0, z2):
  //   f_{z2}(y,a)      = J~(y2) f^i((0,z2), a), side from the control tag;
  //   l_{z2,p2}(a)     = f2^i((0,z2),a) p2 + l^i((0,z2),a).
  // Throws side_mismatch when a left control is used at y1 > 0 or a right
  // control at y1 < 0.
  Vec2 freezed_dynamics(double z2, Vec2 y, const Control& a) const;
  double freezed_cost(double z2, double p2, const Control& a) const;

  // Preset closed-form bounds (max over the two sides).
  double M_f() const { return std::max(left_.bound_f(), right_.bound_f()); }
  double M_ell() const { return std::max(left_.bound_ell(), right_.bound_ell()); }
  // sqrt(2)(1+||g'||) M_f: bound for all sheared speeds.
  double sheared_speed_bound() const { return profile_.shear_norm_bound() * M_f(); }

  bool dynamics_x_independent() const { return true; }  // holds for every preset
  bool cost_x_independent() const {
    return !left_.cost_depends_on_x() && !right_.cost_depends_on_x();
  }

 private:
  void check_control(Side side, const Control& a) const;

  SideSpec left_;
  SideSpec right_;
  OscillationProfile profile_;
  double discount_;
};

// Checks [H0]-[H3] style assumptions on the sampled instance: bounds by
// exhaustive evaluation, Lipschitz estimates by finite differencing, delta0 as
// the inscribed-ball radius (centered at 0) of each side's vectogram hull at
// sampled interface points. Throws degenerate_instance when delta0 <= 0.
AssumptionReport validate_assumptions(const ProblemInstance& instance);

// Radius of the largest ball centered at the origin inside the convex hull of
// the given points (0 if the origin is outside or on the hull boundary).
double inscribed_radius_at_origin(const std::vector<Vec2>& points);

}  // namespace hjhom

#endif
