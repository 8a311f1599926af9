#include "hjhom/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hjhom {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
// Spatial sample used for bound/continuity checks: the paper's assumptions are
// global, the presets make them exact; sampling documents the evaluated range.
constexpr double kSampleBox = 2.0;
constexpr int kSampleLattice = 17;
constexpr int kInterfaceSamples = 64;
}  // namespace

Control SideSpec::control(int index) const {
  if (index < 0 || index >= static_cast<int>(controls.size()))
    fail(Errc::unknown_control, "control index out of range");
  return Control{side, index, controls[static_cast<std::size_t>(index)]};
}

Vec2 SideSpec::f(Vec2 x, Vec2 a) const {
  (void)x;
  switch (dynamics.kind) {
    case DynamicsKind::eikonal: return a;
    case DynamicsKind::scaled: return dynamics.scale * a;
    case DynamicsKind::drift: return a + dynamics.drift;
  }
  return a;
}

double SideSpec::ell(Vec2 x, Vec2 a) const {
  switch (cost.kind) {
    case CostKind::constant: return cost.c;
    case CostKind::quadratic: return cost.c + cost.kappa * dot(a, a);
    case CostKind::bump: return cost.c + cost.bump * std::exp(-dot(x, x));
  }
  return cost.c;
}

double SideSpec::bound_f() const {
  double ra = 0.0;
  for (const Vec2& a : controls) ra = std::max(ra, a.norm());
  switch (dynamics.kind) {
    case DynamicsKind::eikonal: return ra;
    case DynamicsKind::scaled: return std::fabs(dynamics.scale) * ra;
    case DynamicsKind::drift: return ra + dynamics.drift.norm();
  }
  return ra;
}

double SideSpec::bound_ell() const {
  double ra2 = 0.0;
  for (const Vec2& a : controls) ra2 = std::max(ra2, dot(a, a));
  switch (cost.kind) {
    case CostKind::constant: return std::fabs(cost.c);
    case CostKind::quadratic: return std::fabs(cost.c) + std::fabs(cost.kappa) * ra2;
    case CostKind::bump: return std::fabs(cost.c) + std::fabs(cost.bump);
  }
  return std::fabs(cost.c);
}

double SideSpec::lipschitz_f() const { return 0.0; }

double SideSpec::lipschitz_ell() const {
  // |grad_x (b exp(-|x|^2))| <= b sqrt(2/e); constant/quadratic presets are flat in x.
  if (cost.kind == CostKind::bump) return std::fabs(cost.bump) * std::sqrt(2.0 / std::exp(1.0));
  return 0.0;
}

std::vector<Vec2> sample_unit_disc_controls(int n) {
  if (n < 3) fail(Errc::invalid_arg, "control sampling needs at least 3 angles");
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k < n; ++k) {
    const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    out.push_back({std::cos(th), std::sin(th)});
  }
  out.push_back({0.0, 0.0});
  return out;
}

ProblemInstance::ProblemInstance(SideSpec left, SideSpec right, OscillationProfile profile,
                                 double discount)
    : left_(std::move(left)), right_(std::move(right)), profile_(std::move(profile)),
      discount_(discount) {
  left_.side = Side::L;
  right_.side = Side::R;
  if (!(discount_ > 0.0)) fail(Errc::invalid_arg, "discount must be positive");
  if (left_.controls.empty() || right_.controls.empty())
    fail(Errc::invalid_arg, "control lists must be non-empty");
}

void ProblemInstance::check_control(Side side, const Control& a) const {
  if (a.side != side) fail(Errc::unknown_control, "control tagged for the other side");
  const auto& list = spec(side).controls;
  if (a.index < 0 || a.index >= static_cast<int>(list.size()))
    fail(Errc::unknown_control, "control index out of range");
}

Vec2 ProblemInstance::dynamics(Side side, Vec2 x, const Control& a) const {
  check_control(side, a);
  return spec(side).f(x, a.a);
}

double ProblemInstance::cost(Side side, Vec2 x, const Control& a) const {
  check_control(side, a);
  return spec(side).ell(x, a.a);
}

Vec2 ProblemInstance::straightened_dynamics(Side side, Vec2 z, const Control& a,
                                            double eps) const {
  check_control(side, a);
  if (!(eps > 0.0)) fail(Errc::invalid_arg, "eps must be positive");
  const Vec2 x = unstraighten(profile_, z, eps);
  return shear_jacobian(profile_, z.y / eps).apply(spec(side).f(x, a.a));
}

double ProblemInstance::straightened_cost(Side side, Vec2 z, const Control& a,
                                          double eps) const {
  check_control(side, a);
  if (!(eps > 0.0)) fail(Errc::invalid_arg, "eps must be positive");
  return spec(side).ell(unstraighten(profile_, z, eps), a.a);
}

Vec2 ProblemInstance::freezed_dynamics(double z2, Vec2 y, const Control& a) const {
  if (a.side == Side::L && y.x > 0.0)
    fail(Errc::side_mismatch, "left control used at y1 > 0");
  if (a.side == Side::R && y.x < 0.0)
    fail(Errc::side_mismatch, "right control used at y1 < 0");
  check_control(a.side, a);
  const Vec2 f = spec(a.side).f({0.0, z2}, a.a);
  return shear_jacobian(profile_, y.y).apply(f);
}

double ProblemInstance::freezed_cost(double z2, double p2, const Control& a) const {
  check_control(a.side, a);
  const Vec2 base{0.0, z2};
  const Vec2 f = spec(a.side).f(base, a.a);
  return f.y * p2 + spec(a.side).ell(base, a.a);
}

double inscribed_radius_at_origin(const std::vector<Vec2>& points) {
  if (points.size() < 3) return 0.0;
  // Andrew monotone-chain convex hull.
  std::vector<Vec2> pts = points;
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
              return a.x == b.x && a.y == b.y;
            }),
            pts.end());
  if (pts.size() < 3) return 0.0;
  auto cross = [](Vec2 o, Vec2 a, Vec2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return 0.0;

  // Distance from the origin to each hull edge; the origin must lie strictly
  // inside (all signed distances positive for the ccw hull).
  double r = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 p = hull[i];
    const Vec2 q = hull[(i + 1) % hull.size()];
    const Vec2 e = q - p;
    const double len = e.norm();
    if (len == 0.0) continue;
    // signed distance of 0 to the line through p,q (positive inside a ccw hull)
    const double d = (p.x * q.y - p.y * q.x) / len;
    r = std::min(r, d);
  }
  return r > 0.0 ? r : 0.0;
}

AssumptionReport validate_assumptions(const ProblemInstance& instance) {
  AssumptionReport rep;
  const OscillationProfile& g = instance.profile();

  // Spatial samples: a lattice plus interface points of the period-1 interface.
  std::vector<Vec2> sample_x;
  for (int i = 0; i < kSampleLattice; ++i)
    for (int j = 0; j < kSampleLattice; ++j)
      sample_x.push_back({-kSampleBox + 2.0 * kSampleBox * i / (kSampleLattice - 1),
                          -kSampleBox + 2.0 * kSampleBox * j / (kSampleLattice - 1)});
  std::vector<Vec2> interface_x;
  for (int i = 0; i < kInterfaceSamples; ++i) {
    const double t = static_cast<double>(i) / kInterfaceSamples;
    interface_x.push_back({g.value(t), t});
  }
  sample_x.insert(sample_x.end(), interface_x.begin(), interface_x.end());

  double mf = 0.0, ml = 0.0, lf = 0.0, lell = 0.0;
  const double hfd = 1e-5;
  for (Side s : {Side::L, Side::R}) {
    const SideSpec& sp = instance.spec(s);
    for (const Vec2& x : sample_x) {
      for (const Vec2& a : sp.controls) {
        mf = std::max(mf, sp.f(x, a).norm());
        ml = std::max(ml, std::fabs(sp.ell(x, a)));
        for (Vec2 dx : {Vec2{hfd, 0.0}, Vec2{0.0, hfd}}) {
          lf = std::max(lf, (sp.f(x + dx, a) - sp.f(x, a)).norm() / hfd);
          lell = std::max(lell, std::fabs(sp.ell(x + dx, a) - sp.ell(x, a)) / hfd);
        }
      }
    }
  }
  rep.M_f = std::max(mf, instance.M_f());
  rep.M_ell = std::max(ml, instance.M_ell());
  rep.L_f_estimate = lf;
  rep.L_ell_estimate = lell;
  rep.bounded_dynamics_ok = mf <= instance.M_f() * (1.0 + 1e-12);
  rep.bounded_cost_ok = ml <= instance.M_ell() * (1.0 + 1e-12);

  // delta0: inscribed-ball radius of the vectogram hull at interface samples.
  double d0 = std::numeric_limits<double>::max();
  for (Side s : {Side::L, Side::R}) {
    const SideSpec& sp = instance.spec(s);
    for (const Vec2& x : interface_x) {
      std::vector<Vec2> vf;
      vf.reserve(sp.controls.size());
      for (const Vec2& a : sp.controls) vf.push_back(sp.f(x, a));
      d0 = std::min(d0, inscribed_radius_at_origin(vf));
    }
  }
  rep.delta0 = d0;
  rep.delta0_tilde = d0 / g.shear_norm_bound();
  rep.controllability_ok = d0 > 0.0;
  rep.chain_ok = rep.delta0_tilde <= rep.delta0 + 1e-12 && rep.delta0 <= rep.M_f + 1e-12;
  rep.passed = rep.bounded_dynamics_ok && rep.bounded_cost_ok && rep.controllability_ok &&
               rep.chain_ok;
  if (!rep.controllability_ok)
    fail(Errc::degenerate_instance, "controllability fails: delta0 <= 0");
  return rep;
}

}  // namespace hjhom
