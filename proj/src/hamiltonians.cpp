#include "hjhom/hamiltonians.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace hjhom {

namespace {

double scan_max(const SideSpec& sp, Vec2 x, Vec2 p,
                const std::function<bool(Vec2 /*f*/)>& admissible, bool* any) {
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (const Vec2& a : sp.controls) {
    const Vec2 f = sp.f(x, a);
    if (!admissible(f)) continue;
    found = true;
    best = std::max(best, -dot(p, f) - sp.ell(x, a));
  }
  if (any) *any = found;
  return best;
}

// Golden-section minimum of a convex function on [lo,hi]; returns argmin.
double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Boundary of {q : pred(q)} when pred holds on one side of the bracket.
// pred(inside) is true, pred(outside) false; returns the switch point.
double bisect_boundary(const std::function<bool(double)>& pred, double inside, double outside,
                       double tol) {
  double a = inside, b = outside;
  while (std::fabs(b - a) > tol) {
    const double m = 0.5 * (a + b);
    if (pred(m)) a = m;
    else b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace

double hamiltonian(const ProblemInstance& in, Side side, Vec2 x, Vec2 p) {
  return scan_max(in.spec(side), x, p, [](Vec2) { return true; }, nullptr);
}

double half_hamiltonian(const ProblemInstance& in, Side side, HalfSign sign, Vec2 z, Vec2 p) {
  const double s = static_cast<double>(side_sigma(side)) * static_cast<double>(sign);
  bool any = false;
  const double v = scan_max(in.spec(side), z, p,
                            [s](Vec2 f) { return s * f.x >= -kSignTol; }, &any);
  if (!any)
    fail(Errc::empty_constraint_set,
         std::string("half_hamiltonian: no admissible sampled control on side ") +
             side_name(side));
  return v;
}

double interface_hamiltonian(const ProblemInstance& in, Vec2 z, Vec2 pL, Vec2 pR) {
  return std::max(half_hamiltonian(in, Side::L, HalfSign::plus, z, pL),
                  half_hamiltonian(in, Side::R, HalfSign::plus, z, pR));
}

double oscillatory_hamiltonian(const ProblemInstance& in, Side side, Vec2 z, Vec2 p, double y2) {
  const Mat2 J = shear_jacobian(in.profile(), y2);
  const SideSpec& sp = in.spec(side);
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec2& a : sp.controls)
    best = std::max(best, -dot(p, J.apply(sp.f(z, a))) - sp.ell(z, a));
  return best;
}

double oscillatory_half(const ProblemInstance& in, Side side, HalfSign sign, Vec2 z, Vec2 p,
                        double y2) {
  const Mat2 J = shear_jacobian(in.profile(), y2);
  const SideSpec& sp = in.spec(side);
  const double s = static_cast<double>(side_sigma(side)) * static_cast<double>(sign);
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const Vec2& a : sp.controls) {
    const Vec2 fs = J.apply(sp.f(z, a));
    if (s * fs.x < -kSignTol) continue;
    any = true;
    best = std::max(best, -dot(p, fs) - sp.ell(z, a));
  }
  if (!any)
    fail(Errc::empty_constraint_set,
         std::string("oscillatory_half: no admissible sampled control on side ") +
             side_name(side));
  return best;
}

double eps_hamiltonian(const ProblemInstance& in, Side side, Vec2 z, Vec2 p, double eps) {
  if (!(eps > 0.0)) fail(Errc::invalid_arg, "eps must be positive");
  const Vec2 x = unstraighten(in.profile(), z, eps);
  return oscillatory_hamiltonian(in, side, x, p, z.y / eps);
}

namespace {

double coercive_bracket(const Scales& sc, double p2, double level) {
  // H(q) >= delta0 |q| - (M_f |p2| + M_ell) once |q| dominates, so the sublevel
  // set of any target is inside [-B, B] for this B.
  const double base = (sc.M_f * std::fabs(p2) + 2.0 * sc.M_ell) / sc.delta0 + 1.0;
  const double lvl = (std::fabs(level) + sc.M_f * std::fabs(p2) + sc.M_ell) / sc.delta0 + 1.0;
  return std::max(base, lvl);
}

struct Section {
  // q -> H^i((0,z2), p2 e2 + q e1)
  const ProblemInstance& in;
  Side side;
  double z2, p2;
  double operator()(double q) const {
    return hamiltonian(in, side, {0.0, z2}, {q, p2});
  }
};

}  // namespace

double tangential_min(const ProblemInstance& in, const Scales& sc, Side side, double z2,
                      double p2) {
  const Section H{in, side, z2, p2};
  const double B = coercive_bracket(sc, p2, 0.0);
  const double mid = golden_min([&](double q) { return H(q); }, -B, B, kBisectTol);
  const double m = H(mid);
  if (!(H(-B) > m + 0.5 * sc.delta0) || !(H(B) > m + 0.5 * sc.delta0))
    fail(Errc::bracket_failure, "tangential_min: coercivity bracket failed");
  return m;
}

double tangential_min_both(const ProblemInstance& in, const Scales& sc, double z2, double p2) {
  return std::max(tangential_min(in, sc, Side::L, z2, p2),
                  tangential_min(in, sc, Side::R, z2, p2));
}

ThresholdSlopes threshold_slopes(const ProblemInstance& in, const Scales& sc, Side side,
                                 double z2, double p2) {
  const Section H{in, side, z2, p2};
  const double B = coercive_bracket(sc, p2, 0.0);
  const double qmid = golden_min([&](double q) { return H(q); }, -B, B, kBisectTol);
  const double m = H(qmid);
  if (!(H(-B) > m + 0.5 * sc.delta0) || !(H(B) > m + 0.5 * sc.delta0))
    fail(Errc::bracket_failure, "threshold_slopes: coercivity bracket failed");
  const double tol_eq = 1e-10 * (1.0 + std::fabs(m));
  auto in_argmin = [&](double q) { return H(q) <= m + tol_eq; };
  const double left = bisect_boundary(in_argmin, qmid, -B, kBisectTol);
  const double right = bisect_boundary(in_argmin, qmid, B, kBisectTol);
  // Left end: H switches between the full branch and the flat value there.
  if (side == Side::L) return ThresholdSlopes{left, right};
  return ThresholdSlopes{right, left};  // side R: p_minus is the right end
}

double solve_slope(const ProblemInstance& in, const Scales& sc, Side side, double z2, double p2,
                   double level, SlopeWhich which) {
  const Section H{in, side, z2, p2};
  const double e0 = tangential_min(in, sc, side, z2, p2);
  if (level < e0 - kBisectTol)
    fail(Errc::level_below_minimum, "solve_slope: level below E0^i");
  const ThresholdSlopes th = threshold_slopes(in, sc, side, z2, p2);
  const double lo_end = side == Side::L ? th.p_minus : th.p_plus;
  const double hi_end = side == Side::L ? th.p_plus : th.p_minus;

  if (level <= e0 + kBisectTol) {
    // The solution set is the flat bottom [lo_end, hi_end].
    return which == SlopeWhich::min ? lo_end : hi_end;
  }
  const double B = coercive_bracket(sc, p2, level);
  if (side == Side::R) {
    // H = H^{-,R} = level on the nondecreasing branch right of the argmin.
    if (H(B) < level) fail(Errc::bracket_failure, "solve_slope: level above bracket");
    return bisect_boundary([&](double q) { return H(q) <= level; }, hi_end, B, kBisectTol);
  }
  // Side L: H = H^{-,L} = level on the nonincreasing branch left of the argmin.
  if (H(-B) < level) fail(Errc::bracket_failure, "solve_slope: level above bracket");
  return bisect_boundary([&](double q) { return H(q) <= level; }, lo_end, -B, kBisectTol);
}

}  // namespace hjhom
