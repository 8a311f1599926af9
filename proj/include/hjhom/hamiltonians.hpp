#ifndef HJHOM_HAMILTONIANS_HPP
#define HJHOM_HAMILTONIANS_HPP

#include "hjhom/model.hpp"

namespace hjhom {

// Numerical tolerances shared by the Hamiltonian solvers.
constexpr double kSignTol = 1e-12;    // sign-constraint filter slack
constexpr double kBisectTol = 1e-8;   // 1D minimisation / bisection tolerance

// Bracket constants for the 1D searches, normally taken from a validated
// AssumptionReport.
struct Scales {
  double M_f{1.0};
  double M_ell{1.0};
  double delta0{1.0};

  static Scales from(const AssumptionReport& rep) {
    return Scales{rep.M_f, rep.M_ell, rep.delta0};
  }
};

enum class HalfSign : int { minus = -1, plus = +1 };
enum class SlopeWhich { min, max };

// Breakpoints p0^{-,i}, p0^{+,i} where H^{+-,i} switch between the flat value
// E0^i and the full Hamiltonian. Ordering: p_minus <= p_plus on side L,
// p_plus <= p_minus on side R.
struct ThresholdSlopes {
  double p_minus{0.0};
  double p_plus{0.0};
};

// H^i(x,p) = max_a (-p.f^i(x,a) - l^i(x,a)), exhaustive over the sampled controls.
double hamiltonian(const ProblemInstance& in, Side side, Vec2 x, Vec2 p);

// H^{+-,i}(z,p): same max restricted to +-sigma^i f^i(z,a).e1 >= -kSignTol.
// Throws empty_constraint_set when the sampled filter is empty.
double half_hamiltonian(const ProblemInstance& in, Side side, HalfSign sign, Vec2 z, Vec2 p);

// H_Gamma(z,pL,pR) = max(H^{+,L}(z,pL), H^{+,R}(z,pR)).
double interface_hamiltonian(const ProblemInstance& in, Vec2 z, Vec2 pL, Vec2 pR);

// Fast-variable Hamiltonians: H~^i(z,p,y2) = max_a (-J~(y2) f^i(z,a).p - l^i(z,a)),
// and the sign-filtered versions with the constraint on the sheared velocity.
double oscillatory_hamiltonian(const ProblemInstance& in, Side side, Vec2 z, Vec2 p, double y2);
double oscillatory_half(const ProblemInstance& in, Side side, HalfSign sign, Vec2 z, Vec2 p,
                        double y2);

// H~^i_eps(z,p) = max_a (-J_eps(z) f^i(G^{-1}(z),a).p - l^i(G^{-1}(z),a)).
double eps_hamiltonian(const ProblemInstance& in, Side side, Vec2 z, Vec2 p, double eps);

// E0^i(z2,p2) = min_q H^i((0,z2), p2 e2 + q e1), by golden section on a
// coercivity bracket. Throws bracket_failure when coercivity does not hold.
double tangential_min(const ProblemInstance& in, const Scales& sc, Side side, double z2,
                      double p2);
// E0(z2,p2) = max over sides.
double tangential_min_both(const ProblemInstance& in, const Scales& sc, double z2, double p2);

// The breakpoints of Lemma-type flat/active decompositions: the ends of the
// argmin interval of q -> H^i((0,z2), p2 e2 + q e1), located by bisection.
ThresholdSlopes threshold_slopes(const ProblemInstance& in, const Scales& sc, Side side,
                                 double z2, double p2);

// Elements of {p : H^i = H^{-,i} = level} beyond the threshold slope.
// which selects the min or max of that set. Throws level_below_minimum when
// level < E0^i - kBisectTol.
double solve_slope(const ProblemInstance& in, const Scales& sc, Side side, double z2, double p2,
                   double level, SlopeWhich which);

}  // namespace hjhom

#endif
