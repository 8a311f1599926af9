#ifndef HJHOM_SOLVERS_HPP
#define HJHOM_SOLVERS_HPP

#include "hjhom/cell.hpp"

namespace hjhom {

// Rectangular box [-X,X] x [-Y,Y] with a node column exactly on z1 = 0.
struct BoxGrid {
  double z1_extent{1.0};
  double z2_extent{1.0};
  int n1{0};  // odd
  int n2{0};
  double h1{0.0};
  double h2{0.0};

  static BoxGrid make(double z1_extent, double z2_extent, int n1, int n2);
  int mid() const { return (n1 - 1) / 2; }
  std::size_t size() const { return static_cast<std::size_t>(n1) * n2; }
  std::size_t at(int i, int j) const { return static_cast<std::size_t>(j) * n1 + i; }
  double z1(int i) const { return -z1_extent + h1 * i; }
  double z2(int j) const { return -z2_extent + h2 * j; }
};

struct ValueField {
  BoxGrid grid;
  std::vector<double> values;
  double residual{0.0};
  int sweeps{0};
  // Reported accuracy proxy: interpolation/consistency allowance used by the
  // trajectory lower-bound checks. h * Lip(v) bound + fixed-point slack.
  double grid_tolerance{0.0};

  double at(int i, int j) const { return values[grid.at(i, j)]; }
  // Bilinear lookup at a point inside the box; throws out_of_box otherwise.
  double interp(Vec2 z) const;
};

struct EffectiveSolveOptions {
  bool use_tangential{true};  // drop the E-candidates (diagnostic only)
};

// Limit problem: lambda v + H^i = 0 off the interface, transmission condition
// lambda v + max(E, H_Gamma) = 0 on the z1 = 0 column (E through the Fenchel
// candidates of E_K), state constraints on the outer box.
ValueField solve_effective(const ProblemInstance& in, const EffectiveTable& table,
                           const BoxGrid& grid, const SolverParams& prm,
                           const EffectiveSolveOptions& opt = {});

// One explicit Bellman application of the effective operator; the sup update
// certifies fixed-point quality.
double effective_residual(const ValueField& field, const ProblemInstance& in,
                          const EffectiveTable& table, const SolverParams& prm);
std::vector<double> effective_bellman_apply(const ProblemInstance& in,
                                            const EffectiveTable& table, const BoxGrid& grid,
                                            const SolverParams& prm,
                                            const std::vector<double>& v);

// Straightened eps-problem: sheared dynamics everywhere, sign-filtered union
// at the z1 = 0 column. Requires min(h1,h2) <= eps/8.
ValueField solve_epsilon(const ProblemInstance& in, double eps, const BoxGrid& grid,
                         const SolverParams& prm);
std::vector<double> epsilon_bellman_apply(const ProblemInstance& in, double eps,
                                          const BoxGrid& grid, const SolverParams& prm,
                                          const std::vector<double>& v);

// v_eps(x) = (straightened field)(G(x)).
double map_to_original(const ValueField& field, const ProblemInstance& in, double eps, Vec2 x);

// ---------------------------------------------------------------------------
// Trajectory simulation (value-function oracle).
// ---------------------------------------------------------------------------
struct PolicyPiece {
  double duration{0.0};
  Control control;
};

struct TrajectoryResult {
  std::vector<double> t;
  std::vector<Vec2> state;       // straightened coordinates
  std::vector<Control> control;  // control active on [t_k, t_{k+1})
  double discounted_cost{0.0};
  double truncation_bound{0.0};  // M_ell e^{-lambda T} / lambda
};

// Integrates dz/dt = f~_eps(z, a) with midpoint steps; cost accumulated with
// exact exponential weights per step (the integrand is held constant on the
// step). Control side must match the region strictly inside Omega^i
// (mixing_violation otherwise).
TrajectoryResult simulate_trajectory(const ProblemInstance& in, double eps, Vec2 z0,
                                     const std::vector<PolicyPiece>& policy, double horizon,
                                     double dt);

// Same trajectory integrated in the original coordinates (for the
// straightened/original equivalence checks); returns the discounted cost.
double simulate_trajectory_original(const ProblemInstance& in, double eps, Vec2 x0,
                                    const std::vector<PolicyPiece>& policy, double horizon,
                                    double dt);

}  // namespace hjhom

#endif
