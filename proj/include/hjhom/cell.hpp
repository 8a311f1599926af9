#ifndef HJHOM_CELL_HPP
#define HJHOM_CELL_HPP

#include <utility>
#include <vector>

#include "hjhom/hamiltonians.hpp"

namespace hjhom {

// Shared solver knobs (cell strips and the box solvers).
struct SolverParams {
  double eps_fix{1e-7};        // sup-residual target of the fixed points
  double ergodic_tol{1e-3};    // plateau tolerance of the vanishing-discount limit
  double rho_tol{5e-3};        // |lambda_{2rho} - lambda_rho| stopping tolerance
  double grid_h{1.0 / 64.0};   // strip grid spacing target
  double eta0{0.2};            // discount schedule eta0 * 2^{-k}
  int eta_steps{7};            // k = 0 .. eta_steps-1
  double rho0{0.0};            // 0 => max(1, 4 ||g||_inf)
  double rho_max{8.0};
  int max_sweeps{200000};      // per discounted stage
  int tangential_samples{33};  // pseudo-controls b in [-M_f, M_f]
  double K{10.0};              // E_K truncation level
  int jobs{0};                 // 0 => hardware concurrency
};

// Strip [-rho, rho] x one period of y2; a node column sits exactly on y1 = 0
// and the y2 wrap is exact (h2 = 1/n2).
struct StripGrid {
  double rho{1.0};
  int n1{0};
  int n2{0};
  double h1{0.0};
  double h2{0.0};

  static StripGrid make(double rho, double h_target);
  int mid() const { return (n1 - 1) / 2; }
  std::size_t size() const { return static_cast<std::size_t>(n1) * n2; }
  std::size_t at(int i, int j) const { return static_cast<std::size_t>(j) * n1 + i; }
  double y1(int i) const { return -rho + h1 * i; }
  double y2(int j) const { return h2 * j; }
};

struct DiscountedSolve {
  double eta{0.0};
  StripGrid grid;
  std::vector<double> values;
  int sweeps{0};
  double residual{0.0};
};

struct CellResult {
  double lambda_rho{0.0};
  StripGrid grid;
  std::vector<double> corrector;  // normalized to vanish at y=(0,0)
  double lipschitz_observed{0.0};
  std::vector<std::pair<double, double>> eta_trace;  // (eta, -eta v^eta(0,0))
};

struct SlopePair {
  double bar{0.0};
  double hat{0.0};
};

struct EffectiveSample {
  double z2{0.0};
  double p2{0.0};
  double E{0.0};
  std::vector<std::pair<double, double>> rho_trace;  // (rho, lambda_rho)
  SlopePair slopes_L;
  SlopePair slopes_R;
  bool converged{false};
};

struct EffectiveTable {
  std::vector<double> z2_grid;
  std::vector<double> p2_grid;
  std::vector<double> values;  // row-major: values[iz * p2_grid.size() + ip]
  std::vector<EffectiveSample> samples;

  struct Tail {
    double f_hat{0.0}, l_hat{0.0}, K_hat{0.0};
    double f_check{0.0}, l_check{0.0}, K_check{0.0};
  };
  std::vector<Tail> tails;  // one per z2

  double K{0.0};      // set by ek_modify
  double M_f{0.0};    // tail slope of E_K
  bool ek_applied{false};

  double value(std::size_t iz, std::size_t ip) const {
    return values[iz * p2_grid.size() + ip];
  }
  // E_K(z2, p2) with bilinear z2 interpolation and the +-M_f affine extension
  // outside the sampled p2 range. Throws table_coverage when z2 is outside.
  double ek_value(double z2, double p2) const;
};

// One discounted solve of the truncated cell problem (freezed data at (0,z2),
// tangential slope p2): state-constrained strip, junction filter at y1 = 0.
DiscountedSolve solve_discounted(const ProblemInstance& in, const Scales& sc, double z2,
                                 double p2, const StripGrid& grid, double eta,
                                 const SolverParams& prm,
                                 const std::vector<double>* warm_start = nullptr);

// One explicit Bellman application of the same operator (exposed for the
// monotonicity/contraction property checks).
std::vector<double> cell_bellman_apply(const ProblemInstance& in, double z2, double p2,
                                       const StripGrid& grid, double eta,
                                       const SolverParams& prm, const std::vector<double>& v);

// Vanishing-discount extraction of lambda_rho on one strip: geometric eta
// schedule with warm starts, Richardson extrapolation of the last two
// -eta v^eta(0,0) values, corrector from the last solve.
CellResult ergodic_constant(const ProblemInstance& in, const Scales& sc, double z2, double p2,
                            double rho, const SolverParams& prm);

// E(z2,p2) = lim_rho lambda_rho via doubling rho until the increment is below
// rho_tol; slopes at level E per side. Throws non_monotone_trace when the
// lambda_rho trace decreases beyond 2*ergodic_tol.
EffectiveSample effective_E(const ProblemInstance& in, const Scales& sc, double z2, double p2,
                            const SolverParams& prm);

// Full table over the given sample axes; independent samples run on a work
// pool, assembly is slot-indexed (deterministic).
EffectiveTable build_effective_table(const ProblemInstance& in, const Scales& sc,
                                     const std::vector<double>& z2_grid,
                                     const std::vector<double>& p2_grid,
                                     const SolverParams& prm);

struct InteriorCellCheck {
  double lambda{0.0};     // 1D ergodic constant
  double reference{0.0};  // H^i(z, p)
  double residual{0.0};   // |lambda - reference|
  double analytic_corrector_residual{0.0};
};

// 1D periodic cell problem in y2 for H~^i(z, p + chi'(y2) e2, y2); the
// analytic corrector p1 g(y2) is evaluated alongside.
InteriorCellCheck interior_cell_check(const ProblemInstance& in, Side side, Vec2 z, Vec2 p,
                                      int n2, const SolverParams& prm);

struct SlopeDiagnostic {
  double rho_star{0.0};
  // Smallest M with chi(y + h1 e1 + h2 e2) - chi(y) >= Pi_bar * h1 - M beyond
  // rho_star (per side, toward the respective wall).
  double M_right{0.0};
  double M_left{0.0};
  // Least-squares growth slopes of the corrector columns on y1 in [1,2] (right)
  // and [-2,-1] (left).
  double fit_slope_right{0.0};
  double fit_slope_left{0.0};
  // Max violation of Pi_bar y1 - slack <= W <= Pi_hat y1 + slack for the
  // rescaled corrector W = eps chi(./eps), eps = 1/rho.
  double sandwich_violation{0.0};
  double sandwich_slack{0.0};
};

SlopeDiagnostic corrector_slope_diagnostic(const CellResult& cell, const EffectiveSample& sample);

// Replaces E by E_K: unchanged on |p2| <= K, affine with slope +-M_f outside.
EffectiveTable ek_modify(EffectiveTable table, double K, double M_f);

// E_K*(z2,b) = max over sampled p2 in [-K,K] of (b p2 - E_K(z2,p2)); the
// +-M_f tails never carry the max for |b| <= M_f, so the sampled grid
// suffices. Throws out_of_domain for |b| > M_f.
double fenchel_star(const EffectiveTable& table, double z2, double b);

// Fits the affine tails and detects K_hat / K_check from second differences;
// called by build_effective_table and exposed for tests.
void fit_tails(EffectiveTable& table, const Scales& sc, const SolverParams& prm);

}  // namespace hjhom

#endif
