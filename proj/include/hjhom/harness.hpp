#ifndef HJHOM_HARNESS_HPP
#define HJHOM_HARNESS_HPP

#include "hjhom/config.hpp"
#include "hjhom/solvers.hpp"

namespace hjhom {

struct ConvergenceReport {
  std::vector<double> eps_list;           // sorted descending
  std::vector<double> errors;             // sup over the window of |v_eps - v|
  std::vector<int> eps_grid_n1;           // per-eps grid resolution
  double window_margin{0.2};
  int effective_n1{0};
  bool pass{false};
};

// Solves the effective problem once on `effective_grid` and the eps-problem
// per eps on grids with spacing eps/8; reports e(eps) = sup over the window
// (box minus a margin of width window_margin * box side) of |v_eps - v|.
// Acceptance is trend-based: strict decrease from the largest to the smallest
// eps plus non-increase up to 10% slack between neighbours.
ConvergenceReport convergence_study(const ProblemInstance& in, const Scales& sc,
                                    const EffectiveTable& table,
                                    const std::vector<double>& eps_list,
                                    const BoxGrid& effective_grid, double window_margin,
                                    const SolverParams& prm);

struct PropertyCheck {
  std::string name;
  std::string anchor;  // the mathematical statement being checked
  double value{0.0};
  double bound{0.0};
  double tolerance{0.0};
  bool pass{false};
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;
  bool passed{false};
};

// Runs every module invariant at the configured sample densities; failures are
// report entries, not errors. `spec.props_slack` scales the tolerances (a
// zero-slack run demonstrates the calibration of the default slack).
PropertyReport property_suite(const ProblemInstance& in, const Scales& sc, const RunSpec& spec,
                              const SolverParams& prm);

}  // namespace hjhom

#endif
