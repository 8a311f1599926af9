#ifndef HJHOM_CONFIG_HPP
#define HJHOM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hjhom/cell.hpp"

namespace hjhom {

// Run-block parameters (command-specific knobs).
struct RunSpec {
  std::vector<double> z2_grid{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> p2_grid{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  double box_extent1{1.0};
  double box_extent2{1.0};
  int box_n1{81};
  int box_n2{81};
  double eps{0.1};
  std::vector<double> eps_list{0.4, 0.2, 0.1};
  double window_margin{0.2};
  std::uint64_t seed{12345};
  std::string table_csv;     // optional: reuse a previously written table
  double props_slack{1.0};   // scale on the property-suite tolerances
};

// Parsed and schema-validated configuration document. Unknown keys are
// rejected; tolerances must be strictly positive.
class ConfigDocument {
 public:
  // Throws Errc::parse with a line/column diagnostic on malformed JSON and on
  // schema violations.
  static ConfigDocument parse_text(const std::string& json_text);
  static ConfigDocument parse_file(const std::string& path);

  ProblemInstance make_instance() const;
  const SolverParams& solver() const { return solver_; }
  SolverParams& solver() { return solver_; }
  const RunSpec& run() const { return run_; }
  RunSpec& run() { return run_; }

  // --tol-override KEY=VAL; accepts "solver.<key>", "run.<key>" or bare
  // solver keys. Numeric values only.
  void apply_override(const std::string& key, double value);

  // Canonical serialization (used for the manifest and the config hash).
  const std::string& canonical_text() const { return canonical_; }
  std::uint64_t hash() const { return fnv1a64(canonical_); }

 private:
  SideSpec left_;
  SideSpec right_;
  std::vector<double> fourier_sin_;
  std::vector<double> fourier_cos_;
  double discount_{1.0};
  int control_samples_{64};
  SolverParams solver_;
  RunSpec run_;
  std::string canonical_;
};

}  // namespace hjhom

#endif
