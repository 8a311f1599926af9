#ifndef HJHOM_RUNNER_HPP
#define HJHOM_RUNNER_HPP

#include <string>

#include "hjhom/config.hpp"
#include "hjhom/harness.hpp"

namespace hjhom {

// File emitters (17-significant-digit CSV, LF endings, C locale).
void write_table_csv(const EffectiveTable& table, const std::string& path);
void write_table_sidecar(const EffectiveTable& table, const SolverParams& prm,
                         const std::string& path);
EffectiveTable read_table(const std::string& csv_path, const std::string& sidecar_path);
void write_field_csv(const ValueField& field, const std::string& path);
void write_trajectory_csv(const TrajectoryResult& tr, const std::string& path);
void write_assumption_report(const AssumptionReport& rep, const std::string& path);
void write_property_report(const PropertyReport& rep, const std::string& path);
void write_convergence_report(const ConvergenceReport& rep, const std::string& path);

// Command surface shared by the C API: validate | effective | solve-eps |
// solve-limit | converge | props. Outputs go under out_dir together with a
// manifest (config hash, version, timings).
struct CommandResult {
  int exit_code{0};        // 0 ok, 1 parse, 2 validation, 3 solver, 4 property
  std::string summary;     // one-line human summary
  std::string detail;      // error message when exit_code != 0
};

CommandResult run_command(const std::string& command, const ConfigDocument& config,
                          const std::string& out_dir, int jobs_override);

// Exit-code class of an error code.
int exit_code_for(Errc code);

extern const char* kVersion;

}  // namespace hjhom

#endif
