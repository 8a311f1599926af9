// Command-line front end. Talks to the core exclusively through the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hjhom.h"

namespace {

int run(const std::string& command, const std::string& config, const std::string& out_dir,
        int jobs, const std::vector<std::string>& overrides) {
  hjh_session* session = nullptr;
  hjh_status st = hjh_session_open(config.c_str(), &session);
  if (st != HJH_OK) {
    std::fprintf(stderr, "hjh: %s\n", hjh_last_error());
    return static_cast<int>(st);
  }
  hjh_session_set_out_dir(session, out_dir.c_str());
  hjh_session_set_jobs(session, jobs);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "hjh: --tol-override expects KEY=VAL, got '%s'\n", kv.c_str());
      hjh_session_close(session);
      return 2;
    }
    const std::string key = kv.substr(0, eq);
    char* end = nullptr;
    const double value = std::strtod(kv.c_str() + eq + 1, &end);
    if (end == kv.c_str() + eq + 1) {
      std::fprintf(stderr, "hjh: --tol-override value must be numeric in '%s'\n", kv.c_str());
      hjh_session_close(session);
      return 2;
    }
    st = hjh_session_override(session, key.c_str(), value);
    if (st != HJH_OK) {
      std::fprintf(stderr, "hjh: %s\n", hjh_last_error());
      hjh_session_close(session);
      return static_cast<int>(st);
    }
  }
  st = hjh_run(session, command.c_str());
  if (st == HJH_OK) {
    std::printf("%s\n", hjh_last_summary(session));
  } else {
    const char* summary = hjh_last_summary(session);
    if (summary && summary[0]) std::printf("%s\n", summary);
    std::fprintf(stderr, "hjh: %s\n", hjh_last_error());
  }
  hjh_session_close(session);
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective transmission conditions for Hamilton-Jacobi equations across an "
               "oscillating interface"};
  app.set_version_flag("--version", std::string(hjh_version()));
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "hjh-out";
  int jobs = 0;
  std::vector<std::string> overrides;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"validate", "check the standing assumptions and report the constants"},
      {"effective", "build the effective tangential Hamiltonian table"},
      {"solve-eps", "solve the straightened eps-scale problem"},
      {"solve-limit", "solve the limit problem with the effective transmission condition"},
      {"converge", "run the eps -> 0 convergence study"},
      {"props", "run the full property suite"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (default hjh-out)");
    sub->add_option("--jobs", jobs, "worker cap (default: available cores)");
    sub->add_option("--tol-override", overrides, "KEY=VAL numeric override (repeatable)");
  }

  CLI11_PARSE(app, argc, argv);
  return run(app.get_subcommands().front()->get_name(), config, out_dir, jobs, overrides);
}
