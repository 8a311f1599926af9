#include "hjhom/runner.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hjhom {

using nlohmann::json;
namespace fs = std::filesystem;

const char* kVersion = "0.1.0";

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io, "cannot open for writing: " + path);
  f << text;
  if (!f) fail(Errc::io, "write failed: " + path);
}

json tail_json(const EffectiveTable::Tail& t) {
  return json{{"f_hat", t.f_hat},     {"l_hat", t.l_hat},     {"K_hat", t.K_hat},
              {"f_check", t.f_check}, {"l_check", t.l_check}, {"K_check", t.K_check}};
}

json solver_json(const SolverParams& p) {
  return json{{"eps_fix", p.eps_fix},
              {"ergodic_tol", p.ergodic_tol},
              {"rho_tol", p.rho_tol},
              {"grid_h", p.grid_h},
              {"eta0", p.eta0},
              {"eta_steps", p.eta_steps},
              {"rho0", p.rho0},
              {"rho_max", p.rho_max},
              {"max_sweeps", p.max_sweeps},
              {"tangential_samples", p.tangential_samples},
              {"K", p.K}};
}

}  // namespace

void write_table_csv(const EffectiveTable& t, const std::string& path) {
  std::ostringstream out;
  out << "z2,p2,E,Pi_bar_L,Pi_hat_L,Pi_bar_R,Pi_hat_R,converged\n";
  const std::size_t np = t.p2_grid.size();
  for (std::size_t iz = 0; iz < t.z2_grid.size(); ++iz) {
    for (std::size_t ip = 0; ip < np; ++ip) {
      const EffectiveSample& s = t.samples[iz * np + ip];
      out << fmt17(s.z2) << ',' << fmt17(s.p2) << ',' << fmt17(s.E) << ','
          << fmt17(s.slopes_L.bar) << ',' << fmt17(s.slopes_L.hat) << ','
          << fmt17(s.slopes_R.bar) << ',' << fmt17(s.slopes_R.hat) << ','
          << (s.converged ? 1 : 0) << '\n';
    }
  }
  write_text(path, out.str());
}

void write_table_sidecar(const EffectiveTable& t, const SolverParams& prm,
                         const std::string& path) {
  json j;
  j["K"] = t.K;
  j["M_f"] = t.M_f;
  j["ek_applied"] = t.ek_applied;
  j["z2_grid"] = t.z2_grid;
  j["p2_grid"] = t.p2_grid;
  j["tails"] = json::array();
  for (const auto& tl : t.tails) j["tails"].push_back(tail_json(tl));
  j["solver"] = solver_json(prm);
  json traces = json::array();
  for (const auto& s : t.samples) {
    json tr = json::array();
    for (const auto& [rho, lam] : s.rho_trace) tr.push_back(json::array({rho, lam}));
    traces.push_back(tr);
  }
  j["rho_traces"] = traces;
  write_text(path, j.dump(2) + "\n");
}

EffectiveTable read_table(const std::string& csv_path, const std::string& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) fail(Errc::io, "cannot open table sidecar: " + sidecar_path);
  json j;
  try {
    side >> j;
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("table sidecar: ") + e.what());
  }
  EffectiveTable t;
  t.K = j.at("K").get<double>();
  t.M_f = j.at("M_f").get<double>();
  t.ek_applied = j.at("ek_applied").get<bool>();
  t.z2_grid = j.at("z2_grid").get<std::vector<double>>();
  t.p2_grid = j.at("p2_grid").get<std::vector<double>>();
  for (const auto& tl : j.at("tails")) {
    EffectiveTable::Tail tail;
    tail.f_hat = tl.at("f_hat").get<double>();
    tail.l_hat = tl.at("l_hat").get<double>();
    tail.K_hat = tl.at("K_hat").get<double>();
    tail.f_check = tl.at("f_check").get<double>();
    tail.l_check = tl.at("l_check").get<double>();
    tail.K_check = tl.at("K_check").get<double>();
    t.tails.push_back(tail);
  }

  std::ifstream csv(csv_path);
  if (!csv) fail(Errc::io, "cannot open table csv: " + csv_path);
  std::string line;
  if (!std::getline(csv, line) ||
      line != "z2,p2,E,Pi_bar_L,Pi_hat_L,Pi_bar_R,Pi_hat_R,converged")
    fail(Errc::parse, "table csv: unexpected header");
  const std::size_t expect = t.z2_grid.size() * t.p2_grid.size();
  t.values.assign(expect, 0.0);
  t.samples.assign(expect, EffectiveSample{});
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    if (row >= expect) fail(Errc::parse, "table csv: too many rows");
    EffectiveSample s;
    int conv = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%d", &s.z2, &s.p2, &s.E,
                    &s.slopes_L.bar, &s.slopes_L.hat, &s.slopes_R.bar, &s.slopes_R.hat,
                    &conv) != 8)
      fail(Errc::parse, "table csv: malformed row: " + line);
    s.converged = conv != 0;
    t.values[row] = s.E;
    t.samples[row] = s;
    ++row;
  }
  if (row != expect) fail(Errc::parse, "table csv: row count does not match the sidecar axes");
  return t;
}

void write_field_csv(const ValueField& f, const std::string& path) {
  std::ostringstream out;
  out << "z1,z2,v\n";
  for (int j = 0; j < f.grid.n2; ++j)
    for (int i = 0; i < f.grid.n1; ++i)
      out << fmt17(f.grid.z1(i)) << ',' << fmt17(f.grid.z2(j)) << ',' << fmt17(f.at(i, j))
          << '\n';
  write_text(path, out.str());
}

void write_trajectory_csv(const TrajectoryResult& tr, const std::string& path) {
  std::ostringstream out;
  out << "t,y1,y2,a1,a2,side\n";
  for (std::size_t k = 0; k < tr.state.size(); ++k) {
    const Control& a = k < tr.control.size() ? tr.control[k] : tr.control.back();
    out << fmt17(tr.t[k]) << ',' << fmt17(tr.state[k].x) << ',' << fmt17(tr.state[k].y) << ','
        << fmt17(a.a.x) << ',' << fmt17(a.a.y) << ',' << side_name(a.side) << '\n';
  }
  write_text(path, out.str());
}

void write_assumption_report(const AssumptionReport& rep, const std::string& path) {
  json j{{"M_f", rep.M_f},
         {"M_ell", rep.M_ell},
         {"L_f_estimate", rep.L_f_estimate},
         {"L_ell_estimate", rep.L_ell_estimate},
         {"delta0", rep.delta0},
         {"delta0_tilde", rep.delta0_tilde},
         {"passed", rep.passed},
         {"checks",
          {{"bounded_dynamics", rep.bounded_dynamics_ok},
           {"bounded_cost", rep.bounded_cost_ok},
           {"controllability", rep.controllability_ok},
           {"constant_chain", rep.chain_ok}}}};
  write_text(path, j.dump(2) + "\n");
}

void write_property_report(const PropertyReport& rep, const std::string& path) {
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back(json{{"name", c.name},
                          {"anchor", c.anchor},
                          {"value", c.value},
                          {"bound", c.bound},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
  write_text(path, json{{"passed", rep.passed}, {"checks", checks}}.dump(2) + "\n");
}

void write_convergence_report(const ConvergenceReport& rep, const std::string& path) {
  json j{{"eps_list", rep.eps_list},
         {"errors", rep.errors},
         {"eps_grid_n1", rep.eps_grid_n1},
         {"effective_n1", rep.effective_n1},
         {"window_margin", rep.window_margin},
         {"pass", rep.pass}};
  write_text(path, j.dump(2) + "\n");
}

std::string sidecar_path_for(const std::string& csv) {
  if (csv.size() > 4 && csv.compare(csv.size() - 4, 4, ".csv") == 0)
    return csv.substr(0, csv.size() - 4) + ".json";
  return csv + ".json";
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::parse: return 1;
    case Errc::degenerate_instance:
    case Errc::unknown_control:
    case Errc::not_on_interface:
    case Errc::side_mismatch:
    case Errc::out_of_domain:
    case Errc::invalid_arg: return 2;
    case Errc::property_failure: return 4;
    case Errc::io:
    default: return 3;
  }
}

namespace {

struct Timings {
  std::vector<std::pair<std::string, double>> entries;
  std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();
  void lap(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    entries.emplace_back(name, std::chrono::duration<double>(now - mark).count());
    mark = now;
  }
};

void write_manifest(const ConfigDocument& cfg, const std::string& command,
                    const std::string& out_dir, const Timings& t) {
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, cfg.hash());
  json timings = json::object();
  for (const auto& [k, v] : t.entries) timings[k] = v;
  json j{{"command", command},
         {"version", kVersion},
         {"config_hash", hash},
         {"config", json::parse(cfg.canonical_text())},
         {"timings", timings}};
  write_text((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

}  // namespace

CommandResult run_command(const std::string& command, const ConfigDocument& config,
                          const std::string& out_dir, int jobs_override) {
  CommandResult res;
  Timings timings;
  try {
    fs::create_directories(out_dir);
    ConfigDocument cfg = config;  // local copy: jobs override is per run
    if (jobs_override > 0) cfg.solver().jobs = jobs_override;
    const SolverParams& prm = cfg.solver();
    const RunSpec& run = cfg.run();
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

    const ProblemInstance instance = cfg.make_instance();
    AssumptionReport assumptions;
    try {
      assumptions = validate_assumptions(instance);
    } catch (const Error& e) {
      // Degenerate instances still get a (failed) report before the command
      // aborts with the validation exit code.
      assumptions.passed = false;
      write_assumption_report(assumptions, path("assumptions.json"));
      write_manifest(cfg, command, out_dir, timings);
      throw;
    }
    const Scales sc = Scales::from(assumptions);
    write_assumption_report(assumptions, path("assumptions.json"));
    timings.lap("validate");

    if (command == "validate") {
      res.exit_code = assumptions.passed ? 0 : 2;
      res.summary = "validate: delta0=" + fmt17(assumptions.delta0) +
                    " delta0_tilde=" + fmt17(assumptions.delta0_tilde) +
                    (assumptions.passed ? " (passed)" : " (failed)");
    } else if (command == "effective") {
      EffectiveTable t = build_effective_table(instance, sc, run.z2_grid, run.p2_grid, prm);
      timings.lap("table");
      write_table_csv(t, path("effective_table.csv"));
      write_table_sidecar(t, prm, path("effective_table.json"));
      res.summary = "effective: " + std::to_string(t.samples.size()) + " samples";
    } else if (command == "solve-eps" || command == "solve-limit") {
      const BoxGrid grid =
          BoxGrid::make(run.box_extent1, run.box_extent2, run.box_n1, run.box_n2);
      ValueField field;
      if (command == "solve-eps") {
        field = solve_epsilon(instance, run.eps, grid, prm);
        timings.lap("solve_eps");
        write_field_csv(field, path("value_eps.csv"));
      } else {
        EffectiveTable t =
            run.table_csv.empty()
                ? build_effective_table(instance, sc, run.z2_grid, run.p2_grid, prm)
                : read_table(run.table_csv,
                             sidecar_path_for(run.table_csv));
        if (!t.ek_applied) t = ek_modify(std::move(t), prm.K, sc.M_f);
        timings.lap("table");
        field = solve_effective(instance, t, grid, prm);
        timings.lap("solve_limit");
        write_field_csv(field, path("value_limit.csv"));
      }
      res.summary = command + ": residual=" + fmt17(field.residual) +
                    " sweeps=" + std::to_string(field.sweeps);
    } else if (command == "converge") {
      EffectiveTable t =
          run.table_csv.empty()
              ? build_effective_table(instance, sc, run.z2_grid, run.p2_grid, prm)
              : read_table(run.table_csv,
                           sidecar_path_for(run.table_csv));
      if (!t.ek_applied) t = ek_modify(std::move(t), prm.K, sc.M_f);
      timings.lap("table");
      const BoxGrid grid =
          BoxGrid::make(run.box_extent1, run.box_extent2, run.box_n1, run.box_n2);
      const ConvergenceReport rep = convergence_study(instance, sc, t, run.eps_list, grid,
                                                      run.window_margin, prm);
      timings.lap("converge");
      write_convergence_report(rep, path("convergence.json"));
      std::string errs;
      for (double e : rep.errors) errs += " " + fmt17(e);
      res.summary = "converge:" + errs + (rep.pass ? " (pass)" : " (fail)");
      res.exit_code = rep.pass ? 0 : 4;
    } else if (command == "props") {
      const PropertyReport rep = property_suite(instance, sc, run, prm);
      timings.lap("props");
      write_property_report(rep, path("properties.json"));
      int failed = 0;
      for (const auto& c : rep.checks)
        if (!c.pass) ++failed;
      res.summary = "props: " + std::to_string(rep.checks.size()) + " checks, " +
                    std::to_string(failed) + " failed";
      res.exit_code = rep.passed ? 0 : 4;
    } else {
      fail(Errc::invalid_arg, "unknown command: " + command);
    }
    write_manifest(cfg, command, out_dir, timings);
  } catch (const Error& e) {
    res.exit_code = exit_code_for(e.code());
    res.detail = e.what();
    res.summary = command + ": error: " + e.what();
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.detail = e.what();
    res.summary = command + ": error: " + e.what();
  }
  return res;
}

}  // namespace hjhom
