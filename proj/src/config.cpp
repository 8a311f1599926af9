#include "hjhom/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hjhom {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& what) { fail(Errc::parse, what); }

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) parse_fail("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      parse_fail("config: unknown key '" + it.key() + "' in " + where);
}

double positive(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const double v = j.at(key).get<double>();
  if (!(v > 0.0)) parse_fail("config: '" + key + "' must be strictly positive");
  return v;
}

std::vector<double> parse_axis(const json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
  } else if (j.is_object()) {
    reject_unknown(j, {"min", "max", "count"}, where);
    const double lo = j.at("min").get<double>();
    const double hi = j.at("max").get<double>();
    const int n = j.at("count").get<int>();
    if (n < 1 || hi < lo) parse_fail("config: bad axis spec in " + where);
    for (int i = 0; i < n; ++i)
      out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  } else {
    parse_fail("config: '" + where + "' must be an array or {min,max,count}");
  }
  if (out.empty()) parse_fail("config: empty axis in " + where);
  return out;
}

DynamicsSpec parse_dynamics(const json& j, const std::string& where) {
  reject_unknown(j, {"kind", "scale", "d1", "d2"}, where);
  DynamicsSpec d;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "eikonal") {
    d.kind = DynamicsKind::eikonal;
  } else if (kind == "scaled") {
    d.kind = DynamicsKind::scaled;
    d.scale = j.at("scale").get<double>();
  } else if (kind == "drift") {
    d.kind = DynamicsKind::drift;
    d.drift = {j.value("d1", 0.0), j.value("d2", 0.0)};
  } else {
    parse_fail("config: unknown dynamics kind '" + kind + "' in " + where);
  }
  return d;
}

CostSpec parse_cost(const json& j, const std::string& where) {
  reject_unknown(j, {"kind", "c", "kappa", "b"}, where);
  CostSpec c;
  const std::string kind = j.at("kind").get<std::string>();
  c.c = j.value("c", 1.0);
  if (kind == "constant") {
    c.kind = CostKind::constant;
  } else if (kind == "quadratic") {
    c.kind = CostKind::quadratic;
    c.kappa = j.value("kappa", 0.0);
  } else if (kind == "bump") {
    c.kind = CostKind::bump;
    c.bump = j.value("b", 0.0);
  } else {
    parse_fail("config: unknown cost kind '" + kind + "' in " + where);
  }
  return c;
}

SideSpec parse_side(const json& j, Side side, int control_samples) {
  reject_unknown(j, {"dynamics", "cost", "controls"},
                 std::string("instance.") + side_name(side));
  SideSpec s;
  s.side = side;
  s.dynamics = parse_dynamics(j.at("dynamics"), "dynamics");
  s.cost = parse_cost(j.at("cost"), "cost");
  if (j.contains("controls")) {
    // Explicit control list (overrides the unit-disc sampling).
    for (const auto& a : j.at("controls")) {
      if (!a.is_array() || a.size() != 2)
        parse_fail("config: explicit controls must be [a1, a2] pairs");
      s.controls.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    if (s.controls.empty()) parse_fail("config: explicit control list must be non-empty");
  } else {
    s.controls = sample_unit_disc_controls(control_samples);
  }
  return s;
}

void line_column(const std::string& text, std::size_t byte, int& line, int& col) {
  line = 1;
  col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

}  // namespace

ConfigDocument ConfigDocument::parse_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int line, col;
    line_column(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    parse_fail("config: malformed JSON at line " + std::to_string(line) + ", column " +
               std::to_string(col) + ": " + e.what());
  }

  ConfigDocument cfg;
  try {
    reject_unknown(j, {"instance", "geometry", "solver", "run"}, "top level");
    const json& inst = j.at("instance");
    reject_unknown(inst, {"left", "right", "control_samples", "discount"}, "instance");
    cfg.control_samples_ = inst.value("control_samples", 64);
    if (cfg.control_samples_ < 3) parse_fail("config: control_samples must be >= 3");
    cfg.discount_ = positive(inst, "discount", 1.0);
    cfg.left_ = parse_side(inst.at("left"), Side::L, cfg.control_samples_);
    cfg.right_ = parse_side(inst.at("right"), Side::R, cfg.control_samples_);

    if (j.contains("geometry")) {
      const json& g = j.at("geometry");
      reject_unknown(g, {"fourier_sin", "fourier_cos"}, "geometry");
      if (g.contains("fourier_sin"))
        cfg.fourier_sin_ = g.at("fourier_sin").get<std::vector<double>>();
      if (g.contains("fourier_cos"))
        cfg.fourier_cos_ = g.at("fourier_cos").get<std::vector<double>>();
    }

    if (j.contains("solver")) {
      const json& s = j.at("solver");
      reject_unknown(s,
                     {"eps_fix", "ergodic_tol", "rho_tol", "grid_h", "eta0", "eta_steps",
                      "rho0", "rho_max", "max_sweeps", "tangential_samples", "K", "jobs"},
                     "solver");
      SolverParams& p = cfg.solver_;
      p.eps_fix = positive(s, "eps_fix", p.eps_fix);
      p.ergodic_tol = positive(s, "ergodic_tol", p.ergodic_tol);
      p.rho_tol = positive(s, "rho_tol", p.rho_tol);
      p.grid_h = positive(s, "grid_h", p.grid_h);
      p.eta0 = positive(s, "eta0", p.eta0);
      p.eta_steps = s.value("eta_steps", p.eta_steps);
      if (p.eta_steps < 1) parse_fail("config: eta_steps must be >= 1");
      if (s.contains("rho0")) p.rho0 = positive(s, "rho0", p.rho0);
      p.rho_max = positive(s, "rho_max", p.rho_max);
      p.max_sweeps = s.value("max_sweeps", p.max_sweeps);
      if (p.max_sweeps < 1) parse_fail("config: max_sweeps must be >= 1");
      p.tangential_samples = s.value("tangential_samples", p.tangential_samples);
      if (p.tangential_samples < 2) parse_fail("config: tangential_samples must be >= 2");
      p.K = positive(s, "K", p.K);
      p.jobs = s.value("jobs", 0);
    }

    if (j.contains("run")) {
      const json& r = j.at("run");
      reject_unknown(r,
                     {"z2_grid", "p2_grid", "box", "eps", "eps_list", "window_margin", "seed",
                      "table_csv", "props_slack"},
                     "run");
      RunSpec& rs = cfg.run_;
      if (r.contains("z2_grid")) rs.z2_grid = parse_axis(r.at("z2_grid"), "run.z2_grid");
      if (r.contains("p2_grid")) rs.p2_grid = parse_axis(r.at("p2_grid"), "run.p2_grid");
      if (r.contains("box")) {
        const json& b = r.at("box");
        reject_unknown(b, {"extent1", "extent2", "n1", "n2"}, "run.box");
        rs.box_extent1 = positive(b, "extent1", rs.box_extent1);
        rs.box_extent2 = positive(b, "extent2", rs.box_extent2);
        rs.box_n1 = b.value("n1", rs.box_n1);
        rs.box_n2 = b.value("n2", rs.box_n2);
      }
      rs.eps = positive(r, "eps", rs.eps);
      if (r.contains("eps_list")) {
        rs.eps_list = r.at("eps_list").get<std::vector<double>>();
        for (double e : rs.eps_list)
          if (!(e > 0.0)) parse_fail("config: eps_list entries must be positive");
        if (rs.eps_list.empty()) parse_fail("config: eps_list must be non-empty");
      }
      if (r.contains("window_margin")) {
        rs.window_margin = r.at("window_margin").get<double>();
        if (rs.window_margin < 0.0 || rs.window_margin >= 0.5)
          parse_fail("config: window_margin must lie in [0, 0.5)");
      }
      rs.seed = r.value("seed", rs.seed);
      rs.table_csv = r.value("table_csv", rs.table_csv);
      if (r.contains("props_slack")) {
        rs.props_slack = r.at("props_slack").get<double>();
        if (rs.props_slack < 0.0) parse_fail("config: props_slack must be >= 0");
      }
    }
  } catch (const json::exception& e) {
    parse_fail(std::string("config: ") + e.what());
  }

  // Canonical echo: nlohmann sorts object keys, giving a stable hashable form.
  cfg.canonical_ = j.dump(2);
  return cfg;
}

ConfigDocument ConfigDocument::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::io, "cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

ProblemInstance ConfigDocument::make_instance() const {
  return ProblemInstance(left_, right_, OscillationProfile(fourier_sin_, fourier_cos_),
                         discount_);
}

void ConfigDocument::apply_override(const std::string& key, double value) {
  std::string k = key;
  if (k.rfind("solver.", 0) == 0) k = k.substr(7);
  if (k.rfind("run.", 0) == 0) {
    const std::string rk = k.substr(4);
    if (rk == "window_margin") run_.window_margin = value;
    else if (rk == "eps") run_.eps = value;
    else if (rk == "seed") run_.seed = static_cast<std::uint64_t>(value);
    else if (rk == "props_slack") run_.props_slack = value;
    else fail(Errc::invalid_arg, "unknown run override key: " + rk);
    return;
  }
  SolverParams& p = solver_;
  if (k == "eps_fix") p.eps_fix = value;
  else if (k == "ergodic_tol") p.ergodic_tol = value;
  else if (k == "rho_tol") p.rho_tol = value;
  else if (k == "grid_h") p.grid_h = value;
  else if (k == "eta0") p.eta0 = value;
  else if (k == "eta_steps") p.eta_steps = static_cast<int>(value);
  else if (k == "rho0") p.rho0 = value;
  else if (k == "rho_max") p.rho_max = value;
  else if (k == "max_sweeps") p.max_sweeps = static_cast<int>(value);
  else if (k == "tangential_samples") p.tangential_samples = static_cast<int>(value);
  else if (k == "K") p.K = value;
  else if (k == "jobs") p.jobs = static_cast<int>(value);
  else if (k == "props_slack") run_.props_slack = value;
  else fail(Errc::invalid_arg, "unknown override key: " + key);
}

}  // namespace hjhom
