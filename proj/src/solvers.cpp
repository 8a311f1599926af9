#include "hjhom/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sl_iterate.hpp"

namespace hjhom {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFootTol = 1e-9;  // index-unit slack for containment checks
}  // namespace

BoxGrid BoxGrid::make(double z1_extent, double z2_extent, int n1, int n2) {
  if (!(z1_extent > 0.0) || !(z2_extent > 0.0) || n1 < 3 || n2 < 2)
    fail(Errc::invalid_arg, "BoxGrid: extents > 0, n1 >= 3, n2 >= 2");
  if (n1 % 2 == 0) fail(Errc::invalid_arg, "BoxGrid: n1 must be odd (column on z1 = 0)");
  BoxGrid g;
  g.z1_extent = z1_extent;
  g.z2_extent = z2_extent;
  g.n1 = n1;
  g.n2 = n2;
  g.h1 = 2.0 * z1_extent / (n1 - 1);
  g.h2 = 2.0 * z2_extent / (n2 - 1);
  return g;
}

double ValueField::interp(Vec2 z) const {
  const double fi = (z.x + grid.z1_extent) / grid.h1;
  const double fj = (z.y + grid.z2_extent) / grid.h2;
  if (fi < -kFootTol || fi > grid.n1 - 1 + kFootTol || fj < -kFootTol ||
      fj > grid.n2 - 1 + kFootTol)
    fail(Errc::out_of_box, "ValueField::interp: point outside the solved box");
  return detail::interp_clamped(values, grid.n1, grid.n2, fi, fj);
}

namespace {

struct BoxCand {
  double ell{0.0};     // stage cost (x-independent path)
  double cost_w{0.0};  // weighted stage cost
  double d1{0.0};      // foot offsets in index units
  double d2{0.0};
  double d1j{0.0};     // junction-clamped normal offset
  bool junction_ok{false};
  int control_index{0};
};

// Shared machinery of the two box solvers. The epsilon mode shears the
// dynamics row by row (fast variable z2/eps); the effective mode adds the
// tangential Fenchel candidates on the interface column.
class BoxOperator {
 public:
  enum class Mode { eps, effective };

  BoxOperator(const ProblemInstance& in, const BoxGrid& grid, Mode mode, double eps,
              const EffectiveTable* table, const SolverParams& prm, bool use_tangential)
      : in_(in), grid_(grid), mode_(mode), eps_(eps) {
    const double speed =
        mode == Mode::eps ? in.sheared_speed_bound() : std::max(in.M_f(), 1e-12);
    dt_ = std::min(grid.h1, grid.h2) / speed;
    lambda_ = in.discount();
    gamma_ = std::exp(-lambda_ * dt_);
    wcost_ = (1.0 - gamma_) / lambda_;
    cost_per_node_ = !in.cost_x_independent();

    rows_.resize(static_cast<std::size_t>(grid.n2));
    for (int j = 0; j < grid.n2; ++j) {
      const double z2 = grid.z2(j);
      const double gp =
          mode == Mode::eps ? in.profile().derivative(z2 / eps) : 0.0;
      for (Side side : {Side::L, Side::R}) {
        const SideSpec& sp = in.spec(side);
        auto& lst = side == Side::L ? rows_[j].L : rows_[j].R;
        for (int k = 0; k < static_cast<int>(sp.controls.size()); ++k) {
          const Vec2 a = sp.controls[static_cast<std::size_t>(k)];
          const Vec2 f = sp.f({0.0, z2}, a);  // presets are x-independent
          const double f1s = mode == Mode::eps ? f.x - gp * f.y : f.x;
          BoxCand c;
          c.control_index = k;
          c.d1 = dt_ * f1s / grid.h1;
          c.d2 = dt_ * f.y / grid.h2;
          c.junction_ok = side_sigma(side) * f1s >= -kSignTol;
          c.d1j = side == Side::L ? std::min(c.d1, 0.0) : std::max(c.d1, 0.0);
          if (!cost_per_node_) {
            c.ell = sp.ell({0.0, z2}, a);
            c.cost_w = wcost_ * c.ell;
          }
          lst.push_back(c);
        }
      }
      if (mode == Mode::effective && use_tangential) {
        const int nb = std::max(2, prm.tangential_samples);
        auto& tcands = rows_[j].tang;
        for (int m = 0; m < nb; ++m) {
          const double b = -in.M_f() + 2.0 * in.M_f() * m / (nb - 1);
          TangCand tc;
          // lambda v + E(z2, dv/dz2) = 0 via E_K(p) = max_b (b p - E_K*(b)):
          // pseudo-dynamics -b e2, stage cost E_K*(z2, b).
          tc.d2 = -dt_ * b / grid.h2;
          tc.cost_w = wcost_ * fenchel_star(*table, z2, b);
          tcands.push_back(tc);
        }
      }
    }
  }

  double dt() const { return dt_; }
  double gamma() const { return gamma_; }

  double node_value(const std::vector<double>& v, int i, int j) const {
    const int n1 = grid_.n1;
    const int n2 = grid_.n2;
    const int mid = grid_.mid();
    double best = kInf;
    auto consider = [&](double fi, double fj, double cost_w) {
      if (fi < -kFootTol || fi > n1 - 1 + kFootTol || fj < -kFootTol || fj > n2 - 1 + kFootTol)
        return;  // state constraint: exiting steps are discarded
      const double cand = cost_w + gamma_ * detail::interp_clamped(v, n1, n2, fi, fj);
      best = std::min(best, cand);
    };
    const auto scan = [&](Side side, bool junction) {
      const auto& lst = side == Side::L ? rows_[j].L : rows_[j].R;
      for (const BoxCand& c : lst) {
        if (junction && !c.junction_ok) continue;
        const double cw =
            cost_per_node_ ? wcost_ * node_cost(side, c.control_index, i, j) : c.cost_w;
        consider(i + (junction ? c.d1j : c.d1), j + c.d2, cw);
      }
    };
    if (i == mid) {
      scan(Side::L, true);
      scan(Side::R, true);
      for (const TangCand& tc : rows_[j].tang) consider(mid, j + tc.d2, tc.cost_w);
    } else if (i < mid) {
      scan(Side::L, false);
    } else {
      scan(Side::R, false);
    }
    if (best == kInf)
      fail(Errc::no_admissible_control, "box operator: no admissible control at a node");
    return best;
  }

  void sweep(std::vector<double>& v, int ordering) const {
    const bool i_fwd = (ordering & 1) == 0;
    const bool j_fwd = (ordering & 2) == 0;
    for (int jj = 0; jj < grid_.n2; ++jj) {
      const int j = j_fwd ? jj : grid_.n2 - 1 - jj;
      for (int t = 0; t < grid_.n1; ++t) {
        const int i = i_fwd ? t : grid_.n1 - 1 - t;
        v[grid_.at(i, j)] = node_value(v, i, j);
      }
    }
  }

  void bellman(const std::vector<double>& v, std::vector<double>& out) const {
    for (int j = 0; j < grid_.n2; ++j)
      for (int i = 0; i < grid_.n1; ++i) out[grid_.at(i, j)] = node_value(v, i, j);
  }

 private:
  double node_cost(Side side, int k, int i, int j) const {
    const SideSpec& sp = in_.spec(side);
    const Vec2 z{grid_.z1(i), grid_.z2(j)};
    const Vec2 x = mode_ == Mode::eps ? unstraighten(in_.profile(), z, eps_) : z;
    return sp.ell(x, sp.controls[static_cast<std::size_t>(k)]);
  }

  struct TangCand {
    double d2{0.0};
    double cost_w{0.0};
  };
  struct Row {
    std::vector<BoxCand> L, R;
    std::vector<TangCand> tang;
  };

  const ProblemInstance& in_;
  BoxGrid grid_;
  Mode mode_;
  double eps_;
  double dt_{0.0};
  double lambda_{0.0};
  double gamma_{0.0};
  double wcost_{0.0};
  bool cost_per_node_{false};
  std::vector<Row> rows_;
};

double lipschitz_bound(const ProblemInstance& in) {
  // Subsolution Lipschitz bound near the interface with ||v|| <= M_ell/lambda:
  // sqrt(2) (lambda ||v|| + M_ell)(1 + ||g'||) / delta0.
  const double d0 = validate_assumptions(in).delta0;
  return std::sqrt(2.0) * 2.0 * in.M_ell() * (1.0 + in.profile().sup_g_prime()) / d0;
}

ValueField run_box(const ProblemInstance& in, const BoxOperator& op, const BoxGrid& grid,
                   const SolverParams& prm, const char* what) {
  ValueField out;
  out.grid = grid;
  std::vector<double> v(grid.size(), -in.M_ell() / in.discount());
  detail::IterControl ctl;
  ctl.gamma = op.gamma();
  ctl.eps_fix = prm.eps_fix;
  ctl.max_sweeps = prm.max_sweeps;
  ctl.monotone_from_below = true;
  ctl.what = what;
  auto res = detail::sl_iterate(
      v, [&](int ord) { op.sweep(v, ord); },
      [&](std::vector<double>& o) { op.bellman(v, o); }, ctl);
  out.values = std::move(v);
  out.residual = res.residual;
  out.sweeps = res.sweeps;
  out.grid_tolerance = std::max(grid.h1, grid.h2) * lipschitz_bound(in) +
                       res.residual * op.gamma() / (1.0 - op.gamma());
  return out;
}

}  // namespace

ValueField solve_effective(const ProblemInstance& in, const EffectiveTable& table,
                           const BoxGrid& grid, const SolverParams& prm,
                           const EffectiveSolveOptions& opt) {
  if (!table.ek_applied)
    fail(Errc::invalid_arg, "solve_effective: table must pass through ek_modify");
  // A-priori interface Lipschitz bound for the solution; the truncation level
  // must dominate it so E_K == E on every slope the solution can take.
  const double d0 = validate_assumptions(in).delta0;
  const double need = 2.0 * in.M_ell() / d0;
  if (table.K < need - 1e-12)
    fail(Errc::table_coverage, "solve_effective: K below the interface Lipschitz bound " +
                                   std::to_string(need));
  // Coverage of the z2 axis is checked while building the operator row costs.
  BoxOperator op(in, grid, BoxOperator::Mode::effective, 0.0, &table, prm,
                 opt.use_tangential);
  return run_box(in, op, grid, prm, "solve_effective");
}

std::vector<double> effective_bellman_apply(const ProblemInstance& in,
                                            const EffectiveTable& table, const BoxGrid& grid,
                                            const SolverParams& prm,
                                            const std::vector<double>& v) {
  BoxOperator op(in, grid, BoxOperator::Mode::effective, 0.0, &table, prm, true);
  std::vector<double> out(v.size());
  op.bellman(v, out);
  return out;
}

double effective_residual(const ValueField& field, const ProblemInstance& in,
                          const EffectiveTable& table, const SolverParams& prm) {
  const std::vector<double> next =
      effective_bellman_apply(in, table, field.grid, prm, field.values);
  double r = 0.0;
  for (std::size_t n = 0; n < next.size(); ++n)
    r = std::max(r, std::fabs(next[n] - field.values[n]));
  return r;
}

ValueField solve_epsilon(const ProblemInstance& in, double eps, const BoxGrid& grid,
                         const SolverParams& prm) {
  if (!(eps > 0.0)) fail(Errc::invalid_arg, "solve_epsilon: eps > 0");
  if (std::min(grid.h1, grid.h2) > eps / 8.0 + 1e-12)
    fail(Errc::invalid_arg,
         "solve_epsilon: grid too coarse, need min(h1,h2) <= eps/8 to resolve the period");
  BoxOperator op(in, grid, BoxOperator::Mode::eps, eps, nullptr, prm, false);
  return run_box(in, op, grid, prm, "solve_epsilon");
}

std::vector<double> epsilon_bellman_apply(const ProblemInstance& in, double eps,
                                          const BoxGrid& grid, const SolverParams& prm,
                                          const std::vector<double>& v) {
  BoxOperator op(in, grid, BoxOperator::Mode::eps, eps, nullptr, prm, false);
  std::vector<double> out(v.size());
  op.bellman(v, out);
  return out;
}

double map_to_original(const ValueField& field, const ProblemInstance& in, double eps, Vec2 x) {
  return field.interp(straighten(in.profile(), x, eps));
}

namespace {

// Integration state shared by the two coordinate systems.
struct CostAccumulator {
  double lambda;
  double t{0.0};
  double acc{0.0};
  void add(double ell, double dt) {
    acc += ell * std::exp(-lambda * t) * (1.0 - std::exp(-lambda * dt)) / lambda;
    t += dt;
  }
};

void check_region(double signed_normal, Side side, double tol) {
  if (signed_normal > tol && side == Side::L)
    fail(Errc::mixing_violation, "left control used strictly inside Omega^R");
  if (signed_normal < -tol && side == Side::R)
    fail(Errc::mixing_violation, "right control used strictly inside Omega^L");
}

}  // namespace

TrajectoryResult simulate_trajectory(const ProblemInstance& in, double eps, Vec2 z0,
                                     const std::vector<PolicyPiece>& policy, double horizon,
                                     double dt) {
  if (!(dt > 0.0) || !(horizon > 0.0)) fail(Errc::invalid_arg, "simulate: dt, horizon > 0");
  TrajectoryResult out;
  CostAccumulator cost{in.discount()};
  Vec2 z = z0;
  out.t.push_back(0.0);
  out.state.push_back(z);
  const double region_tol = 1e-10;
  double remaining = horizon;
  for (const PolicyPiece& piece : policy) {
    if (remaining <= 0.0) break;
    double seg = std::min(piece.duration, remaining);
    remaining -= seg;
    const Side side = piece.control.side;
    while (seg > 1e-15) {
      const double step = std::min(dt, seg);
      seg -= step;
      check_region(z.x, side, region_tol);
      const Vec2 f0 = in.straightened_dynamics(side, z, piece.control, eps);
      const Vec2 zm = z + (0.5 * step) * f0;
      const Vec2 fm = in.straightened_dynamics(side, zm, piece.control, eps);
      cost.add(in.straightened_cost(side, z, piece.control, eps), step);
      z = z + step * fm;
      out.t.push_back(cost.t);
      out.state.push_back(z);
      out.control.push_back(piece.control);
    }
  }
  out.discounted_cost = cost.acc;
  out.truncation_bound = in.M_ell() * std::exp(-in.discount() * cost.t) / in.discount();
  return out;
}

double simulate_trajectory_original(const ProblemInstance& in, double eps, Vec2 x0,
                                    const std::vector<PolicyPiece>& policy, double horizon,
                                    double dt) {
  CostAccumulator cost{in.discount()};
  Vec2 x = x0;
  const double region_tol = 1e-10;
  double remaining = horizon;
  for (const PolicyPiece& piece : policy) {
    if (remaining <= 0.0) break;
    double seg = std::min(piece.duration, remaining);
    remaining -= seg;
    const Side side = piece.control.side;
    while (seg > 1e-15) {
      const double step = std::min(dt, seg);
      seg -= step;
      check_region(straighten(in.profile(), x, eps).x, side, region_tol);
      const Vec2 f0 = in.dynamics(side, x, piece.control);
      const Vec2 xm = x + (0.5 * step) * f0;
      const Vec2 fm = in.dynamics(side, xm, piece.control);
      cost.add(in.cost(side, x, piece.control), step);
      x = x + step * fm;
    }
  }
  return cost.acc;
}

}  // namespace hjhom
