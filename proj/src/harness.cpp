#include "hjhom/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"

namespace hjhom {

namespace {

double dyadic(Rng& rng) {
  // multiples of 2^-20 in [0,1): adding integers stays exact in fp, which the
  // exact-periodicity checks require.
  return static_cast<double>(rng.next_u64() % (1u << 20)) * 0x1.0p-20;
}

}  // namespace

ConvergenceReport convergence_study(const ProblemInstance& in, const Scales& sc,
                                    const EffectiveTable& table,
                                    const std::vector<double>& eps_list,
                                    const BoxGrid& effective_grid, double window_margin,
                                    const SolverParams& prm) {
  (void)sc;
  ConvergenceReport rep;
  rep.eps_list = eps_list;
  std::sort(rep.eps_list.begin(), rep.eps_list.end(), std::greater<double>());
  rep.window_margin = window_margin;
  rep.effective_n1 = effective_grid.n1;

  const ValueField veff = solve_effective(in, table, effective_grid, prm);

  const double wx = effective_grid.z1_extent * (1.0 - 2.0 * window_margin);
  const double wy = effective_grid.z2_extent * (1.0 - 2.0 * window_margin);

  rep.errors.assign(rep.eps_list.size(), 0.0);
  rep.eps_grid_n1.assign(rep.eps_list.size(), 0);
  detail::parallel_for(static_cast<int>(rep.eps_list.size()), prm.jobs, [&](int k) {
    const double eps = rep.eps_list[static_cast<std::size_t>(k)];
    const double X = effective_grid.z1_extent;
    const double Y = effective_grid.z2_extent;
    const int m1 = static_cast<int>(std::ceil(8.0 * X / eps - 1e-9));
    const int m2 = static_cast<int>(std::ceil(8.0 * Y / eps - 1e-9));
    const BoxGrid g = BoxGrid::make(X, Y, 2 * m1 + 1, 2 * m2 + 1);
    const ValueField veps = solve_epsilon(in, eps, g, prm);
    double err = 0.0;
    for (int j = 0; j < g.n2; ++j) {
      const double z2 = g.z2(j);
      if (std::fabs(z2) > wy + 1e-12) continue;
      for (int i = 0; i < g.n1; ++i) {
        const double z1 = g.z1(i);
        if (std::fabs(z1) > wx + 1e-12) continue;
        err = std::max(err, std::fabs(veps.at(i, j) - veff.interp({z1, z2})));
      }
    }
    rep.errors[static_cast<std::size_t>(k)] = err;
    rep.eps_grid_n1[static_cast<std::size_t>(k)] = g.n1;
  });

  bool ok = rep.errors.back() < rep.errors.front();
  for (std::size_t k = 0; k + 1 < rep.errors.size(); ++k)
    ok = ok && rep.errors[k + 1] <= 1.1 * rep.errors[k];
  rep.pass = ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Property suite
// ---------------------------------------------------------------------------

namespace {

struct SuiteBuilder {
  std::vector<PropertyCheck>& out;
  double slack;

  // pass iff value <= bound + tolerance * slack
  void leq(const std::string& name, const std::string& anchor, double value, double bound,
           double tolerance) {
    PropertyCheck c;
    c.name = name;
    c.anchor = anchor;
    c.value = value;
    c.bound = bound;
    c.tolerance = tolerance * slack;
    c.pass = value <= bound + c.tolerance;
    out.push_back(std::move(c));
  }
};

ProblemInstance flat_copy(const ProblemInstance& in) {
  return ProblemInstance(in.spec(Side::L), in.spec(Side::R), OscillationProfile{},
                         in.discount());
}

ProblemInstance constant_cost_copy(const ProblemInstance& in, double c) {
  SideSpec l = in.spec(Side::L);
  SideSpec r = in.spec(Side::R);
  l.cost = CostSpec{CostKind::constant, c, 0.0, 0.0};
  r.cost = CostSpec{CostKind::constant, c, 0.0, 0.0};
  return ProblemInstance(std::move(l), std::move(r), in.profile(), in.discount());
}

// Piecewise-constant admissible policy: wanders inside the current side (and
// the box), retrying controls whose step would cross the interface or exit.
struct PolicyDraw {
  std::vector<PolicyPiece> pieces;
  Vec2 start;
};

PolicyDraw draw_policy(const ProblemInstance& in, double eps, const BoxGrid& box, Rng& rng,
                       double horizon, double dt) {
  PolicyDraw out;
  const double wx = box.z1_extent * 0.6;
  const double wy = box.z2_extent * 0.6;
  out.start = {rng.uniform(-wx, wx), rng.uniform(-wy, wy)};
  if (std::fabs(out.start.x) < 0.05) out.start.x = out.start.x < 0 ? -0.05 : 0.05;

  Vec2 z = out.start;
  double t = 0.0;
  const double xlim = box.z1_extent - 1e-6;
  const double ylim = box.z2_extent - 1e-6;

  auto step_of = [&](Vec2 from, Side side, const Control& a) {
    const Vec2 f0 = in.straightened_dynamics(side, from, a, eps);
    const Vec2 zm = from + (0.5 * dt) * f0;
    return from + dt * in.straightened_dynamics(side, zm, a, eps);
  };
  auto stays = [&](Vec2 next, Side side) {
    if (side == Side::L && next.x > 0.0) return false;
    if (side == Side::R && next.x < 0.0) return false;
    return std::fabs(next.x) <= xlim && std::fabs(next.y) <= ylim;
  };
  auto slowest = [&](Side side) {
    int best = 0;
    double bestv = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(in.spec(side).controls.size()); ++k) {
      const double v = in.straightened_dynamics(side, z, in.spec(side).control(k), eps).norm();
      if (v < bestv) {
        bestv = v;
        best = k;
      }
    }
    return in.spec(side).control(best);
  };

  while (t < horizon - 1e-12) {
    const Side side = z.x < 0.0 ? Side::L : Side::R;
    const auto& ctrls = in.spec(side).controls;
    Control a = slowest(side);
    for (int tries = 0; tries < 10; ++tries) {
      const Control cand =
          in.spec(side).control(static_cast<int>(rng.next_u64() % ctrls.size()));
      if (stays(step_of(z, side, cand), side)) {
        a = cand;
        break;
      }
    }
    const double want = rng.uniform(0.3, 1.5);
    double seg = 0.0;
    while (seg < want && t + seg < horizon) {
      const Vec2 znext = step_of(z, side, a);
      if (!stays(znext, side)) break;
      z = znext;
      seg += dt;
    }
    if (seg == 0.0) {  // even one step was refused: idle with the slowest control
      a = slowest(side);
      z = step_of(z, side, a);
      seg = dt;
    }
    out.pieces.push_back(PolicyPiece{seg, a});
    t += seg;
  }
  return out;
}

}  // namespace

PropertyReport property_suite(const ProblemInstance& in, const Scales& sc, const RunSpec& spec,
                              const SolverParams& prm) {
  PropertyReport rep;
  SuiteBuilder add{rep.checks, spec.props_slack};
  Rng rng(spec.seed);
  const OscillationProfile& g = in.profile();
  const double lambda = in.discount();

  // --- geometry ------------------------------------------------------------
  {
    double dg = 0.0, dgp = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double t = dyadic(rng);
      const auto a = g.eval(t);
      const auto b = g.eval(t + 1.0);
      dg = std::max(dg, std::fabs(a.g - b.g));
      dgp = std::max(dgp, std::fabs(a.g_prime - b.g_prime));
    }
    add.leq("profile_periodicity", "g(t+1) = g(t), g'(t+1) = g'(t) exactly", dg + dgp, 0.0,
            0.0);
  }
  {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Vec2 x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const double eps = rng.uniform(0.05, 1.0);
      const Vec2 back = unstraighten(g, straighten(g, x, eps), eps);
      worst = std::max(worst, (back - x).norm());
    }
    add.leq("straighten_roundtrip", "G^{-1}(G(x)) = x", worst, 0.0, 1e-12);
  }
  {
    // Finite differences of G match the shear Jacobian to O(h^2).
    const double h = 1e-5;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vec2 x{rng.uniform(-2, 2), rng.uniform(-2, 2)};
      const double eps = rng.uniform(0.3, 1.0);
      const Mat2 J = shear_jacobian(g, x.y / eps);
      const Vec2 d1 = (1.0 / (2 * h)) * (straighten(g, x + Vec2{h, 0}, eps) -
                                         straighten(g, x - Vec2{h, 0}, eps));
      const Vec2 d2 = (1.0 / (2 * h)) * (straighten(g, x + Vec2{0, h}, eps) -
                                         straighten(g, x - Vec2{0, h}, eps));
      worst = std::max({worst, std::fabs(d1.x - J.a), std::fabs(d1.y - J.c),
                        std::fabs(d2.x - J.b), std::fabs(d2.y - J.d)});
    }
    add.leq("jacobian_fd_consistency", "finite differences of G match the shear to O(h^2)",
            worst, 0.0, 1e-6);
  }
  {
    const double bound = g.shear_norm_bound();
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
      const double y2 = rng.uniform(0, 1);
      const double th = rng.uniform(0, 6.283185307179586);
      const Vec2 v{std::cos(th), std::sin(th)};
      worst = std::max(worst, shear_jacobian(g, y2).apply(v).norm());
    }
    add.leq("shear_norm_bound", "||J~(y2) v|| <= sqrt(2)(1+||g'||) ||v||", worst, bound,
            1e-12);
  }

  // --- model ---------------------------------------------------------------
  {
    double prev = 0.0;
    double mono_viol = 0.0;
    double r64 = 0.0;
    for (int n : {8, 16, 32, 64}) {
      const double r = inscribed_radius_at_origin(sample_unit_disc_controls(n));
      mono_viol = std::max(mono_viol, prev - r);
      prev = r;
      if (n == 64) r64 = r;
    }
    add.leq("control_hull_refinement", "inscribed radius nondecreasing under refinement",
            mono_viol, 0.0, 1e-12);
    add.leq("control_hull_64gon", "inscribed radius of the 64-gon equals cos(pi/64)",
            std::fabs(r64 - std::cos(3.14159265358979323846 / 64.0)), 0.0, 1e-12);
  }
  {
    double worst = 0.0;
    for (Side s : {Side::L, Side::R}) {
      const auto& ctrls = in.spec(s).controls;
      for (int k = 0; k < static_cast<int>(ctrls.size()); ++k) {
        const Control a = in.spec(s).control(k);
        const double z2 = rng.uniform(-1, 1);
        worst = std::max(worst, std::fabs(in.freezed_cost(z2, 0.0, a) -
                                          in.cost(s, {0.0, z2}, a)));
      }
    }
    add.leq("freezed_cost_p2_zero", "l_{z2,0}(a) = l^i((0,z2),a)", worst, 0.0, 0.0);
  }
  {
    const ProblemInstance flat = flat_copy(in);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Side s = rng.next_double() < 0.5 ? Side::L : Side::R;
      const Control a =
          flat.spec(s).control(static_cast<int>(rng.next_u64() % flat.spec(s).controls.size()));
      const Vec2 z{rng.uniform(-2, 2), rng.uniform(-2, 2)};
      const Vec2 d = flat.straightened_dynamics(s, z, a, 0.5) - flat.dynamics(s, z, a);
      worst = std::max(worst, std::max(std::fabs(d.x), std::fabs(d.y)));
    }
    add.leq("straightened_flat_identity", "g = 0 makes f~ = f bitwise", worst, 0.0, 0.0);
  }
  {
    const double d0t = sc.delta0 / g.shear_norm_bound();
    add.leq("constant_chain", "delta0~ <= delta0 <= M_f",
            std::max(d0t - sc.delta0, sc.delta0 - sc.M_f), 0.0, 1e-12);
  }

  // --- hamiltonians ----------------------------------------------------------
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 200; ++k) {
      const Side s = rng.next_double() < 0.5 ? Side::L : Side::R;
      const Vec2 z{0.0, rng.uniform(-1, 1)};
      const Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const double full = hamiltonian(in, s, z, p);
      worst = std::max(worst, half_hamiltonian(in, s, HalfSign::plus, z, p) - full);
      worst = std::max(worst, half_hamiltonian(in, s, HalfSign::minus, z, p) - full);
    }
    add.leq("half_below_full", "H^{+-,i} <= H^i", worst, 0.0, 1e-12);
  }
  {
    double worst = 0.0;
    const double B = (sc.M_f * 3.0 + 2.0 * sc.M_ell) / sc.delta0 + 1.0;
    for (int k = 0; k < 100; ++k) {
      const double p2 = rng.uniform(-3, 3);
      double prev_pR = std::numeric_limits<double>::infinity();
      double prev_mR = -std::numeric_limits<double>::infinity();
      double prev_pL = -std::numeric_limits<double>::infinity();
      double prev_mL = std::numeric_limits<double>::infinity();
      for (int m = 0; m < 50; ++m) {
        const double q = -B + 2.0 * B * m / 49.0;
        const Vec2 p{q, p2};
        const double hpR = half_hamiltonian(in, Side::R, HalfSign::plus, {0, 0}, p);
        const double hmR = half_hamiltonian(in, Side::R, HalfSign::minus, {0, 0}, p);
        const double hpL = half_hamiltonian(in, Side::L, HalfSign::plus, {0, 0}, p);
        const double hmL = half_hamiltonian(in, Side::L, HalfSign::minus, {0, 0}, p);
        worst = std::max(worst, hpR - prev_pR);  // H^{+,R} nonincreasing
        worst = std::max(worst, prev_mR - hmR);  // H^{-,R} nondecreasing
        worst = std::max(worst, prev_pL - hpL);  // H^{+,L} nondecreasing
        worst = std::max(worst, hmL - prev_mL);  // H^{-,L} nonincreasing
        prev_pR = hpR;
        prev_mR = hmR;
        prev_pL = hpL;
        prev_mL = hmL;
      }
    }
    add.leq("half_branch_monotonicity", "p1-monotonicity of H^{+-,i}", worst, 0.0, 1e-12);
  }
  {
    double worst = 0.0;
    for (double p2 : {-1.5, 0.0, 2.0}) {
      const ThresholdSlopes th = threshold_slopes(in, sc, Side::R, 0.0, p2);
      const double e0 = tangential_min(in, sc, Side::R, 0.0, p2);
      for (int m = 1; m <= 10; ++m) {
        const double d = 0.05 * m;
        worst = std::max(
            worst, std::fabs(half_hamiltonian(in, Side::R, HalfSign::plus, {0, 0},
                                              {th.p_plus + d, p2}) -
                             e0));
        const double q = th.p_plus - d;
        worst = std::max(worst, std::fabs(half_hamiltonian(in, Side::R, HalfSign::plus,
                                                           {0, 0}, {q, p2}) -
                                          hamiltonian(in, Side::R, {0, 0}, {q, p2})));
      }
    }
    add.leq("flat_active_decomposition",
            "H^{+,R} = E0^R beyond p0^{+,R}, = H^R before it", worst, 0.0, 1e-6);
  }
  {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Side s = rng.next_double() < 0.5 ? Side::L : Side::R;
      const double y2 = dyadic(rng);
      const Vec2 z{0.0, rng.uniform(-1, 1)};
      const Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      worst = std::max(worst, std::fabs(oscillatory_hamiltonian(in, s, z, p, y2) -
                                        oscillatory_hamiltonian(in, s, z, p, y2 + 1.0)));
    }
    add.leq("oscillatory_period", "H~^i is 1-periodic in y2", worst, 0.0, 0.0);
  }
  {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Side s = rng.next_double() < 0.5 ? Side::L : Side::R;
      const double y2 = rng.uniform(0, 1);
      const Vec2 z{0.0, rng.uniform(-1, 1)};
      const Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const Vec2 q{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const double dh = std::fabs(oscillatory_hamiltonian(in, s, z, p, y2) -
                                  oscillatory_hamiltonian(in, s, z, q, y2));
      worst = std::max(worst, dh - in.sheared_speed_bound() * (p - q).norm());
    }
    add.leq("oscillatory_lipschitz_p",
            "|H~(p) - H~(p')| <= sqrt(2)(1+||g'||) M_f |p - p'|", worst, 0.0, 1e-12);
  }

  // --- cell: Bellman operator checks on a small strip -----------------------
  {
    SolverParams small = prm;
    small.grid_h = 1.0 / 16.0;
    const StripGrid sg = StripGrid::make(1.0, small.grid_h);
    const double eta = 0.1;
    double mono = 0.0, contr = 0.0;
    const double dt_speed = in.sheared_speed_bound();
    const double dt = std::min(sg.h1, sg.h2) / dt_speed;
    const double gamma = std::exp(-eta * dt);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> u(sg.size()), w(sg.size());
      for (std::size_t n = 0; n < u.size(); ++n) {
        u[n] = rng.uniform(-5, 5);
        w[n] = u[n] + rng.uniform(0, 3);
      }
      const auto Tu = cell_bellman_apply(in, 0.0, 1.0, sg, eta, small, u);
      const auto Tw = cell_bellman_apply(in, 0.0, 1.0, sg, eta, small, w);
      double diff = 0.0, umax = 0.0;
      for (std::size_t n = 0; n < u.size(); ++n) {
        mono = std::max(mono, Tu[n] - Tw[n]);
        diff = std::max(diff, std::fabs(Tu[n] - Tw[n]));
        umax = std::max(umax, std::fabs(u[n] - w[n]));
      }
      contr = std::max(contr, diff - gamma * umax);
    }
    add.leq("bellman_monotone", "u <= w implies T u <= T w", mono, 0.0, 1e-12);
    add.leq("bellman_contraction", "||T u - T w|| <= e^{-eta dt} ||u - w||", contr, 0.0,
            1e-12);
  }

  // --- cell: effective table ------------------------------------------------
  const EffectiveTable table_raw =
      build_effective_table(in, sc, spec.z2_grid, spec.p2_grid, prm);
  {
    double mono = 0.0;
    for (const auto& s : table_raw.samples)
      for (std::size_t r = 0; r + 1 < s.rho_trace.size(); ++r)
        mono = std::max(mono, s.rho_trace[r].second - s.rho_trace[r + 1].second);
    add.leq("lambda_rho_monotone", "lambda_rho nondecreasing in rho", mono, 0.0,
            2.0 * prm.ergodic_tol);
  }
  {
    double worst = 0.0;
    for (const auto& s : table_raw.samples)
      worst = std::max(worst, tangential_min_both(in, sc, s.z2, s.p2) - s.E);
    add.leq("E_above_E0", "E(z2,p2) >= E0(z2,p2)", worst, 0.0, 5e-3);
  }
  {
    double worst = 0.0;
    const auto& p = table_raw.p2_grid;
    for (std::size_t iz = 0; iz < table_raw.z2_grid.size(); ++iz)
      for (std::size_t a = 0; a + 2 < p.size(); ++a)
        for (std::size_t b = a + 2; b < p.size(); b += 2) {
          const std::size_t m = (a + b) / 2;
          if ((b - a) % 2 != 0) continue;
          if (std::fabs(0.5 * (p[a] + p[b]) - p[m]) > 1e-9) continue;
          worst = std::max(worst, table_raw.value(iz, m) - 0.5 * (table_raw.value(iz, a) +
                                                                  table_raw.value(iz, b)));
        }
    add.leq("E_midpoint_convexity", "p2 -> E(z2,p2) is convex", worst, 0.0, 5e-3);
  }
  {
    double worst = 0.0;
    const auto& p = table_raw.p2_grid;
    for (std::size_t iz = 0; iz < table_raw.z2_grid.size(); ++iz)
      for (std::size_t a = 0; a + 1 < p.size(); ++a)
        worst = std::max(worst, std::fabs(table_raw.value(iz, a + 1) - table_raw.value(iz, a)) /
                                    (p[a + 1] - p[a]));
    add.leq("E_lipschitz_p2", "|E(z2,p2) - E(z2,p2')| <= M_f |p2 - p2'|", worst, sc.M_f, 0.02);
  }
  {
    double worst = 0.0;
    for (const auto& s : table_raw.samples) {
      worst = std::max(worst, sc.delta0 * std::fabs(s.p2) - sc.M_ell - s.E);
      worst = std::max(worst, s.E - (sc.M_f * std::fabs(s.p2) + sc.M_ell));
    }
    add.leq("E_coercivity", "delta0 |p2| - M_ell <= E <= M_f |p2| + M_ell", worst, 0.0, 0.05);
  }
  {
    double worst = 0.0;
    for (const auto& t : table_raw.tails) {
      for (double f : {t.f_hat, t.f_check}) {
        worst = std::max(worst, sc.delta0 - f);
        worst = std::max(worst, f - sc.M_f);
      }
    }
    add.leq("E_tail_slopes", "affine tail slopes lie in [delta0, M_f]", worst, 0.0, 0.02);
  }
  {
    double worst = 0.0;
    for (const auto& s : table_raw.samples) {
      worst = std::max(worst, s.slopes_R.bar - s.slopes_R.hat);  // bar <= hat on R
      worst = std::max(worst, s.slopes_L.hat - s.slopes_L.bar);  // hat <= bar on L
    }
    add.leq("slope_ordering", "Pi_bar <= Pi_hat (R), Pi_hat <= Pi_bar (L)", worst, 0.0, 1e-8);
  }

  // --- cell: corrector diagnostics -------------------------------------------
  {
    const double p2 = 2.0;
    const CellResult cell = ergodic_constant(in, sc, 0.0, p2, 2.0, prm);
    EffectiveSample s = effective_E(in, sc, 0.0, p2, prm);
    add.leq("corrector_normalized", "chi(0,0) = 0",
            std::fabs(cell.corrector[cell.grid.at(cell.grid.mid(), 0)]), 0.0, 0.0);
    const double d0t = sc.delta0 / g.shear_norm_bound();
    const double Lp = (sc.M_f * std::fabs(p2) + sc.M_ell) / d0t;
    add.leq("corrector_lipschitz", "Lip(chi) <= L(p2) = (M_f|p2| + M_ell)/delta0~",
            cell.lipschitz_observed, Lp * (1.0 + 2.0 * prm.grid_h), 0.0);
    const SlopeDiagnostic diag = corrector_slope_diagnostic(cell, s);
    add.leq("corrector_growth_fit", "corrector growth slope matches Pi_bar^R",
            std::fabs(diag.fit_slope_right - s.slopes_R.bar), 0.0, 0.1);
    add.leq("corrector_sandwich", "Pi_bar y1 <= W <= Pi_hat y1 within transient slack",
            diag.sandwich_violation, 0.0, diag.sandwich_slack);
  }

  // --- cell: E_K and Fenchel -------------------------------------------------
  {
    const EffectiveTable tk = ek_modify(table_raw, prm.K, sc.M_f);
    const double CK = (sc.M_f - sc.delta0) * tk.K + sc.M_ell;
    double worstb = 0.0, worstl = 0.0;
    const double z2probe = tk.z2_grid.front();
    double prev = 0.0, prevb = 0.0;
    for (int m = 0; m <= 64; ++m) {
      const double b = -sc.M_f + 2.0 * sc.M_f * m / 64.0;
      const double st = fenchel_star(tk, z2probe, b);
      worstb = std::max(worstb, std::fabs(st) - CK);
      if (m > 0) worstl = std::max(worstl, std::fabs(st - prev) - tk.K * (b - prevb));
      prev = st;
      prevb = b;
    }
    add.leq("fenchel_bound", "|E_K*| <= C_K = (M_f - delta0) K + M_ell", worstb, 0.0, 1e-6);
    add.leq("fenchel_lipschitz_b", "E_K* is K-Lipschitz in b", worstl, 0.0, 1e-6);
  }

  // --- box solvers -----------------------------------------------------------
  const EffectiveTable table_k = ek_modify(table_raw, prm.K, sc.M_f);
  {
    // One Bellman sweep preserves nodewise order (discrete comparison).
    const BoxGrid bg = BoxGrid::make(1.0, 1.0, 17, 17);
    double mono = 0.0;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> u(bg.size()), w(bg.size());
      for (std::size_t n = 0; n < u.size(); ++n) {
        u[n] = rng.uniform(-3, 3);
        w[n] = u[n] + rng.uniform(0, 2);
      }
      const auto Tu = effective_bellman_apply(in, table_k, bg, prm, u);
      const auto Tw = effective_bellman_apply(in, table_k, bg, prm, w);
      for (std::size_t n = 0; n < u.size(); ++n) mono = std::max(mono, Tu[n] - Tw[n]);
    }
    add.leq("discrete_comparison", "one sweep preserves u <= w", mono, 0.0, 1e-12);
  }
  {
    // Constant costs on both sides force v = c/lambda exactly.
    const ProblemInstance cc = constant_cost_copy(in, 1.0);
    const Scales csc{cc.M_f(), cc.M_ell(), sc.delta0};
    SolverParams pcc = prm;
    pcc.rho_max = 2.0;
    const double kcc = 3.0 * csc.M_f;
    const EffectiveTable ct = ek_modify(
        build_effective_table(cc, csc, {-1.0, 1.0}, {-kcc, 0.0, kcc}, pcc), kcc, csc.M_f);
    const ValueField vf = solve_effective(cc, ct, BoxGrid::make(1, 1, 33, 33), prm);
    double worst = 0.0;
    for (double x : vf.values) worst = std::max(worst, std::fabs(x - 1.0 / lambda));
    add.leq("constant_cost_field", "constant cost solves to c/lambda", worst, 0.0,
            2.0 * prm.eps_fix);
  }
  {
    // Cost shift by s moves the field by s/lambda (operator affinity).
    SolverParams tight = prm;
    tight.eps_fix = 1e-13;
    const double s = 0.7;
    const ProblemInstance shifted = [&] {
      SideSpec l = in.spec(Side::L);
      SideSpec r = in.spec(Side::R);
      l.cost.c += s;
      r.cost.c += s;
      return ProblemInstance(std::move(l), std::move(r), in.profile(), in.discount());
    }();
    const BoxGrid bg = BoxGrid::make(0.5, 0.5, 33, 33);
    const ValueField va = solve_epsilon(in, 0.5, bg, tight);
    const ValueField vb = solve_epsilon(shifted, 0.5, bg, tight);
    double worst = 0.0;
    for (std::size_t n = 0; n < va.values.size(); ++n)
      worst = std::max(worst, std::fabs(vb.values[n] - va.values[n] - s / lambda));
    add.leq("cost_shift_affinity", "l -> l + s shifts v by s/lambda", worst, 0.0, 1e-10);
  }
  {
    // Sup bound and eps-periodicity of the straightened eps-problem.
    double bound_viol = -std::numeric_limits<double>::infinity();
    double period_viol = 0.0;
    double traj_viol = -std::numeric_limits<double>::infinity();
    const double eps = 0.4;
    const int m1 = static_cast<int>(std::ceil(8.0 / eps));
    const BoxGrid bg = BoxGrid::make(1.0, 1.0, 2 * m1 + 1, 2 * m1 + 1);
    const ValueField vf = solve_epsilon(in, eps, bg, prm);
    for (double x : vf.values)
      bound_viol = std::max(bound_viol, std::fabs(x) - sc.M_ell / lambda);
    add.leq("eps_value_bound", "||v_eps|| <= M_ell / lambda", bound_viol, 0.0, 1e-6);

    if (in.cost_x_independent()) {
      const int shift = static_cast<int>(std::lround(eps / bg.h2));
      for (int j = 0; j + shift < bg.n2; ++j) {
        if (std::fabs(bg.z2(j)) > 0.6 || std::fabs(bg.z2(j + shift)) > 0.6) continue;
        for (int i = 0; i < bg.n1; ++i) {
          if (std::fabs(bg.z1(i)) > 0.6) continue;
          period_viol = std::max(period_viol, std::fabs(vf.at(i, j) - vf.at(i, j + shift)));
        }
      }
      add.leq("eps_periodicity", "v_eps(z1, z2) = v_eps(z1, z2 + eps) in the window",
              period_viol, 0.0, vf.grid_tolerance);
    }

    // Trajectory oracle: simulated discounted costs dominate the grid value.
    const double horizon = 10.0 / lambda;
    for (int k = 0; k < 20; ++k) {
      const PolicyDraw pd = draw_policy(in, eps, bg, rng, horizon, 0.01);
      const TrajectoryResult tr = simulate_trajectory(in, eps, pd.start, pd.pieces, horizon,
                                                      0.01);
      const double upper = tr.discounted_cost + tr.truncation_bound;
      traj_viol = std::max(traj_viol, vf.interp(pd.start) - upper);
    }
    add.leq("trajectory_lower_bound",
            "simulated cost + truncation bound >= grid value - 2 grid tol", traj_viol, 0.0,
            2.0 * vf.grid_tolerance);
  }
  {
    // With E = E0 (eikonal-style instances) the tangential candidates are
    // redundant at grid accuracy.
    const BoxGrid bg =
        BoxGrid::make(spec.box_extent1, spec.box_extent2, spec.box_n1 | 1, spec.box_n2 | 1);
    EffectiveSolveOptions with, without;
    without.use_tangential = false;
    const ValueField va = solve_effective(in, table_k, bg, prm, with);
    const ValueField vb = solve_effective(in, table_k, bg, prm, without);
    double worst = 0.0;
    for (std::size_t n = 0; n < va.values.size(); ++n)
      worst = std::max(worst, std::fabs(va.values[n] - vb.values[n]));
    add.leq("interface_consistency",
            "dropping tangential candidates changes v below grid tolerance", worst, 0.0,
            0.01);
  }

  rep.passed = true;
  for (const auto& c : rep.checks) rep.passed = rep.passed && c.pass;
  return rep;
}

}  // namespace hjhom
