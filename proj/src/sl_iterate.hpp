#ifndef HJHOM_SRC_SL_ITERATE_HPP
#define HJHOM_SRC_SL_ITERATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <vector>

#include "hjhom/common.hpp"

namespace hjhom::detail {

// Shared driver for the discounted semi-Lagrangian fixed points.
//
// The iteration alternates blocks of in-place Gauss-Seidel sweeps (cycling
// through four deterministic orderings) with one explicit Bellman application
// T(v) used both to certify the true sup-residual and to deflate the slow
// near-constant error mode: T(v + c 1) = T(v) + gamma c, so once the update
// field is nearly constant the remaining geometric tail can be summed in one
// shift. When iterating from a discrete subsolution the shift by
// gamma/(1-gamma) * min(T(v)-v) provably keeps the iterate below the fixed
// point, which preserves the a-priori sup bound of the limit.
struct IterControl {
  double gamma{0.0};       // one-step discount factor e^{-lambda dt}
  double eps_fix{1e-7};    // target sup-residual
  int max_sweeps{200000};
  int gs_block{4};         // Gauss-Seidel sweeps between Bellman applications
                           // (multiple of 4: keeps the ordering phase fixed so
                           // block residual ratios are smooth)
  bool monotone_from_below{false};
  const char* what{"solve"};
};

struct IterResult {
  int sweeps{0};
  double residual{0.0};
};

// sweep(ordering): one in-place Gauss-Seidel pass, ordering in {0,1,2,3}.
// bellman(out): writes T(v) into out (same layout as v).
inline IterResult sl_iterate(std::vector<double>& v,
                             const std::function<void(int)>& sweep,
                             const std::function<void(std::vector<double>&)>& bellman,
                             const IterControl& ctl) {
  IterResult res;
  std::vector<double> scratch(v.size());
  const double tail = ctl.gamma / (1.0 - ctl.gamma);
  int ordering = 0;
  double prev_residual = -1.0;
  double prev_ratio = -1.0;
  int since_extrapolation = 0;
  while (true) {
    for (int s = 0; s < ctl.gs_block; ++s) {
      sweep(ordering);
      ordering = (ordering + 1) & 3;
      ++res.sweeps;
    }
    bellman(scratch);
    ++res.sweeps;
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -dmin;
    for (std::size_t n = 0; n < v.size(); ++n) {
      const double d = scratch[n] - v[n];
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    res.residual = std::max(std::fabs(dmin), std::fabs(dmax));
    if (res.residual <= ctl.eps_fix) return res;

    const double ratio = prev_residual > 0.0 ? res.residual / prev_residual : -1.0;
#ifdef HJHOM_TRACE_RATIOS
    std::fprintf(stderr, "blk res=%.3e ratio=%.6f prev=%.6f dmin=%.3e dmax=%.3e\n",
                 res.residual, ratio, prev_ratio, dmin, dmax);
#endif
    prev_residual = res.residual;
    ++since_extrapolation;
    v.swap(scratch);  // keep the Bellman application

    // One-sided update fields allow a provable geometric-tail shift: if
    // T(v) >= v + m 1 with m > 0 then T(v) + m gamma/(1-gamma) 1 is still a
    // subsolution (mirrored for supersolutions). A weak shift (dmin far below
    // the residual) is skipped outside the monotone mode so the residual-ratio
    // estimator sees an unperturbed sequence.
    double shift = 0.0;
    if (dmin > 0.0) shift = tail * dmin;
    else if (dmax < 0.0) shift = tail * dmax;
    const bool significant = std::fabs(shift) * (1.0 - ctl.gamma) > 0.25 * res.residual;
    if (shift != 0.0 && (ctl.monotone_from_below || significant)) {
      for (double& x : v) x += shift;
      prev_residual = -1.0;  // the shift invalidates the ratio estimate
      prev_ratio = -1.0;
    } else if (!ctl.monotone_from_below && since_extrapolation >= 2 && ratio > 0.2 &&
               ratio < 0.99995 && prev_ratio > 0.0 &&
               std::fabs(ratio - prev_ratio) <= 0.1 * (1.0 - ratio) + 1e-7) {
      // Residuals settled into a single geometric mode e_n ~ mu^n phi: jump
      // the remaining tail along the measured update direction. The fixed
      // point is untouched, so a misestimated mu self-corrects.
      const double factor = std::min(ratio / (1.0 - ratio), 2e4);
      for (std::size_t n = 0; n < v.size(); ++n) v[n] += factor * (v[n] - scratch[n]);
      prev_residual = -1.0;
      prev_ratio = -1.0;
      since_extrapolation = 0;
    } else {
      prev_ratio = ratio;
    }
    if (res.sweeps >= ctl.max_sweeps)
      fail(Errc::non_convergence,
           std::string(ctl.what) + ": no fixed point within sweep budget (residual " +
               std::to_string(res.residual) + ")");
  }
}

// Bilinear interpolation helpers ------------------------------------------------

// Value at fractional index (fi, fj) of a field stored row-major as
// v[j * n1 + i], fi already guaranteed inside [0, n1-1] up to rounding.
inline double interp_clamped(const std::vector<double>& v, int n1, int n2, double fi,
                             double fj) {
  fi = std::clamp(fi, 0.0, static_cast<double>(n1 - 1));
  fj = std::clamp(fj, 0.0, static_cast<double>(n2 - 1));
  int i0 = std::min(static_cast<int>(fi), n1 - 2);
  int j0 = std::min(static_cast<int>(fj), n2 - 2);
  if (n1 == 1) i0 = 0;
  if (n2 == 1) j0 = 0;
  const double wx = fi - i0;
  const double wy = fj - j0;
  const int i1 = std::min(i0 + 1, n1 - 1);
  const int j1 = std::min(j0 + 1, n2 - 1);
  const double a = (1.0 - wx) * v[static_cast<std::size_t>(j0) * n1 + i0] +
                   wx * v[static_cast<std::size_t>(j0) * n1 + i1];
  const double b = (1.0 - wx) * v[static_cast<std::size_t>(j1) * n1 + i0] +
                   wx * v[static_cast<std::size_t>(j1) * n1 + i1];
  return (1.0 - wy) * a + wy * b;
}

}  // namespace hjhom::detail

#endif
