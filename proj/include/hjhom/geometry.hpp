#ifndef HJHOM_GEOMETRY_HPP
#define HJHOM_GEOMETRY_HPP

#include <vector>

#include "hjhom/common.hpp"

namespace hjhom {

// Periodic C^2 interface profile g(t) = sum_k a_k sin(2 pi k t) + b_k cos(2 pi k t).
// Restricting g to finite Fourier sums makes the C^2 requirement exact and the
// sup-norms of g, g', g'' certifiable from the coefficients.
class OscillationProfile {
 public:
  OscillationProfile() = default;
  OscillationProfile(std::vector<double> fourier_sin, std::vector<double> fourier_cos);

  struct Jet {
    double g;
    double g_prime;
    double g_second;
  };

  Jet eval(double t) const;
  double value(double t) const { return eval(t).g; }
  double derivative(double t) const { return eval(t).g_prime; }

  // Certified upper bounds: dense sampling at 4096 points padded by the
  // coefficient bound on the next derivative over half a sample interval.
  double sup_g() const { return sup_g_; }
  double sup_g_prime() const { return sup_g_prime_; }
  // Coefficient (triangle-inequality) bound on |g''|.
  double sup_g_second_bound() const { return sup_g_second_bound_; }

  bool is_flat() const { return flat_; }
  const std::vector<double>& fourier_sin() const { return sin_; }
  const std::vector<double>& fourier_cos() const { return cos_; }

  // sqrt(2) * (1 + ||g'||_inf): operator-norm bound for the shear and its inverse.
  double shear_norm_bound() const;

 private:
  std::vector<double> sin_;
  std::vector<double> cos_;
  double sup_g_{0.0};
  double sup_g_prime_{0.0};
  double sup_g_second_bound_{0.0};
  bool flat_{true};
};

// sigma^L = -1, sigma^R = +1 and the frame vectors; fixed constants.
struct FrameConstants {
  static constexpr int sigma_L = -1;
  static constexpr int sigma_R = +1;
  static constexpr Vec2 e1{1.0, 0.0};
  static constexpr Vec2 e2{0.0, 1.0};
};

struct Mat2 {
  // row-major [[a, b], [c, d]]
  double a, b, c, d;
  Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  Vec2 apply_transpose(Vec2 v) const { return {a * v.x + c * v.y, b * v.x + d * v.y}; }
};

// z = G(x) = (x1 - eps g(x2/eps), x2); maps Gamma_eps onto {z1 = 0}.
Vec2 straighten(const OscillationProfile& g, Vec2 x, double eps);
// x = G^{-1}(z) = (z1 + eps g(z2/eps), z2).
Vec2 unstraighten(const OscillationProfile& g, Vec2 z, double eps);

// J~(y2) = [[1, -g'(y2)], [0, 1]]; the eps-scale Jacobian is J_eps(x) = J~(x2/eps).
Mat2 shear_jacobian(const OscillationProfile& g, double y2);
Mat2 shear_jacobian_inverse(const OscillationProfile& g, double y2);

// Normal (1, -g'(x2/eps)) to Gamma_eps at x, oriented from Omega^L to Omega^R.
// Throws not_on_interface when |straighten(x)_1| > 1e-9.
Vec2 interface_normal(const OscillationProfile& g, Vec2 x, double eps);

constexpr double kInterfaceTol = 1e-9;

}  // namespace hjhom

#endif
