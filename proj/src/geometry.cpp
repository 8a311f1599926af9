#include "hjhom/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace hjhom {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kSupSamples = 4096;
}  // namespace

LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* e = std::getenv("HJH_LOG");
    if (!e) return LogLevel::off;
    std::string s(e);
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    return LogLevel::off;
  }();
  return lvl;
}

void log_line(LogLevel lvl, const std::string& msg) {
  if (static_cast<int>(lvl) <= static_cast<int>(log_level()))
    std::fprintf(stderr, "[hjh] %s\n", msg.c_str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

OscillationProfile::OscillationProfile(std::vector<double> fourier_sin,
                                       std::vector<double> fourier_cos)
    : sin_(std::move(fourier_sin)), cos_(std::move(fourier_cos)) {
  for (double a : sin_)
    if (a != 0.0) flat_ = false;
  for (double b : cos_)
    if (b != 0.0) flat_ = false;
  if (flat_) return;

  // Coefficient bounds |g^(m)| <= sum_k (2 pi k)^m (|a_k| + |b_k|).
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;
  for (std::size_t k = 0; k < std::max(sin_.size(), cos_.size()); ++k) {
    const double w = kTwoPi * static_cast<double>(k + 1);
    double amp = 0.0;
    if (k < sin_.size()) amp += std::fabs(sin_[k]);
    if (k < cos_.size()) amp += std::fabs(cos_[k]);
    b1 += w * amp;
    b2 += w * w * amp;
    b3 += w * w * w * amp;
  }
  sup_g_second_bound_ = b2;

  double mg = 0.0, mgp = 0.0;
  const double h = 1.0 / kSupSamples;
  for (int i = 0; i < kSupSamples; ++i) {
    Jet j = eval(i * h);
    mg = std::max(mg, std::fabs(j.g));
    mgp = std::max(mgp, std::fabs(j.g_prime));
  }
  // Pad by the half-interval growth allowed by the next derivative.
  sup_g_ = mg + 0.5 * h * b1;
  sup_g_prime_ = mgp + 0.5 * h * b2;
  (void)b3;
}

OscillationProfile::Jet OscillationProfile::eval(double t) const {
  if (flat_) return {0.0, 0.0, 0.0};
  // Fold into one period; keeps g(t+1) == g(t) exact in floating point.
  double tf = t - std::floor(t);
  double g = 0.0, gp = 0.0, gpp = 0.0;
  for (std::size_t k = 0; k < std::max(sin_.size(), cos_.size()); ++k) {
    const double w = kTwoPi * static_cast<double>(k + 1);
    const double s = std::sin(w * tf);
    const double c = std::cos(w * tf);
    if (k < sin_.size() && sin_[k] != 0.0) {
      g += sin_[k] * s;
      gp += sin_[k] * w * c;
      gpp -= sin_[k] * w * w * s;
    }
    if (k < cos_.size() && cos_[k] != 0.0) {
      g += cos_[k] * c;
      gp -= cos_[k] * w * s;
      gpp -= cos_[k] * w * w * c;
    }
  }
  return {g, gp, gpp};
}

double OscillationProfile::shear_norm_bound() const {
  return std::sqrt(2.0) * (1.0 + sup_g_prime_);
}

Vec2 straighten(const OscillationProfile& g, Vec2 x, double eps) {
  if (!(eps > 0.0)) fail(Errc::invalid_arg, "straighten: eps must be positive");
  return {x.x - eps * g.value(x.y / eps), x.y};
}

Vec2 unstraighten(const OscillationProfile& g, Vec2 z, double eps) {
  if (!(eps > 0.0)) fail(Errc::invalid_arg, "unstraighten: eps must be positive");
  return {z.x + eps * g.value(z.y / eps), z.y};
}

Mat2 shear_jacobian(const OscillationProfile& g, double y2) {
  return {1.0, -g.derivative(y2), 0.0, 1.0};
}

Mat2 shear_jacobian_inverse(const OscillationProfile& g, double y2) {
  return {1.0, g.derivative(y2), 0.0, 1.0};
}

Vec2 interface_normal(const OscillationProfile& g, Vec2 x, double eps) {
  Vec2 z = straighten(g, x, eps);
  if (std::fabs(z.x) > kInterfaceTol)
    fail(Errc::not_on_interface, "interface_normal: point is not on the interface");
  return {1.0, -g.derivative(x.y / eps)};
}

}  // namespace hjhom
