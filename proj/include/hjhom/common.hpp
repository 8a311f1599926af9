#ifndef HJHOM_COMMON_HPP
#define HJHOM_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjhom {

// ---------------------------------------------------------------------------
// Small 2D algebra. The whole model lives in the plane; a hand-rolled vector
// keeps the hot loops transparent to the optimizer.
// ---------------------------------------------------------------------------
struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
  double norm() const { return std::hypot(x, y); }
};

enum class Side : int { L = 0, R = 1 };

inline int side_sigma(Side s) { return s == Side::L ? -1 : +1; }
inline const char* side_name(Side s) { return s == Side::L ? "L" : "R"; }
inline Side other_side(Side s) { return s == Side::L ? Side::R : Side::L; }

// ---------------------------------------------------------------------------
// Error taxonomy. Fine-grained codes are grouped into the coarse classes the
// command surface (and the C API) reports.
// ---------------------------------------------------------------------------
enum class Errc {
  parse,
  invalid_arg,
  io,
  // validation class
  degenerate_instance,
  unknown_control,
  not_on_interface,
  side_mismatch,
  out_of_domain,
  // solver class
  empty_constraint_set,
  bracket_failure,
  level_below_minimum,
  no_admissible_control,
  non_convergence,
  schedule_plateau,
  non_monotone_trace,
  mixing_violation,
  out_of_box,
  table_coverage,
  // property class
  property_failure,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64). std::uniform_real_distribution is
// implementation-defined; reports must be byte-identical across toolchains.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo,hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Logging, controlled by the HJH_LOG environment variable (off|info|debug).
// ---------------------------------------------------------------------------
enum class LogLevel : int { off = 0, info = 1, debug = 2 };
LogLevel log_level();
void log_line(LogLevel lvl, const std::string& msg);
inline void log_info(const std::string& msg) { log_line(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::debug, msg); }

// FNV-1a, used for config hashes in run manifests.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace hjhom

#endif
