#pragma once

// shared scalar helpers, tolerances and error types used across the library.

#include <cmath>
#include <stdexcept>
#include <string>

namespace calib {

// default comparison tolerance for floating point checks throughout the library
inline constexpr const char* kLibraryVersion = "0.1.0";

inline constexpr double kDefaultTol = 1e-9;
// tolerance for probability-mass bookkeeping (masses summing to one, etc.)
inline constexpr double kMassTol = 1e-12;

// raised when caller-supplied data violates a documented precondition
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// raised for combinations the library deliberately refuses to compute
// (for example threshold families of a Lipschitz class, which are not finite)
struct unsupported_error : std::logic_error {
  using std::logic_error::logic_error;
};

// raised when an internal consistency check fails (witness re-evaluation drift
// and similar); seeing this means a bug, not bad input
struct internal_error : std::logic_error {
  using std::logic_error::logic_error;
};

inline double clip01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// sign with an explicit convention at zero: tie in {-1, 0, +1} is the value
// assigned to sign(0).  everywhere else this is the usual sign function.
inline double sign_with_tie(double x, int tie) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return static_cast<double>(tie);
}

inline bool near(double a, double b, double tol = kDefaultTol) {
  return std::fabs(a - b) <= tol;
}

}  // namespace calib
