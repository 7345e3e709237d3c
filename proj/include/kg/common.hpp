#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace kg {

constexpr double pi = 3.14159265358979323846;

// Japanese bracket, used in all weighted norms.
inline double jbracket(double x) { return std::sqrt(1.0 + x * x); }

inline double pow2(int k) { return std::ldexp(1.0, k); }

// Validation failures on user-supplied configuration or operands.
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Requested computation is outside what the discretization can resolve.
struct range_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Numerical procedure failed (instability, non-convergence, cost cap).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kg
