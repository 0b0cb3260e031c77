#pragma once

#include <cmath>
#include <random>
#include <vector>

// Test-side reference values, kept independent of the library code paths
// they are used to check.

namespace oracles {

inline constexpr double pi = 3.14159265358979323846;

/// sinh by series summation.
inline double sinh_series(double x) {
  double term = x, sum = x;
  for (int k = 1; k < 40; ++k) {
    term *= x * x / ((2 * k) * (2 * k + 1));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

/// int_a^b dr / sinh(r) = log(tanh(b/2)) - log(tanh(a/2)).
inline double sinh_resistance(double a, double b) {
  return std::log(std::tanh(b / 2)) - std::log(std::tanh(a / 2));
}

/// Planar disk kernel, pole at the center, unit inward flux:
/// (1/2pi) log(R/r).
inline double disk_kernel_2d(double R, double r) {
  return std::log(R / r) / (2 * pi);
}

/// Spatial ball kernel, pole at the center: (1/4pi)(1/r - 1/R).
inline double ball_kernel_3d(double R, double r) {
  return (1.0 / r - 1.0 / R) / (4 * pi);
}

/// Deterministic uniform double in [lo, hi).
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace oracles
