#pragma once

#include <cmath>

namespace pieapp::numeric {

// Preference sigmoid 1 / (1 + e^(s_a - s_b)). The exponent is negated
// relative to the textbook logistic so that the lower-scored item gets the
// higher preference probability.
//
// Branching on the sign of the difference makes the complement exact:
// swapping the arguments negates d exactly, routes through the same g value,
// and 1 - g is exact for g in [1/2, 1), so p(a,b) + p(b,a) == 1 bitwise.
inline double preference_sigmoid(double s_a, double s_b) {
  const double d = s_a - s_b;
  if (d <= 0.0) {
    return 1.0 / (1.0 + std::exp(d));  // in [1/2, 1)
  }
  return 1.0 - 1.0 / (1.0 + std::exp(-d));
}

// Numerically safe softplus: log(1 + e^x).
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// d/dx softplus(x) = logistic(x).
inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : 1.0 - 1.0 / (1.0 + std::exp(x));
}

}  // namespace pieapp::numeric
