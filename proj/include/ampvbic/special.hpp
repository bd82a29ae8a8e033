#pragma once

#include <cmath>
#include <limits>

namespace ampvbic {

// Digamma for x > 0. Shifts the argument above 10 with the recurrence
// psi(x) = psi(x + 1) - 1/x, then sums the asymptotic series
//   ln x - 1/(2x) - sum_n B_2n / (2n x^2n).
// Truncation error is below 1e-16 once the argument is shifted.
inline double digamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B2/2, B4/4, ..., B14/14
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 -
                                              inv2 * (691.0 / 32760 -
                                                      inv2 * (1.0 / 12)))))));
  return shift + std::log(x) - 0.5 * inv - series;
}

}  // namespace ampvbic
