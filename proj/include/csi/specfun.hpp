#pragma once

#include <complex>

namespace csi::specfun {

// Cylinder functions of order 0 and 1 for real non-negative arguments.
// Ascending series (extended precision) below kSeriesCutoff, Hankel
// asymptotic expansion above it.

inline constexpr double kSeriesCutoff = 17.0;

/// J_order(x), order in {0, 1}, x >= 0.
double bessel_j(int order, double x);

/// Y_order(x), order in {0, 1}, x > 0.
double bessel_y(int order, double x);

/// H^(2)_order(x) = J_order(x) - j Y_order(x), x > 0.
std::complex<double> hankel2(int order, double x);

}  // namespace csi::specfun
