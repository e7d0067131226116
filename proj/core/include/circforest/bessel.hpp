#pragma once

namespace circforest {

// Modified Bessel functions of the first kind, orders 0 and 1, for
// nonnegative real arguments. Power series below x = 20, asymptotic
// expansion above; relative error is at machine-precision level across
// the supported range.

double bessel_i0(double x);
double bessel_i1(double x);

/// exp(-x) * I0(x); stays finite for arbitrarily large x.
double bessel_i0_scaled(double x);
/// exp(-x) * I1(x).
double bessel_i1_scaled(double x);

double log_bessel_i0(double x);

/// I1(x)/I0(x), the mean resultant length of a von Mises distribution with
/// concentration x. Monotone increasing from 0 to 1.
double bessel_i1_i0_ratio(double x);

/// I_order(kappa) for order 0 or 1. Throws std::domain_error on non-finite
/// or negative kappa.
double bessel_i(int order, double kappa);

}  // namespace circforest
