#include "circforest/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace circforest {

namespace {

constexpr double kSeriesAsymptoticCrossover = 20.0;

// Ascending series I_nu(x) = (x/2)^nu * sum_m (x^2/4)^m / (m! (m+nu)!),
// nu in {0,1}. All terms positive, no cancellation.
double series_i(int nu, double x) {
    const double q = 0.25 * x * x;
    double term = (nu == 0) ? 1.0 : 0.5 * x;
    double sum = term;
    for (int m = 1; m < 200; ++m) {
        term *= q / (static_cast<double>(m) * (m + nu));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

// Asymptotic expansion I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k s_k with
// s_0 = 1, s_{k+1} = -s_k (4 nu^2 - (2k+1)^2) / (8 (k+1) x).
// Truncated at the smallest term; for x >= 20 that term is ~1e-17 relative.
double asymptotic_scaled_i(int nu, double x) {
    const double mu4 = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    double prev_abs = std::numeric_limits<double>::max();
    for (int k = 0; k < 60; ++k) {
        const double odd = 2.0 * k + 1.0;
        term *= -(mu4 - odd * odd) / (8.0 * (k + 1) * x);
        const double a = std::fabs(term);
        if (a >= prev_abs) break;  // series started diverging
        sum += term;
        prev_abs = a;
        if (a < 1e-18 * std::fabs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

void check_argument(double x) {
    if (!std::isfinite(x) || x < 0.0) {
        throw std::domain_error("bessel_i: argument must be finite and nonnegative");
    }
}

}  // namespace

double bessel_i0_scaled(double x) {
    check_argument(x);
    if (x < kSeriesAsymptoticCrossover) return std::exp(-x) * series_i(0, x);
    return asymptotic_scaled_i(0, x);
}

double bessel_i1_scaled(double x) {
    check_argument(x);
    if (x < kSeriesAsymptoticCrossover) return std::exp(-x) * series_i(1, x);
    return asymptotic_scaled_i(1, x);
}

double bessel_i0(double x) {
    check_argument(x);
    if (x < kSeriesAsymptoticCrossover) return series_i(0, x);
    return asymptotic_scaled_i(0, x) * std::exp(x);
}

double bessel_i1(double x) {
    check_argument(x);
    if (x < kSeriesAsymptoticCrossover) return series_i(1, x);
    return asymptotic_scaled_i(1, x) * std::exp(x);
}

double log_bessel_i0(double x) {
    check_argument(x);
    if (x < kSeriesAsymptoticCrossover) return std::log(series_i(0, x));
    return x + std::log(asymptotic_scaled_i(0, x));
}

double bessel_i1_i0_ratio(double x) {
    check_argument(x);
    if (x == 0.0) return 0.0;
    if (x < 1e-8) return 0.5 * x;  // A(x) = x/2 - x^3/16 + O(x^5)
    if (x < kSeriesAsymptoticCrossover) return series_i(1, x) / series_i(0, x);
    return asymptotic_scaled_i(1, x) / asymptotic_scaled_i(0, x);
}

double bessel_i(int order, double kappa) {
    if (order != 0 && order != 1) {
        throw std::domain_error("bessel_i: order must be 0 or 1");
    }
    return order == 0 ? bessel_i0(kappa) : bessel_i1(kappa);
}

}  // namespace circforest
