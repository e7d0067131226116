#include <doctest.h>

#include <cmath>

#include "circforest/bessel.hpp"
#include "test_helpers.hpp"

using namespace circforest;
using circforest::testing::bessel_series_oracle;

TEST_CASE("values at zero") {
    CHECK(bessel_i(0, 0.0) == 1.0);
    CHECK(bessel_i(1, 0.0) == 0.0);
    CHECK(bessel_i0_scaled(0.0) == 1.0);
    CHECK(bessel_i1_i0_ratio(0.0) == 0.0);
}

TEST_CASE("power series oracle at kappa = 1") {
    CHECK(bessel_i(0, 1.0) == doctest::Approx(bessel_series_oracle(0, 1.0)).epsilon(1e-14));
    CHECK(bessel_i(1, 1.0) == doctest::Approx(bessel_series_oracle(1, 1.0)).epsilon(1e-14));
    // I0(1) = 1.26607..., I1(1) = 0.56516...
    CHECK(bessel_i(0, 1.0) == doctest::Approx(1.2660658777520084).epsilon(1e-13));
    CHECK(bessel_i(1, 1.0) == doctest::Approx(0.5651591039924850).epsilon(1e-13));
}

TEST_CASE("agrees with std::cyl_bessel_i over [0, 700]") {
    for (double x : {1e-10, 0.25, 1.0, 4.0, 10.0, 19.5, 20.0, 20.5, 35.0,
                     50.0, 120.0, 300.0, 700.0}) {
        CAPTURE(x);
        CHECK(bessel_i0(x) == doctest::Approx(std::cyl_bessel_i(0.0, x)).epsilon(1e-12));
        CHECK(bessel_i1(x) == doctest::Approx(std::cyl_bessel_i(1.0, x)).epsilon(1e-12));
        CHECK(log_bessel_i0(x) ==
              doctest::Approx(std::log(std::cyl_bessel_i(0.0, x))).epsilon(1e-12));
    }
}

TEST_CASE("scaled forms stay finite and consistent") {
    for (double x : {0.5, 20.0, 100.0, 1e4, 1e5, 1e6}) {
        CAPTURE(x);
        const double i0s = bessel_i0_scaled(x);
        const double i1s = bessel_i1_scaled(x);
        CHECK(std::isfinite(i0s));
        CHECK(i0s > 0.0);
        CHECK(i1s < i0s);
        CHECK(bessel_i1_i0_ratio(x) == doctest::Approx(i1s / i0s).epsilon(1e-15));
    }
    // consistency with the unscaled values where those are representable
    for (double x : {0.5, 5.0, 30.0, 200.0}) {
        CHECK(bessel_i0_scaled(x) * std::exp(x) == doctest::Approx(bessel_i0(x)).epsilon(1e-13));
        CHECK(bessel_i1_scaled(x) * std::exp(x) == doctest::Approx(bessel_i1(x)).epsilon(1e-13));
    }
}

TEST_CASE("ratio is monotone and matches its large-argument expansion") {
    double prev = -1.0;
    for (double x = 0.0; x <= 30.0; x += 0.25) {
        const double a = bessel_i1_i0_ratio(x);
        CHECK(a > prev);
        CHECK(a < 1.0);
        prev = a;
    }
    // A(x) = 1 - 1/(2x) - 1/(8x^2) - 1/(8x^3) + O(x^-4)
    for (double x : {1e3, 1e4, 1e5}) {
        const double expansion = 1.0 - 1.0 / (2.0 * x) - 1.0 / (8.0 * x * x) - 1.0 / (8.0 * x * x * x);
        CHECK(bessel_i1_i0_ratio(x) == doctest::Approx(expansion).epsilon(1e-12));
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(bessel_i(0, -1.0), std::domain_error);
    CHECK_THROWS_AS(bessel_i(0, std::nan("")), std::domain_error);
    CHECK_THROWS_AS(bessel_i(0, std::numeric_limits<double>::infinity()), std::domain_error);
    CHECK_THROWS_AS(bessel_i(2, 1.0), std::domain_error);
}
