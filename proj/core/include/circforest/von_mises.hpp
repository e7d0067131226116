#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "circforest/angle.hpp"

namespace circforest {

/// Concentrations are capped here so downstream arithmetic stays finite when
/// a sample has (numerically) zero dispersion.
inline constexpr double kKappaCap = 1e5;

/// Location/concentration pair of a von Mises distribution.
/// kappa = 0 is the circular uniform distribution.
struct VonMisesParams {
    Angle mu;
    double kappa = 0.0;
};

/// Fit result; `degenerate` is set when the data pinned kappa to the cap
/// (all angles equal) or to zero (vanishing resultant, e.g. antipodal pairs).
struct VonMisesFit {
    VonMisesParams params;
    bool degenerate = false;
};

double density(Angle y, const VonMisesParams& p);
double log_likelihood(Angle y, const VonMisesParams& p);

/// Gradient of log_likelihood in (mu, kappa).
struct Score {
    double d_mu = 0.0;
    double d_kappa = 0.0;
};
Score score(Angle y, const VonMisesParams& p);

/// P(Y in arc from `origin`, counterclockwise, up to y). Nondecreasing in the
/// arc length; a full circle integrates to 1.
double cdf(Angle y, const VonMisesParams& p, Angle origin);

/// n draws from p; deterministic for a given generator state.
std::vector<Angle> sample(const VonMisesParams& p, std::size_t n, std::mt19937_64& rng);
std::vector<Angle> sample(const VonMisesParams& p, std::size_t n, std::uint64_t seed);

/// Inverse of bessel_i1_i0_ratio: the concentration whose mean resultant
/// length equals rbar, capped at kKappaCap. Requires rbar in [0, 1].
double resultant_to_concentration(double rbar);

/// Maximum likelihood fit, optionally weighted. Weights must be nonnegative
/// with a positive sum (EstimationError otherwise). A vanishing weighted
/// resultant yields the uniform fit (mu = 0, kappa = 0) with the degenerate
/// flag set rather than an error.
VonMisesFit fit_mle(std::span<const Angle> ys);
VonMisesFit fit_mle(std::span<const Angle> ys, std::span<const double> weights);

}  // namespace circforest
