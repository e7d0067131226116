#pragma once

#include <cstdint>
#include <string_view>

#include "circforest/dataset.hpp"

namespace circforest {

/// Synthetic data generating processes used for fixtures and benchmarks:
///  - TwoRegime: mu jumps by pi where covariate x crosses 0.5, kappa = 5
///  - Smooth:    mu(x) = x on [0, pi], kappa = 5
///  - Seasonal:  hourly series, mu follows the day of year, kappa = 3
enum class Dgp { TwoRegime, Smooth, Seasonal };

Dgp dgp_from_name(std::string_view name);  // throws DataError on unknown names
std::string_view dgp_name(Dgp dgp);

/// Deterministic synthetic dataset with n hourly rows starting 2000-01-01T00.
Dataset simulate(Dgp dgp, std::size_t n, std::uint64_t seed);

}  // namespace circforest
