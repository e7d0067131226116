#pragma once

#include <span>

#include "circforest/timestamp.hpp"
#include "circforest/von_mises.hpp"

namespace circforest {

inline constexpr int kClimatologyHalfWindowDays = 15;  // 31-day window
inline constexpr double kPersistenceSmoothing = 0.5;
inline constexpr int kPersistenceLags = 6;  // smaller smoothed weights fall below 0.01

/// Seasonal-hourly climatology: fits all training observations with the
/// target's hour whose day of year lies within +-15 days (wrapping over
/// year ends), across all years, excluding the target's own timestamp.
/// Throws EstimationError with fewer than two qualifying observations.
VonMisesFit climatology_fit(std::span<const TimeStamp> times, std::span<const Angle> values,
                            const TimeStamp& target);

/// Exponentially smoothed persistence over exactly six consecutive hourly
/// values, oldest first: weights 0.5, 0.25, ... from the most recent value
/// backwards, renormalized to sum 1.
VonMisesFit persistence_fit(std::span<const Angle> history);

/// Convenience over a time-indexed series: collects the six hourly values at
/// target - lead_hours - k, k = 0..5, and fits. A gap in that history
/// raises EstimationError.
VonMisesFit persistence_fit_at(std::span<const TimeStamp> times, std::span<const Angle> values,
                               const TimeStamp& target, int lead_hours = 1);

}  // namespace circforest
