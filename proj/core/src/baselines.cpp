#include "circforest/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "circforest/errors.hpp"

namespace circforest {

VonMisesFit climatology_fit(std::span<const TimeStamp> times, std::span<const Angle> values,
                            const TimeStamp& target) {
    if (times.size() != values.size()) {
        throw std::invalid_argument("climatology_fit: time/value length mismatch");
    }
    const int target_doy = target.day_of_year();
    const int target_hour = target.hour();

    std::vector<Angle> window;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == target) continue;  // leave the target itself out
        if (times[i].hour() != target_hour) continue;
        if (day_of_year_distance(times[i].day_of_year(), target_doy) > kClimatologyHalfWindowDays) {
            continue;
        }
        if (std::isnan(values[i].radians())) continue;
        window.push_back(values[i]);
    }
    if (window.size() < 2) {
        throw EstimationError("climatology_fit: fewer than 2 observations in the window around " +
                              target.to_string());
    }
    return fit_mle(window);
}

VonMisesFit persistence_fit(std::span<const Angle> history) {
    if (history.size() != kPersistenceLags) {
        throw EstimationError("persistence_fit: expected exactly " +
                              std::to_string(kPersistenceLags) + " lagged values, got " +
                              std::to_string(history.size()));
    }
    double weights[kPersistenceLags];
    double total = 0.0;
    for (int k = 0; k < kPersistenceLags; ++k) {
        // history is oldest-first; the most recent value carries 0.5.
        weights[k] = std::pow(kPersistenceSmoothing, kPersistenceLags - k);
        total += weights[k];
    }
    for (double& w : weights) w /= total;

    for (const Angle& a : history) {
        if (std::isnan(a.radians())) {
            throw EstimationError("persistence_fit: missing value in the lag history");
        }
    }
    return fit_mle(history, weights);
}

VonMisesFit persistence_fit_at(std::span<const TimeStamp> times, std::span<const Angle> values,
                               const TimeStamp& target, int lead_hours) {
    if (times.size() != values.size()) {
        throw std::invalid_argument("persistence_fit_at: time/value length mismatch");
    }
    if (lead_hours < 1) throw std::invalid_argument("persistence_fit_at: lead_hours must be >= 1");

    Angle history[kPersistenceLags];
    for (int k = 0; k < kPersistenceLags; ++k) {
        const TimeStamp want = target.plus_hours(-(lead_hours + k));
        const auto it = std::lower_bound(times.begin(), times.end(), want);
        if (it == times.end() || !(*it == want)) {
            throw EstimationError("persistence_fit_at: gap at " + want.to_string() +
                                  " in the lag history of " + target.to_string());
        }
        const std::size_t idx = static_cast<std::size_t>(it - times.begin());
        history[kPersistenceLags - 1 - k] = values[idx];  // oldest first
    }
    return persistence_fit(history);
}

}  // namespace circforest
