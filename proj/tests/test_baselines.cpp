#include <doctest.h>

#include <cmath>
#include <numbers>

#include "circforest/baselines.hpp"
#include "circforest/errors.hpp"
#include "circforest/rng.hpp"
#include "test_helpers.hpp"

using namespace circforest;

namespace {

constexpr double kPi = std::numbers::pi;

struct Series {
    std::vector<TimeStamp> times;
    std::vector<Angle> values;
};

// Hourly series over whole years; value chosen per timestamp.
template <typename F>
Series hourly_years(int first_year, int n_years, F&& value) {
    Series s;
    const TimeStamp start(first_year, 1, 1, 0);
    const TimeStamp end(first_year + n_years, 1, 1, 0);
    for (TimeStamp t = start; t < end; t = t.plus_hours(1)) {
        s.times.push_back(t);
        s.values.push_back(Angle(value(t)));
    }
    return s;
}

}  // namespace

TEST_CASE("climatology window membership") {
    // Window values constant theta0, everything else far away. If anything
    // outside the +-15 day / same-hour window leaked in, the fit could not
    // be degenerate at theta0.
    const TimeStamp target(2014, 7, 10, 6);
    auto value = [&](const TimeStamp& t) {
        const bool in_window = t.hour() == 6 &&
                               day_of_year_distance(t.day_of_year(), target.day_of_year()) <= 15;
        return in_window ? 1.25 : 4.5;
    };
    const Series s = hourly_years(2014, 1, value);
    const VonMisesFit fit = climatology_fit(s.times, s.values, target);
    CHECK(fit.degenerate);  // all qualifying values identical
    CHECK(fit.params.mu.radians() == doctest::Approx(1.25).epsilon(1e-12));

    SUBCASE("a value 16 days away is excluded") {
        Series probe = s;
        // move one value at day distance 16, same hour, to the window value;
        // the fit must stay degenerate at theta0 (it is excluded anyway)
        for (std::size_t i = 0; i < probe.times.size(); ++i) {
            if (probe.times[i].hour() == 6 &&
                day_of_year_distance(probe.times[i].day_of_year(), target.day_of_year()) == 16) {
                probe.values[i] = Angle(2.0);
            }
        }
        const VonMisesFit f2 = climatology_fit(probe.times, probe.values, target);
        CHECK(f2.degenerate);
        CHECK(f2.params.mu.radians() == doctest::Approx(1.25).epsilon(1e-12));
    }
    SUBCASE("other hours are excluded") {
        Series probe = s;
        for (std::size_t i = 0; i < probe.times.size(); ++i) {
            if (probe.times[i].hour() == 7) probe.values[i] = Angle(2.5);
        }
        const VonMisesFit f2 = climatology_fit(probe.times, probe.values, target);
        CHECK(f2.params.mu.radians() == doctest::Approx(1.25).epsilon(1e-12));
    }
}

TEST_CASE("climatology wraps the window across year boundaries") {
    const TimeStamp target(2014, 1, 5, 12);  // day 5: window reaches into December
    auto value = [&](const TimeStamp& t) {
        const bool in_window = t.hour() == 12 &&
                               day_of_year_distance(t.day_of_year(), 5) <= 15;
        return in_window ? 0.8 : 3.0;
    };
    const Series s = hourly_years(2014, 1, value);
    const VonMisesFit fit = climatology_fit(s.times, s.values, target);
    CHECK(fit.degenerate);
    CHECK(fit.params.mu.radians() == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("climatology excludes the target's own observation") {
    const TimeStamp target(2014, 6, 1, 3);
    // every window observation is 1.0 except the target itself
    auto value = [&](const TimeStamp& t) { return t == target ? 2.0 : 1.0; };
    const Series s = hourly_years(2014, 1, value);
    const VonMisesFit fit = climatology_fit(s.times, s.values, target);
    CHECK(fit.degenerate);  // would not be degenerate if the target leaked in
    CHECK(fit.params.mu.radians() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("climatology pools all years and needs at least two points") {
    // seasonal signal: the window mean tracks the target's day of year
    const Series s = hourly_years(2014, 5, [](const TimeStamp& t) {
        return kTwoPi * (t.day_of_year() - 1) / 365.0;
    });
    const TimeStamp target(2016, 8, 15, 9);
    const VonMisesFit fit = climatology_fit(s.times, s.values, target);
    const double expect = kTwoPi * (target.day_of_year() - 1) / 365.0;
    CHECK(std::fabs(signed_angle_difference(fit.params.mu.radians(), expect)) < 0.2);
    CHECK(fit.params.kappa > 3.0);  // 31-day window of a slow signal: concentrated

    SUBCASE("too little data") {
        const std::vector<TimeStamp> times = {target.plus_hours(-24)};
        const std::vector<Angle> values = {Angle(1.0)};
        CHECK_THROWS_AS(climatology_fit(times, values, target), EstimationError);
    }
}

TEST_CASE("persistence weights and degenerate history") {
    SUBCASE("constant history pins the location") {
        const std::vector<Angle> history(6, Angle(2.2));
        const VonMisesFit fit = persistence_fit(history);
        CHECK(fit.params.mu.radians() == doctest::Approx(2.2).epsilon(1e-12));
        CHECK(fit.params.kappa == kKappaCap);
        CHECK(fit.degenerate);
    }
    SUBCASE("exactly six values are required") {
        CHECK_THROWS_AS(persistence_fit(std::vector<Angle>(5, Angle(0.1))), EstimationError);
        CHECK_THROWS_AS(persistence_fit(std::vector<Angle>(7, Angle(0.1))), EstimationError);
    }
    SUBCASE("drifting history is pulled toward the recent values") {
        // oldest -> newest: 0.0 .. 0.5; weighted circular mean 0.40993
        const std::vector<Angle> history = {Angle(0.0), Angle(0.1), Angle(0.2),
                                            Angle(0.3), Angle(0.4), Angle(0.5)};
        const VonMisesFit fit = persistence_fit(history);
        CHECK(fit.params.mu.radians() == doctest::Approx(0.4099252442262788).epsilon(1e-6));
        CHECK(fit.params.mu.radians() > 0.33);
        CHECK(fit.params.mu.radians() < 0.5);
    }
    SUBCASE("most recent value carries half the total weight") {
        // two-point contrast: recent at pi/2, all older at 0; the fitted
        // direction must bisect when the recent weight equals the rest
        const std::vector<Angle> history = {Angle(0.0), Angle(0.0), Angle(0.0),
                                            Angle(0.0), Angle(0.0), Angle(kPi / 2)};
        const VonMisesFit fit = persistence_fit(history);
        // weights: recent 0.5/0.984375 = 0.50794, rest total 0.49206
        const double expect = std::atan2(0.5079365079365079, 0.4920634920634921);
        CHECK(fit.params.mu.radians() == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("persistence stays inside the arc spanned by its history") {
    std::mt19937_64 rng(404);
    for (int rep = 0; rep < 50; ++rep) {
        const double center = kTwoPi * uniform01(rng);
        double lo = 0.0, hi = 0.0;
        std::vector<Angle> history;
        for (int k = 0; k < 6; ++k) {
            const double offset = (uniform01(rng) - 0.5) * 2.0;  // span < pi
            lo = std::min(lo, offset);
            hi = std::max(hi, offset);
            history.emplace_back(center + offset);
        }
        const VonMisesFit fit = persistence_fit(history);
        const double rel = signed_angle_difference(fit.params.mu.radians(), center);
        CHECK(rel >= lo - 1e-9);
        CHECK(rel <= hi + 1e-9);
    }
}

TEST_CASE("baselines are rotation equivariant") {
    const Series s = hourly_years(2014, 2, [](const TimeStamp& t) {
        return 0.7 + 0.3 * std::sin(kTwoPi * t.day_of_year() / 365.0);
    });
    const TimeStamp target(2015, 5, 20, 14);
    const VonMisesFit base = climatology_fit(s.times, s.values, target);

    const double delta = 1.1;
    Series rotated = s;
    for (Angle& a : rotated.values) a = Angle(a.radians() + delta);
    const VonMisesFit rot = climatology_fit(rotated.times, rotated.values, target);
    CHECK(std::fabs(signed_angle_difference(rot.params.mu.radians(),
                                            base.params.mu.radians() + delta)) <= 1e-10);
    CHECK(rot.params.kappa == doctest::Approx(base.params.kappa).epsilon(1e-10));
}

TEST_CASE("persistence_fit_at walks the series and detects gaps") {
    Series s = hourly_years(2014, 1, [](const TimeStamp& t) {
        return 0.001 * static_cast<double>(t.hours_since_epoch() % 1000);
    });
    const TimeStamp target(2014, 3, 10, 12);
    const VonMisesFit fit = persistence_fit_at(s.times, s.values, target, 1);

    // equivalent direct call: values at target-1h .. target-6h, oldest first
    std::vector<Angle> history;
    for (int k = 6; k >= 1; --k) {
        const TimeStamp want = target.plus_hours(-k);
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            if (s.times[i] == want) history.push_back(s.values[i]);
        }
    }
    const VonMisesFit direct = persistence_fit(history);
    CHECK(fit.params.mu.radians() == direct.params.mu.radians());
    CHECK(fit.params.kappa == direct.params.kappa);

    SUBCASE("gap in the lag history") {
        Series gappy;
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            if (s.times[i] == target.plus_hours(-3)) continue;
            gappy.times.push_back(s.times[i]);
            gappy.values.push_back(s.values[i]);
        }
        CHECK_THROWS_AS(persistence_fit_at(gappy.times, gappy.values, target, 1),
                        EstimationError);
    }
    SUBCASE("longer leads shift the history window") {
        const VonMisesFit lead3 = persistence_fit_at(s.times, s.values, target, 3);
        std::vector<Angle> h3;
        for (int k = 8; k >= 3; --k) {
            const TimeStamp want = target.plus_hours(-k);
            for (std::size_t i = 0; i < s.times.size(); ++i) {
                if (s.times[i] == want) h3.push_back(s.values[i]);
            }
        }
        CHECK(lead3.params.mu.radians() == persistence_fit(h3).params.mu.radians());
    }
}
