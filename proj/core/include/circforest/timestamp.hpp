#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace circforest {

/// Calendar timestamp at hourly resolution (no time zone handling; inputs
/// are taken as naive local/UTC time).
class TimeStamp {
public:
    TimeStamp() = default;
    TimeStamp(int year, int month, int day, int hour);

    /// Accepts ISO-8601 dates and date-times ("2014-03-01", "2014-03-01T05:00",
    /// "2014-03-01 05:00:00", optional trailing 'Z'). Sub-hourly parts must be
    /// zero. Throws DataError otherwise.
    static TimeStamp parse(std::string_view text);

    std::string to_string() const;  // "YYYY-MM-DDTHH:00"

    int year() const;
    int month() const;
    int day() const;
    int hour() const;

    /// Day of year on a fixed 365-day calendar: Feb 29 shares day 59 with
    /// Feb 28, so seasonal windows line up across leap years.
    int day_of_year() const;

    std::int64_t hours_since_epoch() const { return hours_; }
    static TimeStamp from_hours_since_epoch(std::int64_t h);
    TimeStamp plus_hours(std::int64_t h) const { return from_hours_since_epoch(hours_ + h); }

    auto operator<=>(const TimeStamp&) const = default;

private:
    std::int64_t hours_ = 0;  // since 1970-01-01T00
};

/// Wrapped distance between two day_of_year values on the 365-day circle.
int day_of_year_distance(int a, int b);

}  // namespace circforest
