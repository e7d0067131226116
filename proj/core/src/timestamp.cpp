#include "circforest/timestamp.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "circforest/errors.hpp"

namespace circforest {

namespace {

using days_t = std::chrono::sys_days;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

std::chrono::year_month_day to_ymd(std::int64_t hours) {
    const auto d = days_t(std::chrono::days(floor_div(hours, 24)));
    return std::chrono::year_month_day(d);
}

constexpr int kCumulativeDays[12] = {0,   31,  59,  90,  120, 151,
                                     181, 212, 243, 273, 304, 334};

}  // namespace

TimeStamp::TimeStamp(int year, int month, int day, int hour) {
    const std::chrono::year_month_day ymd{std::chrono::year(year),
                                          std::chrono::month(static_cast<unsigned>(month)),
                                          std::chrono::day(static_cast<unsigned>(day))};
    if (!ymd.ok() || hour < 0 || hour > 23) {
        throw DataError("invalid timestamp components " + std::to_string(year) + "-" +
                        std::to_string(month) + "-" + std::to_string(day) + "T" +
                        std::to_string(hour));
    }
    hours_ = static_cast<std::int64_t>(days_t(ymd).time_since_epoch().count()) * 24 + hour;
}

TimeStamp TimeStamp::from_hours_since_epoch(std::int64_t h) {
    TimeStamp t;
    t.hours_ = h;
    return t;
}

TimeStamp TimeStamp::parse(std::string_view text) {
    std::string s(text);
    // strip trailing Z and surrounding spaces
    while (!s.empty() && (s.back() == ' ' || s.back() == 'Z')) s.pop_back();
    std::size_t start = s.find_first_not_of(' ');
    if (start == std::string::npos) throw DataError("empty timestamp");
    s.erase(0, start);

    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 'T';
    int consumed = 0;
    int fields = std::sscanf(s.c_str(), "%d-%d-%d%n", &y, &mo, &d, &consumed);
    if (fields != 3) throw DataError("unparseable timestamp '" + std::string(text) + "'");
    if (consumed < static_cast<int>(s.size())) {
        sep = s[consumed];
        if (sep != 'T' && sep != ' ') {
            throw DataError("unparseable timestamp '" + std::string(text) + "'");
        }
        const char* rest = s.c_str() + consumed + 1;
        int tail = 0;
        const int got = std::sscanf(rest, "%d:%d:%d%n", &h, &mi, &sec, &tail);
        if (got < 2) throw DataError("unparseable timestamp '" + std::string(text) + "'");
        if (got == 2) {
            (void)std::sscanf(rest, "%d:%d%n", &h, &mi, &tail);
        }
        if (rest[tail] != '\0') {
            throw DataError("trailing characters in timestamp '" + std::string(text) + "'");
        }
        if (mi != 0 || sec != 0) {
            throw DataError("sub-hourly timestamp '" + std::string(text) +
                            "' (hourly resolution required)");
        }
    }
    return TimeStamp(y, mo, d, h);
}

std::string TimeStamp::to_string() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00", year(), month(), day(), hour());
    return buf;
}

int TimeStamp::year() const { return static_cast<int>(to_ymd(hours_).year()); }
int TimeStamp::month() const { return static_cast<int>(static_cast<unsigned>(to_ymd(hours_).month())); }
int TimeStamp::day() const { return static_cast<int>(static_cast<unsigned>(to_ymd(hours_).day())); }

int TimeStamp::hour() const {
    return static_cast<int>(hours_ - floor_div(hours_, 24) * 24);
}

int TimeStamp::day_of_year() const {
    const auto ymd = to_ymd(hours_);
    const int m = static_cast<int>(static_cast<unsigned>(ymd.month()));
    const int d = static_cast<int>(static_cast<unsigned>(ymd.day()));
    if (m == 2 && d == 29) return 59;  // fold leap day onto Feb 28
    return kCumulativeDays[m - 1] + d;
}

int day_of_year_distance(int a, int b) {
    const int diff = std::abs(a - b);
    return std::min(diff, 365 - diff);
}

}  // namespace circforest
