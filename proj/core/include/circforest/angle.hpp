#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace circforest {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// A direction on the unit circle, stored in radians within [0, 2*pi).
class Angle {
public:
    constexpr Angle() = default;
    explicit Angle(double radians) : value_(wrap(radians)) {}

    static Angle from_degrees(double degrees) {
        return Angle(degrees * std::numbers::pi / 180.0);
    }

    double radians() const { return value_; }
    double degrees() const { return value_ * (180.0 / std::numbers::pi); }

    /// Wraps any finite value into [0, 2*pi).
    static double wrap(double radians) {
        double r = std::fmod(radians, kTwoPi);
        if (r < 0.0) r += kTwoPi;
        // fmod result plus 2*pi can round up to exactly 2*pi
        if (r >= kTwoPi) r = 0.0;
        return r;
    }

    friend bool operator==(Angle a, Angle b) { return a.value_ == b.value_; }

private:
    double value_ = 0.0;
};

/// Smallest arc length between two directions; symmetric, in [0, pi].
inline double angular_distance(Angle a, Angle b) {
    double d = std::fabs(a.radians() - b.radians());
    return std::min(d, kTwoPi - d);
}

/// Signed shortest rotation taking b to a, in (-pi, pi].
inline double signed_angle_difference(double a, double b) {
    double d = std::fmod(a - b, kTwoPi);
    if (d <= -std::numbers::pi) d += kTwoPi;
    if (d > std::numbers::pi) d -= kTwoPi;
    return d;
}

}  // namespace circforest
