#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

namespace atg {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_pi(double a) {
    double r = std::remainder(a, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

/// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r -= kTwoPi;
    return r;
}

/// Absolute angular separation, in [0, pi].
inline double circular_abs_diff(double a, double b) {
    return std::abs(wrap_pi(a - b));
}

/// Mean direction: atan2 of the averaged unit vectors. Result in (-pi, pi].
inline double circular_mean(std::span<const double> angles) {
    if (angles.empty()) {
        throw std::invalid_argument("circular_mean: empty sample set");
    }
    double s = 0.0;
    double c = 0.0;
    for (double a : angles) {
        s += std::sin(a);
        c += std::cos(a);
    }
    double m = std::atan2(s, c);
    return m <= -kPi ? m + kTwoPi : m;
}

}  // namespace atg
