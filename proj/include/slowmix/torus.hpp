#pragma once

#include <array>
#include <cmath>

namespace slowmix {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// Wrap into [0, 2pi).
inline double wrap2pi(double x) {
    x = std::fmod(x, two_pi);
    if (x < 0) x += two_pi;
    return x;
}

// Distance on T^1 = [0, 2pi) with endpoints identified; result in [0, pi].
inline double t1_dist(double a, double b) {
    double d = std::fabs(wrap2pi(a) - wrap2pi(b));
    return d > two_pi / 2 ? two_pi - d : d;
}

using Point = std::array<double, 2>;

} // namespace slowmix
