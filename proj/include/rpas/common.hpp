#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rpas {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

/// Malformed or physically inconsistent configuration (data files, scenarios, gains).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to converge or produced non-finite output.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) {
        w += 2.0 * kPi;
    }
    return w;
}

inline double clamp(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

}  // namespace rpas
