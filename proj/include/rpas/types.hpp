#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace rpas {

inline constexpr std::size_t kStateSize = 13;
using StateVector = std::array<double, kStateSize>;

/// The 13 simulation states. Body-axis velocities are canonical; airspeed,
/// angle of attack and sideslip are derived.
struct AircraftState {
    double u = 0.0, v = 0.0, w = 0.0;          // body velocities, ft/s
    double phi = 0.0, theta = 0.0, psi = 0.0;  // Euler angles, rad
    double p = 0.0, q = 0.0, r = 0.0;          // body rates, rad/s
    double x_e = 0.0, y_e = 0.0, z_e = 0.0;    // NED position, ft (z down)
    double pow = 0.0;                          // engine power state, percent

    double vt() const { return std::sqrt(u * u + v * v + w * w); }
    double alpha() const { return std::atan2(w, u); }
    double beta() const { return std::asin(v / vt()); }
    double altitude() const { return -z_e; }

    StateVector to_array() const { return {u, v, w, phi, theta, psi, p, q, r, x_e, y_e, z_e, pow}; }

    static AircraftState from_array(const StateVector& x) {
        return {x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9], x[10], x[11], x[12]};
    }

    /// Builds body velocities from wind-axis airspeed, angle of attack and sideslip.
    static AircraftState from_wind_axes(double vt, double alpha, double beta) {
        AircraftState s;
        s.u = vt * std::cos(alpha) * std::cos(beta);
        s.v = vt * std::sin(beta);
        s.w = vt * std::sin(alpha) * std::cos(beta);
        return s;
    }

    bool finite() const {
        for (double x : to_array()) {
            if (!std::isfinite(x)) {
                return false;
            }
        }
        return true;
    }
};

/// Surface and throttle commands. Throttle is a fraction in [0, 1], surfaces in rad.
struct CommandVector {
    double throttle = 0.0;
    double elevator = 0.0;
    double aileron = 0.0;
    double rudder = 0.0;

    friend bool operator==(const CommandVector&, const CommandVector&) = default;
};

/// Reference vector produced by the autopilot for the inner loops.
struct ReferenceVector {
    double nz = 0.0;        // normal load factor increment over trim, g
    double ps = 0.0;        // stability-axis roll rate, rad/s
    double nyr = 0.0;       // side acceleration (g) plus yaw rate (rad/s)
    double throttle = 0.0;  // fraction in [0, 1]

    friend bool operator==(const ReferenceVector&, const ReferenceVector&) = default;
};

}  // namespace rpas
