#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rpas/aircraft.hpp"
#include "rpas/types.hpp"

namespace rpas {

/// Mid-run anomalies. Every one of them ends a mission run as a recorded failure.
enum class FailureMode { Timeout, GroundImpact, AttitudeSingularity, EnvelopeExit, NumericDivergence };

std::string_view to_string(FailureMode mode);
FailureMode parse_failure_mode(std::string_view s);

class SimulationFault : public std::runtime_error {
public:
    SimulationFault(FailureMode mode, const std::string& what)
        : std::runtime_error(what), mode_(mode) {}
    FailureMode mode() const { return mode_; }

private:
    FailureMode mode_;
};

struct Atmosphere {
    double density = 0.0;        // slug/ft^3
    double temperature = 0.0;    // deg R
    double speed_of_sound = 0.0; // ft/s
};

/// 1976 standard atmosphere in English units (troposphere + isothermal layer to 65,617 ft).
Atmosphere standard_atmosphere(double altitude_ft);

/// Commanded engine power (percent) for a throttle fraction.
double throttle_gear(double throttle, const EngineData& engine);

/// Installed thrust (lbf) at a power state, altitude and Mach number.
double engine_thrust(double power, double altitude_ft, double mach, const EngineData& engine);

/// Six total coefficients of the polynomial aerodynamic model.
struct AeroCoefficients {
    double cx = 0, cy = 0, cz = 0;  // body-axis force
    double cl = 0, cm = 0, cn = 0;  // roll, pitch, yaw moment
};

/// Angles and surfaces in rad, rates in rad/s. Rates are normalised by
/// span/(2 Vt) or chord/(2 Vt) inside. Valid only within the envelope.
AeroCoefficients aero_coefficients(double alpha, double beta, double p, double q, double r,
                                   double de, double da, double dr, double vt,
                                   const AircraftParams& params);

/// The parts of the aerodynamic model that depend only on alpha and beta.
/// Surface and rate terms are combined in aero_coefficients().
struct AeroBasis {
    double cx_a = 0, cx_de = 0, cx_de2 = 0, cxq = 0;
    double cy_b = 0, cyp = 0, cyr = 0;
    double cz_a = 0, czq = 0;
    double cl0 = 0, clp = 0, clr = 0, clda = 0, cldr = 0;
    double cm_a = 0, cm_de = 0, cm_de2 = 0, cmq = 0;
    double cn0 = 0, cnp = 0, cnr = 0, cnda = 0, cndr = 0;
};

AeroBasis aero_basis(double alpha, double beta, const AircraftParams& params);

AeroCoefficients aero_coefficients(const AeroBasis& basis, double p, double q, double r, double de,
                                   double da, double dr, double vt, const AircraftParams& params);

bool inside_envelope(double alpha, double beta, const AircraftParams& params);

/// Everything in the equations of motion that depends on the state but not on
/// the controls. A measurement and the first RK4 stage at the same state share one.
struct FlightCondition {
    double vt = 0, alpha = 0, beta = 0;
    double qbar = 0, mach = 0, thrust = 0;
    double sph = 0, cph = 0, sth = 0, cth = 0, sps = 0, cps = 0;
    AeroBasis aero;
};

FlightCondition flight_condition(const AircraftState& s, const AircraftParams& params);

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

struct ForcesMoments {
    Vec3 aero;       // q S [CX, CY, CZ], lbf
    double thrust;   // along body x, lbf
    Vec3 gravity;    // m g [-sin th, cos th sin ph, cos th cos ph], lbf
    Vec3 total;      // aero + gravity + thrust
    Vec3 moment;     // q S [b Cl, c Cm, b Cn], ft lbf
    double qbar;     // dynamic pressure, lbf/ft^2
    double mach;
};

ForcesMoments forces_moments(const AircraftState& s, const CommandVector& c,
                             const AircraftParams& params);

/// Body-to-earth rotation R = Rz(psi) Ry(theta) Rx(phi); row-major.
std::array<double, 9> body_to_earth(double phi, double theta, double psi);

/// Time derivatives of all 13 states. Throws SimulationFault(AttitudeSingularity)
/// when |theta| comes within the configured margin of pi/2.
StateVector state_derivative(const AircraftState& s, const CommandVector& c,
                             const AircraftParams& params);
StateVector state_derivative(const AircraftState& s, const FlightCondition& fc, const CommandVector& c,
                             const AircraftParams& params);

/// Classical RK4 with zero-order-hold controls. Throws
/// SimulationFault(NumericDivergence) on any non-finite stage.
AircraftState rk4_step(const AircraftState& s, const CommandVector& c, double dt,
                       const AircraftParams& params);
/// Same step, reusing a flight condition already evaluated at s.
AircraftState rk4_step(const AircraftState& s, const FlightCondition& fc, const CommandVector& c,
                       double dt, const AircraftParams& params);

/// Accelerometer-derived outputs used by the inner loops.
struct Measurements {
    double nz = 0.0;   // normal load factor, g (1 in level unaccelerated flight)
    double ny = 0.0;   // lateral load factor, g
    double ps = 0.0;   // stability-axis roll rate, rad/s
    double nyr = 0.0;  // ny + r
};

/// Outputs at the accelerometer station for the given state and applied command.
Measurements measure(const AircraftState& s, const CommandVector& c, const AircraftParams& params);
Measurements measure(const AircraftState& s, const FlightCondition& fc, const CommandVector& c,
                     const AircraftParams& params);

class TrimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrimPoint {
    AircraftState state;
    CommandVector command;
    double residual = 0.0;  // max |derivative| over the dynamic states
    Measurements outputs;
};

/// Starting point for the trim iteration.
struct TrimGuess {
    double alpha = 0.04;  // rad
    double elevator = -0.02;
    double throttle = 0.15;
};

/// Wings-level, constant-altitude trim at (vt, altitude). Solves alpha,
/// elevator and throttle; heading and position are zero. Throws TrimError
/// when Newton fails to bring the residual below 1e-10.
TrimPoint trim(double vt, double altitude_ft, const AircraftParams& params,
               const TrimGuess& guess = {});

/// Largest |derivative| over u, v, w, phi, theta, psi, p, q, r and pow.
double dynamic_residual(const StateVector& xdot);

}  // namespace rpas
