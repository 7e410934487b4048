#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "rpas/common.hpp"

namespace rpas {

/// Engine thrust tables, indexed [mach][altitude] on fixed 0.2 Mach / 10,000 ft grids.
struct EngineData {
    using Table = std::array<std::array<double, 6>, 6>;
    double thrust_lag_s = 1.0;  // kappa in d(pow)/dt = (pow_cmd - pow) / kappa
    double gear_knee = 0.77;
    double gear_low_slope = 64.94;
    double gear_high_slope = 217.38;
    double gear_high_offset = -117.38;
    Table idle{};
    Table military{};
    Table maximum{};
};

/// Coefficient arrays of the global polynomial aerodynamic model. The term
/// structure of each polynomial is fixed in dynamics.cpp; only the constants
/// come from data.
struct AeroData {
    std::array<double, 7> cx0{};
    std::array<double, 5> cxq{};
    std::array<double, 3> cy0{};
    std::array<double, 4> cyp{};
    std::array<double, 4> cyr{};
    std::array<double, 6> cz0{};
    std::array<double, 5> czq{};
    std::array<double, 8> cl0{};
    std::array<double, 4> clp{};
    std::array<double, 5> clr{};
    std::array<double, 7> clda{};
    std::array<double, 7> cldr{};
    std::array<double, 8> cm0{};
    std::array<double, 6> cmq{};
    std::array<double, 7> cn0{};
    std::array<double, 5> cnp{};
    std::array<double, 3> cnr{};
    std::array<double, 10> cnda{};
    std::array<double, 6> cndr{};
};

struct Envelope {
    double alpha_min = -10.0 * kDegToRad;
    double alpha_max = 45.0 * kDegToRad;
    double beta_max = 30.0 * kDegToRad;
    double theta_margin = 0.01;  // rad kept clear of +-pi/2
};

struct ActuatorLimits {
    double throttle_min = 0.0;
    double throttle_max = 1.0;
    double elevator_max = 25.0 * kDegToRad;
    double aileron_max = 21.5 * kDegToRad;
    double rudder_max = 30.0 * kDegToRad;
};

/// Dimensionless and inverse-inertia ratios of the rotational equations.
struct InertiaCoefficients {
    double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0, c7 = 0, c8 = 0, c9 = 0;
    double gamma = 0;  // Ixx*Izz - Ixz^2
};

struct AircraftParams {
    std::string name;
    std::string version;
    std::uint64_t data_hash = 0;  // FNV-1a of the source file bytes

    double mass = 0.0;  // slug
    double g = 32.17;   // ft/s^2
    double wing_area = 0.0;
    double span = 0.0;
    double chord = 0.0;
    double xcg = 0.35;
    double xcg_ref = 0.35;
    double accel_x = 0.0;  // accelerometer station ahead of the c.g., ft

    double ixx = 0.0, iyy = 0.0, izz = 0.0, ixz = 0.0;
    InertiaCoefficients inertia;  // derived from the tensor on load

    EngineData engine;
    AeroData aero;
    Envelope envelope;
    ActuatorLimits actuators;

    /// Checks positivity and definiteness; recomputes the inertia coefficients.
    void finalize();
};

/// C1..C9 from the inertia tensor. Throws ConfigError when Gamma <= 0.
InertiaCoefficients inertia_coefficients(double ixx, double iyy, double izz, double ixz);
InertiaCoefficients inertia_coefficients(const AircraftParams& params);

AircraftParams load_aircraft_params(const std::filesystem::path& path);
AircraftParams parse_aircraft_params(const std::string& json_text);

/// 64-bit FNV-1a, used to fingerprint data files.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace rpas
