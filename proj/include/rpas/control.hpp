#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rpas/aircraft.hpp"
#include "rpas/dynamics.hpp"
#include "rpas/types.hpp"

namespace rpas::control {

/// PD waypoint-autopilot gains and limits.
struct AutopilotGains {
    double k_psi_p = 5.0;
    double k_psi_d = 0.5;
    double k_phi_p = 0.75;
    double k_phi_d = 0.5;
    double k_z_p = 0.005;
    double k_z_d = 0.02;
    double k_vt = 0.25;
    double phi_max = 65.0 * kDegToRad;
    double r_threshold = 250.0;  // capture radius, ft
    double nz_min = -2.0;        // Nz command increment limits, g
    double nz_max = 6.0;
    bool turn_compensation = false;  // add 1/cos(phi) - 1 to the Nz command

    void validate() const;
};

/// LQR weights for the two decoupled inner loops.
struct GainSynthesisConfig {
    Eigen::MatrixXd q_long;  // 3x3 over [alpha, q, int e_Nz]
    Eigen::MatrixXd r_long;  // 1x1 over [de]
    Eigen::MatrixXd q_lat;   // 5x5 over [beta, p, r, int e_ps, int e_Nyr]
    Eigen::MatrixXd r_lat;   // 2x2 over [da, dr]

    void validate() const;
};

/// Integrator clamps; anti-windup also freezes on actuator saturation.
struct IntegratorLimits {
    double nz = 10.0;
    double ps = 5.0;
    double nyr = 5.0;
};

struct ControllerConfig {
    AutopilotGains autopilot;
    GainSynthesisConfig weights;
    IntegratorLimits integrator_limits;
    std::optional<Eigen::MatrixXd> k_long;  // precomputed gains, checked on load
    std::optional<Eigen::MatrixXd> k_lat;
};

ControllerConfig default_controller_config();
ControllerConfig load_controller_config(const std::filesystem::path& path);
ControllerConfig parse_controller_config(const std::string& json_text);

/// Linear subsystem x' = A x + B u, y = C x + D u, augmented with output integrators.
struct LinearModel {
    Eigen::MatrixXd A, B, C, D;

    /// [[A, 0], [-C, 0]], [[B], [-D]]: integrator states integrate (ref - y).
    LinearModel augmented() const;
};

struct Linearization {
    LinearModel longitudinal;  // x = [alpha, q], u = [de], y = [Nz]
    LinearModel lateral;       // x = [beta, p, r], u = [da, dr], y = [ps, Nyr]
};

/// Central-difference Jacobians about a trim point, in wind-axis variables.
/// rel_step is the perturbation relative to max(1, |x|).
Linearization linearize(const TrimPoint& trim, const AircraftParams& params, double rel_step = 1e-6);

struct GainSet {
    Eigen::Matrix<double, 1, 3> k_long;  // [alpha - alpha0, q, int e_Nz] -> de
    Eigen::Matrix<double, 2, 5> k_lat;   // [beta, p, r, int e_ps, int e_Nyr] -> [da, dr]
    double long_abscissa = 0.0;          // max Re eig of the closed loops
    double lat_abscissa = 0.0;
};

/// K = R^-1 B' P on an already augmented model.
Eigen::MatrixXd synthesize(const LinearModel& augmented, const Eigen::MatrixXd& q,
                           const Eigen::MatrixXd& r);

/// Both inner-loop gains for a trim point. Throws ConfigError if either loop
/// fails the Hurwitz check (including precomputed gains).
GainSet synthesize_gains(const Linearization& lin, const ControllerConfig& cfg);

// ---------------------------------------------------------------------------
// Guidance and autopilot

struct Waypoint {
    double north = 0.0, east = 0.0, down = 0.0;  // NED, ft
};

struct Guidance {
    double psi_cmd = 0.0;
    double slant_range = 0.0;
    double dx = 0.0, dy = 0.0, dz = 0.0;
};

/// Heading and slant range to a waypoint. A coincident point keeps previous_psi.
Guidance waypoint_guidance(const AircraftState& s, const Waypoint& wp, double previous_psi);

/// The four PD laws. throttle_trim is the feed-forward term of the speed loop.
ReferenceVector autopilot_references(const AircraftState& s, double psi_cmd, double h_cmd,
                                     double vt_cmd, double throttle_trim,
                                     const AutopilotGains& gains);

/// Sequential waypoint switching on strict slant-range capture.
class WaypointManager {
public:
    WaypointManager(std::vector<Waypoint> waypoints, double r_threshold);

    bool done() const { return index_ >= waypoints_.size(); }
    std::size_t index() const { return index_; }
    std::size_t reached() const { return index_; }
    const Waypoint& active() const;

    /// Advances at most one waypoint if the active one is inside the capture radius.
    /// Returns true on a capture.
    bool update(const AircraftState& s);

    /// Heading command: toward the active waypoint, or the frozen heading once done.
    double psi_command(const AircraftState& s);
    double h_command() const;

private:
    std::vector<Waypoint> waypoints_;
    double r_threshold_;
    std::size_t index_ = 0;
    double psi_hold_ = 0.0;
    double h_hold_ = 0.0;
};

// ---------------------------------------------------------------------------
// Inner loops

struct Integrators {
    double nz = 0.0;
    double ps = 0.0;
    double nyr = 0.0;
};

/// Trim-point data the inner loops regulate about.
struct OperatingPoint {
    double alpha = 0.0;
    double nz = 1.0;  // measured Nz at trim; references are increments over it
    CommandVector command;
};

OperatingPoint operating_point(const TrimPoint& trim);

/// Saturates every channel to the actuator limits.
CommandVector saturate(const CommandVector& c, const ActuatorLimits& lim);

/// One inner-loop evaluation. Advances the integrators by dt (frozen while the
/// matching actuator saturates, then clamped) and returns the saturated command.
CommandVector llc_command(const AircraftState& s, const Measurements& m, const ReferenceVector& ref,
                          const GainSet& gains, const OperatingPoint& op, Integrators& integ,
                          double dt, const AircraftParams& params, const IntegratorLimits& limits);

}  // namespace rpas::control
