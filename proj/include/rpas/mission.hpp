#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rpas/aircraft.hpp"
#include "rpas/channel.hpp"
#include "rpas/control.hpp"
#include "rpas/dynamics.hpp"

namespace rpas {

struct Airspace {
    double north_min = 0.0, north_max = 20000.0;
    double east_min = -12000.0, east_max = 4000.0;
    double alt_min = 3800.0, alt_max = 4600.0;
};

struct ScenarioConfig {
    std::string name;
    std::vector<control::Waypoint> waypoints;
    std::optional<double> r_threshold;  // overrides the controller file when set
    double vt0 = 540.0;                 // trim airspeed, ft/s
    double h0 = 4000.0;                 // trim altitude, ft
    double north0 = 0.0, east0 = 0.0;   // start position, ft
    double psi0 = 0.0;                  // start heading, rad
    double dt = 1e-3;
    double time_limit = 200.0;
    Airspace airspace;

    void validate() const;
};

ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& json_text);

/// Everything a run needs that does not depend on the run: parameters, trim,
/// synthesized gains. Immutable after construction and shared across threads.
struct MissionSetup {
    AircraftParams params;
    control::ControllerConfig controller;
    ScenarioConfig scenario;
    TrimPoint trim;
    control::GainSet gains;
    control::OperatingPoint op;
    AircraftState initial;  // trim state placed at the scenario start
    double r_threshold = 250.0;
};

MissionSetup make_setup(const ScenarioConfig& scenario, const AircraftParams& params,
                        const control::ControllerConfig& controller);

struct RunConfig {
    double pa = 1.0;
    double epsilon = 0.0;  // one-way latency, s
    std::uint64_t seed = 0;
    channel::LossPolicy policy;

    bool bypass_channel = false;             // no mask, no delay line at all
    std::optional<double> force_loss_after;  // link forced off from this time on, s

    void validate() const;
};

struct RunRecord {
    std::uint64_t run_id = 0;
    double pa = 1.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    bool success = false;
    std::optional<double> completion_time;   // s, iff success
    std::optional<FailureMode> failure_mode;  // iff !success
    std::size_t waypoints_reached = 0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct TrajectoryRow {
    double time = 0.0;
    AircraftState state;
    CommandVector command;    // applied to the airframe
    ReferenceVector reference;  // reference in effect for the applied command
    std::uint8_t link_state = 1;
    std::size_t waypoint_index = 0;
};

struct RunOutput {
    RunRecord record;
    std::vector<TrajectoryRow> trajectory;
};

/// One closed-loop mission. Never throws once the loop has started: every
/// abnormal state is returned as a failure mode.
RunOutput run_mission(const MissionSetup& setup, const RunConfig& run, bool capture_trajectory = false);

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
void export_trajectory(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace rpas
