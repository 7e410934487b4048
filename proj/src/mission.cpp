#include "rpas/mission.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace rpas {

using nlohmann::json;

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void ScenarioConfig::validate() const {
    if (waypoints.empty()) {
        throw ConfigError("scenario '" + name + "': at least one waypoint is required");
    }
    if (!(dt > 0.0) || !(time_limit > 0.0) || !(vt0 > 0.0)) {
        throw ConfigError("scenario '" + name + "': dt, time_limit and vt must be positive");
    }
    if (r_threshold && !(*r_threshold > 0.0)) {
        throw ConfigError("scenario '" + name + "': r_threshold must be positive");
    }
    const Airspace& a = airspace;
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        const auto& w = waypoints[i];
        const double h = -w.down;
        if (w.north < a.north_min || w.north > a.north_max || w.east < a.east_min ||
            w.east > a.east_max || h < a.alt_min || h > a.alt_max) {
            throw ConfigError("scenario '" + name + "': waypoint " + std::to_string(i) +
                              " lies outside the airspace bounds");
        }
    }
}

namespace {

std::pair<double, double> bounds(const json& j, const char* key, std::pair<double, double> def) {
    if (!j.contains(key)) {
        return def;
    }
    const json& b = j.at(key);
    if (!b.is_array() || b.size() != 2 || !(b[0].get<double>() < b[1].get<double>())) {
        throw ConfigError(std::string("scenario: airspace '") + key + "' must be [lo, hi] with lo < hi");
    }
    return {b[0].get<double>(), b[1].get<double>()};
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    if (j.value("schema", "") != "rpas-scenario/1") {
        throw ConfigError("scenario: unsupported schema (expected rpas-scenario/1)");
    }
    ScenarioConfig s;
    try {
        s.name = j.value("name", "");
        for (const json& w : j.at("waypoints")) {
            s.waypoints.push_back({w.at("north_ft").get<double>(), w.at("east_ft").get<double>(),
                                   -w.at("altitude_ft").get<double>()});
        }
        if (j.contains("r_threshold_ft")) {
            s.r_threshold = j.at("r_threshold_ft").get<double>();
        }
        if (j.contains("initial")) {
            const json& in = j.at("initial");
            s.vt0 = in.value("vt_ftps", s.vt0);
            s.h0 = in.value("altitude_ft", s.h0);
            s.north0 = in.value("north_ft", s.north0);
            s.east0 = in.value("east_ft", s.east0);
            s.psi0 = in.value("heading_deg", 0.0) * kDegToRad;
        }
        s.dt = j.value("dt_s", s.dt);
        s.time_limit = j.value("time_limit_s", s.time_limit);
        if (j.contains("airspace")) {
            const json& a = j.at("airspace");
            std::tie(s.airspace.north_min, s.airspace.north_max) =
                bounds(a, "north_ft", {s.airspace.north_min, s.airspace.north_max});
            std::tie(s.airspace.east_min, s.airspace.east_max) =
                bounds(a, "east_ft", {s.airspace.east_min, s.airspace.east_max});
            std::tie(s.airspace.alt_min, s.airspace.alt_max) =
                bounds(a, "altitude_ft", {s.airspace.alt_min, s.airspace.alt_max});
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open scenario file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    ScenarioConfig s = parse_scenario(ss.str());
    if (s.name.empty()) {
        s.name = path.stem().string();
    }
    return s;
}

MissionSetup make_setup(const ScenarioConfig& scenario, const AircraftParams& params,
                        const control::ControllerConfig& controller) {
    scenario.validate();
    MissionSetup m;
    m.params = params;
    m.controller = controller;
    m.scenario = scenario;
    try {
        m.trim = trim(scenario.vt0, scenario.h0, params);
    } catch (const TrimError& e) {
        throw ConfigError(std::string("scenario trim failed: ") + e.what());
    }
    m.gains = control::synthesize_gains(control::linearize(m.trim, params), controller);
    m.op = control::operating_point(m.trim);
    m.initial = m.trim.state;
    m.initial.x_e = scenario.north0;
    m.initial.y_e = scenario.east0;
    m.initial.psi = scenario.psi0;
    m.r_threshold = scenario.r_threshold.value_or(controller.autopilot.r_threshold);
    return m;
}

void RunConfig::validate() const {
    if (!(pa > 0.0 && pa <= 1.0)) {
        throw ConfigError("run: P_A must lie in (0, 1]");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("run: epsilon must be finite and non-negative");
    }
}

namespace {

struct Remote {
    CommandVector command;
    ReferenceVector reference;
};

}  // namespace

RunOutput run_mission(const MissionSetup& setup, const RunConfig& run, bool capture) {
    run.validate();
    const ScenarioConfig& sc = setup.scenario;
    const AircraftParams& params = setup.params;
    const double dt = sc.dt;
    const auto n_max = static_cast<std::size_t>(std::llround(sc.time_limit / dt));
    // k / (1/dt) is correctly rounded when 1/dt is an integer, so 36298 steps print as 36.298.
    const double steps_per_s = std::round(1.0 / dt);
    const bool integral_rate = std::abs(steps_per_s * dt - 1.0) < 1e-12;
    auto time_of = [&](std::size_t k) {
        return integral_rate ? static_cast<double>(k) / steps_per_s : static_cast<double>(k) * dt;
    };

    RunOutput out;
    RunRecord& rec = out.record;
    rec.pa = run.pa;
    rec.epsilon = run.epsilon;
    rec.seed = run.seed;

    std::vector<std::uint8_t> mask;
    std::size_t depth = 0;
    if (!run.bypass_channel) {
        const double horizon = static_cast<double>(n_max + 1) * dt;
        mask = channel::make_mask(channel::sample_link_schedule(run.pa, horizon, run.seed), dt, n_max + 1);
        depth = channel::delay_depth(run.epsilon, dt);
    }
    if (run.force_loss_after) {
        const auto k0 = static_cast<std::size_t>(std::ceil(*run.force_loss_after / dt - 1e-9));
        mask.resize(n_max + 1, 1);
        for (std::size_t k = k0; k < mask.size(); ++k) {
            mask[k] = 0;
        }
    }

    const ReferenceVector trim_ref{0.0, 0.0, 0.0, setup.op.command.throttle};
    channel::DelayLine<Remote> line(depth, Remote{setup.op.command, trim_ref});
    control::WaypointManager wpm(sc.waypoints, setup.r_threshold);
    control::Integrators remote_integ, onboard_integ;

    AircraftState s = setup.initial;
    CommandVector applied = setup.op.command;
    ReferenceVector in_effect = trim_ref;
    double last_throttle = setup.op.command.throttle;
    std::uint8_t prev_x = 1;
    std::uint8_t x = 1;

    if (capture) {
        out.trajectory.reserve(std::min<std::size_t>(n_max + 1, 1u << 20));
    }
    auto record_row = [&](std::size_t k) {
        if (capture) {
            out.trajectory.push_back({time_of(k), s, applied, in_effect, x, wpm.index()});
        }
    };
    auto fail = [&](FailureMode mode) {
        rec.success = false;
        rec.failure_mode = mode;
    };

    for (std::size_t k = 0;; ++k) {
        wpm.update(s);
        if (wpm.done()) {
            rec.success = true;
            rec.completion_time = time_of(k);
            record_row(k);
            break;
        }
        if (k >= n_max) {
            record_row(k);
            fail(FailureMode::Timeout);
            break;
        }
        x = mask.empty() ? 1 : mask[k];

        // Shared by the sensors and the first RK4 stage.
        const FlightCondition fc = flight_condition(s, params);
        const Measurements meas = measure(s, fc, applied, params);
        const double psi_cmd = wpm.psi_command(s);
        const ReferenceVector ref = control::autopilot_references(
            s, psi_cmd, wpm.h_command(), sc.vt0, setup.op.command.throttle, setup.controller.autopilot);
        const CommandVector u_remote = control::llc_command(s, meas, ref, setup.gains, setup.op, remote_integ,
                                                            dt, params, setup.controller.integrator_limits);
        const Remote arrived = line.push(Remote{u_remote, ref});

        if (x == 1) {
            applied = arrived.command;
            in_effect = arrived.reference;
            last_throttle = arrived.command.throttle;
        } else {
            if (prev_x == 1) {
                onboard_integ = {};
            }
            ReferenceVector safe{0.0, 0.0, 0.0,
                                 run.policy.throttle == channel::ThrottleOnLoss::HoldLast ? last_throttle : 0.0};
            CommandVector u_fail{};
            if (run.policy.mode == channel::LossMode::FailsafeReference) {
                u_fail = control::llc_command(s, meas, safe, setup.gains, setup.op, onboard_integ, dt, params,
                                              setup.controller.integrator_limits);
            } else {
                safe = ReferenceVector{};
            }
            applied = channel::apply_link_policy(channel::LinkState::Off, arrived.command, u_fail, run.policy);
            in_effect = safe;
        }
        prev_x = x;
        record_row(k);

        try {
            s = rk4_step(s, fc, applied, dt, params);
        } catch (const SimulationFault& f) {
            fail(f.mode());
            break;
        }
        if (!s.finite()) {
            fail(FailureMode::NumericDivergence);
            break;
        }
        if (s.altitude() <= 0.0) {
            fail(FailureMode::GroundImpact);
            break;
        }
        if (std::abs(s.theta) >= 0.5 * kPi - params.envelope.theta_margin) {
            fail(FailureMode::AttitudeSingularity);
            break;
        }
        if (!inside_envelope(s.alpha(), s.beta(), params)) {
            fail(FailureMode::EnvelopeExit);
            break;
        }
    }
    rec.waypoints_reached = wpm.reached();
    return out;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
    out << "time_s,x_e,y_e,h,Vt,alpha,beta,phi,theta,psi,p,q,r,pow,de,da,dr,dt_cmd,Nz,ps,Nyr,link_state,"
           "waypoint_index\n";
    for (const auto& r : rows) {
        const AircraftState& s = r.state;
        const double v[] = {r.time,    s.x_e,       s.y_e,     s.altitude(),     s.vt(),
                            s.alpha(), s.beta(),    s.phi,     s.theta,          s.psi,
                            s.p,       s.q,         s.r,       s.pow,            r.command.elevator,
                            r.command.aileron, r.command.rudder, r.command.throttle, r.reference.nz,
                            r.reference.ps,    r.reference.nyr};
        for (double d : v) {
            out << format_double(d) << ',';
        }
        out << static_cast<int>(r.link_state) << ',' << r.waypoint_index << '\n';
    }
}

void export_trajectory(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write trajectory file " + path.string());
    }
    write_trajectory_csv(f, rows);
    if (!f) {
        throw std::runtime_error("I/O error while writing trajectory file " + path.string());
    }
}

}  // namespace rpas
