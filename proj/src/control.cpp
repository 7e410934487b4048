#include "rpas/control.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "rpas/common.hpp"
#include "rpas/lqr.hpp"

namespace rpas::control {

using nlohmann::json;

void AutopilotGains::validate() const {
    for (double k : {k_psi_p, k_phi_p, k_z_p, k_vt}) {
        if (!(k > 0.0) || !std::isfinite(k)) {
            throw ConfigError("autopilot: proportional gains must be positive");
        }
    }
    for (double k : {k_psi_d, k_phi_d, k_z_d}) {
        if (!(k >= 0.0) || !std::isfinite(k)) {
            throw ConfigError("autopilot: derivative gains must be non-negative");
        }
    }
    if (!(phi_max > 0.0 && phi_max < 0.5 * kPi)) {
        throw ConfigError("autopilot: phi_max must lie in (0, 90) deg");
    }
    if (!(r_threshold > 0.0)) {
        throw ConfigError("autopilot: r_threshold must be positive");
    }
    if (!(nz_min < nz_max)) {
        throw ConfigError("autopilot: nz_min must be below nz_max");
    }
}

void GainSynthesisConfig::validate() const {
    auto check = [](const Eigen::MatrixXd& m, Eigen::Index n, bool definite, const char* name) {
        if (m.rows() != n || m.cols() != n) {
            throw ConfigError(std::string("lqr: ") + name + " has the wrong size");
        }
        if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm())) {
            throw ConfigError(std::string("lqr: ") + name + " must be symmetric");
        }
        const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
        if (definite ? !(lo > 0.0) : lo < 0.0) {
            throw ConfigError(std::string("lqr: ") + name +
                              (definite ? " must be positive definite" : " must be positive semidefinite"));
        }
    };
    check(q_long, 3, false, "q_long");
    check(r_long, 1, true, "r_long");
    check(q_lat, 5, false, "q_lat");
    check(r_lat, 2, true, "r_lat");
}

ControllerConfig default_controller_config() {
    ControllerConfig c;
    c.weights.q_long = Eigen::Vector3d(100.0, 100.0, 100.0).asDiagonal();
    c.weights.r_long = Eigen::MatrixXd::Identity(1, 1);
    c.weights.q_lat = (Eigen::VectorXd(5) << 100.0, 10.0, 10.0, 100.0, 100.0).finished().asDiagonal();
    c.weights.r_lat = Eigen::MatrixXd::Identity(2, 2);
    return c;
}

namespace {

Eigen::MatrixXd diag_from(const json& j, const char* key, Eigen::Index n) {
    if (!j.contains(key) || !j.at(key).is_array() || static_cast<Eigen::Index>(j.at(key).size()) != n) {
        throw ConfigError(std::string("controller: '") + key + "' must be an array of " +
                          std::to_string(n) + " numbers");
    }
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i) = j.at(key)[static_cast<std::size_t>(i)].get<double>();
    }
    return d.asDiagonal();
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw ConfigError(std::string("controller: '") + name + "' has the wrong shape");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(std::string("controller: '") + name + "' has the wrong shape");
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
    }
    return m;
}

}  // namespace

ControllerConfig parse_controller_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("controller: ") + e.what());
    }
    if (j.value("schema", "") != "rpas-controller/1") {
        throw ConfigError("controller: unsupported schema (expected rpas-controller/1)");
    }
    ControllerConfig c = default_controller_config();
    try {
        if (j.contains("autopilot")) {
            const json& a = j.at("autopilot");
            AutopilotGains& g = c.autopilot;
            g.k_psi_p = a.value("k_psi_p", g.k_psi_p);
            g.k_psi_d = a.value("k_psi_d", g.k_psi_d);
            g.k_phi_p = a.value("k_phi_p", g.k_phi_p);
            g.k_phi_d = a.value("k_phi_d", g.k_phi_d);
            g.k_z_p = a.value("k_z_p", g.k_z_p);
            g.k_z_d = a.value("k_z_d", g.k_z_d);
            g.k_vt = a.value("k_vt", g.k_vt);
            g.phi_max = a.value("phi_max_deg", g.phi_max * kRadToDeg) * kDegToRad;
            g.r_threshold = a.value("r_threshold_ft", g.r_threshold);
            g.nz_min = a.value("nz_min", g.nz_min);
            g.nz_max = a.value("nz_max", g.nz_max);
            g.turn_compensation = a.value("turn_compensation", g.turn_compensation);
        }
        if (j.contains("lqr")) {
            const json& l = j.at("lqr");
            c.weights.q_long = diag_from(l, "q_long_diag", 3);
            c.weights.r_long = diag_from(l, "r_long_diag", 1);
            c.weights.q_lat = diag_from(l, "q_lat_diag", 5);
            c.weights.r_lat = diag_from(l, "r_lat_diag", 2);
        }
        if (j.contains("integrator_limits")) {
            const json& il = j.at("integrator_limits");
            c.integrator_limits.nz = il.value("nz", c.integrator_limits.nz);
            c.integrator_limits.ps = il.value("ps", c.integrator_limits.ps);
            c.integrator_limits.nyr = il.value("nyr", c.integrator_limits.nyr);
        }
        if (j.contains("k_long")) {
            c.k_long = matrix_from(j.at("k_long"), 1, 3, "k_long");
        }
        if (j.contains("k_lat")) {
            c.k_lat = matrix_from(j.at("k_lat"), 2, 5, "k_lat");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("controller: ") + e.what());
    }
    c.autopilot.validate();
    c.weights.validate();
    for (double v : {c.integrator_limits.nz, c.integrator_limits.ps, c.integrator_limits.nyr}) {
        if (!(v > 0.0)) {
            throw ConfigError("controller: integrator limits must be positive");
        }
    }
    return c;
}

ControllerConfig load_controller_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open controller config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_controller_config(ss.str());
}

// ---------------------------------------------------------------------------
// Linearization and synthesis

LinearModel LinearModel::augmented() const {
    const auto n = A.rows();
    const auto m = B.cols();
    const auto p = C.rows();
    LinearModel g;
    g.A = Eigen::MatrixXd::Zero(n + p, n + p);
    g.A.topLeftCorner(n, n) = A;
    g.A.bottomLeftCorner(p, n) = -C;
    g.B = Eigen::MatrixXd::Zero(n + p, m);
    g.B.topRows(n) = B;
    g.B.bottomRows(p) = -D;
    g.C = Eigen::MatrixXd::Identity(n + p, n + p);
    g.D = Eigen::MatrixXd::Zero(n + p, m);
    return g;
}

namespace {

// Longitudinal map: x = [alpha, q], u = [de] -> ([alpha', q'], [Nz]).
void long_eval(const TrimPoint& t, const AircraftParams& params, const double* x, const double* u,
               double* f, double* y) {
    AircraftState s = t.state;
    const double vt = s.vt();
    s.u = vt * std::cos(x[0]);
    s.w = vt * std::sin(x[0]);
    s.q = x[1];
    CommandVector c = t.command;
    c.elevator = u[0];
    const StateVector xd = state_derivative(s, c, params);
    f[0] = (s.u * xd[2] - s.w * xd[0]) / (s.u * s.u + s.w * s.w);
    f[1] = xd[7];
    y[0] = measure(s, c, params).nz;
}

// Lateral map: x = [beta, p, r], u = [da, dr] -> ([beta', p', r'], [ps, Nyr]).
void lat_eval(const TrimPoint& t, const AircraftParams& params, const double* x, const double* u,
              double* f, double* y) {
    AircraftState s = AircraftState::from_wind_axes(t.state.vt(), t.state.alpha(), x[0]);
    s.phi = t.state.phi;
    s.theta = t.state.theta;
    s.psi = t.state.psi;
    s.x_e = t.state.x_e;
    s.y_e = t.state.y_e;
    s.z_e = t.state.z_e;
    s.pow = t.state.pow;
    s.q = t.state.q;
    s.p = x[1];
    s.r = x[2];
    CommandVector c = t.command;
    c.aileron = u[0];
    c.rudder = u[1];
    const StateVector xd = state_derivative(s, c, params);
    const double vt = s.vt();
    const double vtdot = (s.u * xd[0] + s.v * xd[1] + s.w * xd[2]) / vt;
    f[0] = (xd[1] * vt - s.v * vtdot) / (vt * vt * std::cos(x[0]));
    f[1] = xd[6];
    f[2] = xd[8];
    const Measurements m = measure(s, c, params);
    y[0] = m.ps;
    y[1] = m.nyr;
}

template <typename Eval>
LinearModel jacobians(Eval eval, std::vector<double> x0, std::vector<double> u0, int ny,
                      double rel_step) {
    const int nx = static_cast<int>(x0.size());
    const int nu = static_cast<int>(u0.size());
    LinearModel lm;
    lm.A.resize(nx, nx);
    lm.B.resize(nx, nu);
    lm.C.resize(ny, nx);
    lm.D.resize(ny, nu);
    std::vector<double> fp(nx), fm(nx), yp(ny), ym(ny);
    auto column = [&](std::vector<double>& v, int j, Eigen::MatrixXd& F, Eigen::MatrixXd& G) {
        const double h = rel_step * std::max(1.0, std::abs(v[j]));
        const double saved = v[j];
        v[j] = saved + h;
        eval(x0.data(), u0.data(), fp.data(), yp.data());
        v[j] = saved - h;
        eval(x0.data(), u0.data(), fm.data(), ym.data());
        v[j] = saved;
        for (int i = 0; i < nx; ++i) {
            F(i, j) = (fp[i] - fm[i]) / (2.0 * h);
        }
        for (int i = 0; i < ny; ++i) {
            G(i, j) = (yp[i] - ym[i]) / (2.0 * h);
        }
    };
    for (int j = 0; j < nx; ++j) {
        column(x0, j, lm.A, lm.C);
    }
    for (int j = 0; j < nu; ++j) {
        column(u0, j, lm.B, lm.D);
    }
    if (!lm.A.allFinite() || !lm.B.allFinite() || !lm.C.allFinite() || !lm.D.allFinite()) {
        throw ConfigError("linearize: Jacobian contains non-finite entries");
    }
    return lm;
}

}  // namespace

Linearization linearize(const TrimPoint& trim, const AircraftParams& params, double rel_step) {
    Linearization lin;
    lin.longitudinal = jacobians(
        [&](const double* x, const double* u, double* f, double* y) { long_eval(trim, params, x, u, f, y); },
        {trim.state.alpha(), trim.state.q}, {trim.command.elevator}, 1, rel_step);
    lin.lateral = jacobians(
        [&](const double* x, const double* u, double* f, double* y) { lat_eval(trim, params, x, u, f, y); },
        {trim.state.beta(), trim.state.p, trim.state.r}, {trim.command.aileron, trim.command.rudder}, 2,
        rel_step);
    return lin;
}

Eigen::MatrixXd synthesize(const LinearModel& augmented, const Eigen::MatrixXd& q,
                           const Eigen::MatrixXd& r) {
    try {
        return lqr::solve_care(augmented.A, augmented.B, q, r).K;
    } catch (const NumericError& e) {
        throw ConfigError(std::string("gain synthesis failed: ") + e.what());
    }
}

GainSet synthesize_gains(const Linearization& lin, const ControllerConfig& cfg) {
    const LinearModel lon = lin.longitudinal.augmented();
    const LinearModel lat = lin.lateral.augmented();
    const Eigen::MatrixXd kl = cfg.k_long ? *cfg.k_long : synthesize(lon, cfg.weights.q_long, cfg.weights.r_long);
    const Eigen::MatrixXd kt = cfg.k_lat ? *cfg.k_lat : synthesize(lat, cfg.weights.q_lat, cfg.weights.r_lat);
    GainSet g;
    g.k_long = kl;
    g.k_lat = kt;
    g.long_abscissa = lqr::spectral_abscissa(lon.A - lon.B * kl);
    g.lat_abscissa = lqr::spectral_abscissa(lat.A - lat.B * kt);
    if (!(g.long_abscissa < 0.0) || !(g.lat_abscissa < 0.0)) {
        throw ConfigError("inner-loop gains do not stabilize the linearized plant (not Hurwitz)");
    }
    return g;
}

// ---------------------------------------------------------------------------
// Guidance and autopilot

Guidance waypoint_guidance(const AircraftState& s, const Waypoint& wp, double previous_psi) {
    Guidance g;
    g.dx = wp.north - s.x_e;
    g.dy = wp.east - s.y_e;
    g.dz = wp.down - s.z_e;
    g.slant_range = std::sqrt(g.dx * g.dx + g.dy * g.dy + g.dz * g.dz);
    g.psi_cmd = (g.dx == 0.0 && g.dy == 0.0) ? previous_psi : std::atan2(g.dy, g.dx);
    return g;
}

ReferenceVector autopilot_references(const AircraftState& s, double psi_cmd, double h_cmd,
                                     double vt_cmd, double throttle_trim,
                                     const AutopilotGains& k) {
    ReferenceVector ref;
    const double e_psi = wrap_angle(psi_cmd - s.psi);
    const double phi_cmd = clamp(k.k_psi_p * e_psi - k.k_psi_d * s.r, -k.phi_max, k.phi_max);
    ref.ps = k.k_phi_p * (phi_cmd - s.phi) - k.k_phi_d * s.p;

    // Climb rate straight from the navigation equation (h' = -z_e').
    const double sph = std::sin(s.phi), cph = std::cos(s.phi);
    const double sth = std::sin(s.theta), cth = std::cos(s.theta);
    const double hdot = s.u * sth - s.v * sph * cth - s.w * cph * cth;
    double nz = k.k_z_p * (h_cmd - s.altitude()) - k.k_z_d * hdot;
    if (k.turn_compensation) {
        nz += 1.0 / std::max(std::cos(s.phi), 0.2) - 1.0;
    }
    ref.nz = clamp(nz, k.nz_min, k.nz_max);
    ref.nyr = 0.0;
    ref.throttle = clamp(k.k_vt * (vt_cmd - s.vt()) + throttle_trim, 0.0, 1.0);
    return ref;
}

WaypointManager::WaypointManager(std::vector<Waypoint> waypoints, double r_threshold)
    : waypoints_(std::move(waypoints)), r_threshold_(r_threshold) {
    if (waypoints_.empty()) {
        throw ConfigError("waypoint manager: at least one waypoint is required");
    }
    if (!(r_threshold_ > 0.0)) {
        throw ConfigError("waypoint manager: capture radius must be positive");
    }
}

const Waypoint& WaypointManager::active() const {
    if (done()) {
        throw std::logic_error("waypoint manager: no active waypoint in Done mode");
    }
    return waypoints_[index_];
}

bool WaypointManager::update(const AircraftState& s) {
    if (done()) {
        return false;
    }
    const Guidance g = waypoint_guidance(s, waypoints_[index_], psi_hold_);
    if (g.slant_range < r_threshold_) {
        ++index_;
        if (done()) {
            psi_hold_ = s.psi;
            h_hold_ = s.altitude();
        }
        return true;
    }
    return false;
}

double WaypointManager::psi_command(const AircraftState& s) {
    if (done()) {
        return psi_hold_;
    }
    psi_hold_ = waypoint_guidance(s, waypoints_[index_], psi_hold_).psi_cmd;
    return psi_hold_;
}

double WaypointManager::h_command() const {
    return done() ? h_hold_ : -waypoints_[index_].down;
}

// ---------------------------------------------------------------------------
// Inner loops

OperatingPoint operating_point(const TrimPoint& trim) {
    return {trim.state.alpha(), trim.outputs.nz, trim.command};
}

CommandVector saturate(const CommandVector& c, const ActuatorLimits& lim) {
    return {clamp(c.throttle, lim.throttle_min, lim.throttle_max),
            clamp(c.elevator, -lim.elevator_max, lim.elevator_max),
            clamp(c.aileron, -lim.aileron_max, lim.aileron_max),
            clamp(c.rudder, -lim.rudder_max, lim.rudder_max)};
}

CommandVector llc_command(const AircraftState& s, const Measurements& m, const ReferenceVector& ref,
                          const GainSet& gains, const OperatingPoint& op, Integrators& integ,
                          double dt, const AircraftParams& params, const IntegratorLimits& limits) {
    const double alpha = std::atan2(s.w, s.u);
    const double beta = std::asin(s.v / s.vt());
    const auto& kl = gains.k_long;
    const auto& kt = gains.k_lat;

    CommandVector raw;
    raw.throttle = ref.throttle;
    raw.elevator = op.command.elevator -
                   (kl(0) * (alpha - op.alpha) + kl(1) * s.q + kl(2) * integ.nz);
    const double lat[5] = {beta, s.p, s.r, integ.ps, integ.nyr};
    double da = op.command.aileron, dr = op.command.rudder;
    for (int j = 0; j < 5; ++j) {
        da -= kt(0, j) * lat[j];
        dr -= kt(1, j) * lat[j];
    }
    raw.aileron = da;
    raw.rudder = dr;
    const CommandVector out = saturate(raw, params.actuators);

    if (out.elevator == raw.elevator) {
        integ.nz = clamp(integ.nz + dt * (ref.nz - (m.nz - op.nz)), -limits.nz, limits.nz);
    }
    if (out.aileron == raw.aileron) {
        integ.ps = clamp(integ.ps + dt * (ref.ps - m.ps), -limits.ps, limits.ps);
    }
    if (out.rudder == raw.rudder) {
        integ.nyr = clamp(integ.nyr + dt * (ref.nyr - m.nyr), -limits.nyr, limits.nyr);
    }
    return out;
}

}  // namespace rpas::control
