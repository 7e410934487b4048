#include "rpas/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rpas/common.hpp"

namespace rpas {

std::string_view to_string(FailureMode mode) {
    switch (mode) {
        case FailureMode::Timeout: return "timeout";
        case FailureMode::GroundImpact: return "ground-impact";
        case FailureMode::AttitudeSingularity: return "attitude-singularity";
        case FailureMode::EnvelopeExit: return "envelope-exit";
        case FailureMode::NumericDivergence: return "numeric-divergence";
    }
    return "unknown";
}

FailureMode parse_failure_mode(std::string_view s) {
    for (auto m : {FailureMode::Timeout, FailureMode::GroundImpact, FailureMode::AttitudeSingularity,
                   FailureMode::EnvelopeExit, FailureMode::NumericDivergence}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw std::invalid_argument("unknown failure mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Atmosphere and engine

namespace {

constexpr double kT0 = 518.67;              // sea-level temperature, deg R
constexpr double kRho0 = 2.3768924e-3;      // sea-level density, slug/ft^3
constexpr double kLapse = 0.00356616;       // deg R / ft
constexpr double kGasConstant = 1716.5619;  // ft lbf / (slug deg R)
constexpr double kG0 = 32.174049;           // ft/s^2
constexpr double kTropopause = 36089.24;    // ft
constexpr double kGammaAir = 1.4;

}  // namespace

Atmosphere standard_atmosphere(double altitude_ft) {
    Atmosphere a;
    constexpr double kExponent = kG0 / (kGasConstant * kLapse) - 1.0;
    if (altitude_ft <= kTropopause) {
        a.temperature = kT0 - kLapse * altitude_ft;
        a.density = kRho0 * std::pow(a.temperature / kT0, kExponent);
    } else {
        const double t_trop = kT0 - kLapse * kTropopause;
        const double rho_trop = kRho0 * std::pow(t_trop / kT0, kExponent);
        a.temperature = t_trop;
        a.density = rho_trop * std::exp(-kG0 * (altitude_ft - kTropopause) / (kGasConstant * t_trop));
    }
    a.speed_of_sound = std::sqrt(kGammaAir * kGasConstant * a.temperature);
    return a;
}

double throttle_gear(double throttle, const EngineData& e) {
    if (throttle <= e.gear_knee) {
        return e.gear_low_slope * throttle;
    }
    return e.gear_high_slope * throttle + e.gear_high_offset;
}

namespace {

// Bilinear lookup on the 10,000 ft x 0.2 Mach grid, extrapolating linearly
// from the edge cells.
double table_lookup(const EngineData::Table& tab, int ia, double da, int im, double dm) {
    const double cda = 1.0 - da;
    const double s = tab[im][ia] * cda + tab[im][ia + 1] * da;
    const double t = tab[im + 1][ia] * cda + tab[im + 1][ia + 1] * da;
    return s + (t - s) * dm;
}

}  // namespace

double engine_thrust(double power, double altitude_ft, double mach, const EngineData& e) {
    const double h = 1e-4 * altitude_ft;
    const int ia = std::clamp(static_cast<int>(std::floor(h)), 0, 4);
    const double da = h - ia;
    const double rm = 5.0 * mach;
    const int im = std::clamp(static_cast<int>(std::floor(rm)), 0, 4);
    const double dm = rm - im;

    const double mil = table_lookup(e.military, ia, da, im, dm);
    if (power < 50.0) {
        const double idle = table_lookup(e.idle, ia, da, im, dm);
        return idle + (mil - idle) * power * 0.02;
    }
    const double max = table_lookup(e.maximum, ia, da, im, dm);
    return mil + (max - mil) * (power - 50.0) * 0.02;
}

// ---------------------------------------------------------------------------
// Aerodynamics

namespace {

// Horner evaluation of k[0] + k[1] x + ... + k[N-1] x^(N-1).
template <std::size_t N>
double poly(const std::array<double, N>& k, double x) {
    double acc = k[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) {
        acc = acc * x + k[i];
    }
    return acc;
}

}  // namespace

AeroBasis aero_basis(double alpha, double beta, const AircraftParams& params) {
    const AeroData& k = params.aero;
    const double a = alpha;
    const double a2 = a * a;
    const double a3 = a2 * a;
    const double bt = beta;
    const double b2 = bt * bt;
    const double b3 = b2 * bt;

    AeroBasis o;
    o.cx_a = k.cx0[0] + a * (k.cx0[1] + a * (k.cx0[5] + a * k.cx0[6]));
    o.cx_de = k.cx0[3] + k.cx0[4] * a;
    o.cx_de2 = k.cx0[2];
    o.cxq = poly(k.cxq, a);

    o.cy_b = k.cy0[0] * bt;
    o.cyp = poly(k.cyp, a);
    o.cyr = poly(k.cyr, a);

    o.cz_a = (k.cz0[0] + a * (k.cz0[1] + a * (k.cz0[2] + a * (k.cz0[3] + a * k.cz0[4])))) * (1.0 - b2);
    o.czq = poly(k.czq, a);

    o.cl0 = bt * (k.cl0[0] + a * (k.cl0[1] + a * (k.cl0[2] + a * (k.cl0[5] + a * k.cl0[6])))) +
            b2 * (k.cl0[3] + a * k.cl0[4] + a2 * k.cl0[7]);
    o.clp = poly(k.clp, a);
    o.clr = poly(k.clr, a);
    o.clda = k.clda[0] + a * (k.clda[1] + a * (k.clda[3] + a * k.clda[6])) +
             bt * (k.clda[2] + a * (k.clda[4] + a * k.clda[5]));
    o.cldr = k.cldr[0] + k.cldr[1] * a + bt * (k.cldr[2] + a * (k.cldr[3] + a * (k.cldr[4] + a * k.cldr[5]))) +
             k.cldr[6] * b2;

    // cm0 regrouped by powers of de; the de^3 constant is applied in aero_coefficients.
    o.cm_a = k.cm0[0] + k.cm0[1] * a;
    o.cm_de = k.cm0[2] + a * (k.cm0[3] + a * k.cm0[5]);
    o.cm_de2 = k.cm0[4] + k.cm0[7] * a;
    o.cmq = poly(k.cmq, a);

    o.cn0 = bt * (k.cn0[0] + a * (k.cn0[1] + a * (k.cn0[4] + a * k.cn0[6]))) +
            b2 * (k.cn0[2] + a * k.cn0[3] + a2 * k.cn0[5]);
    o.cnp = poly(k.cnp, a);
    o.cnr = poly(k.cnr, a);
    o.cnda = k.cnda[0] + k.cnda[1] * a + k.cnda[6] * a2 + k.cnda[7] * a3 +
             bt * (k.cnda[2] + a * (k.cnda[3] + a * (k.cnda[4] + a * k.cnda[5]))) +
             b3 * (k.cnda[8] + k.cnda[9] * a);
    o.cndr = k.cndr[0] + a * (k.cndr[1] + a * k.cndr[5]) + bt * (k.cndr[2] + a * (k.cndr[3] + a * k.cndr[4]));
    return o;
}

AeroCoefficients aero_coefficients(const AeroBasis& o, double p, double q, double r, double de,
                                   double da, double dr, double vt, const AircraftParams& params) {
    const AeroData& k = params.aero;
    const double b = params.span;
    const double c = params.chord;
    const double phat = p * b / (2.0 * vt);
    const double qhat = q * c / (2.0 * vt);
    const double rhat = r * b / (2.0 * vt);

    AeroCoefficients out;
    out.cx = o.cx_a + (o.cx_de + o.cx_de2 * de) * de + o.cxq * qhat;
    out.cy = o.cy_b + k.cy0[1] * da + k.cy0[2] * dr + o.cyp * phat + o.cyr * rhat;
    out.cz = o.cz_a + k.cz0[5] * de + o.czq * qhat;
    const double dcg = params.xcg_ref - params.xcg;
    out.cl = o.cl0 + o.clp * phat + o.clr * rhat + o.clda * da + o.cldr * dr;
    const double cm0 = o.cm_a + (o.cm_de + (o.cm_de2 + k.cm0[6] * de) * de) * de;
    out.cm = cm0 + o.cmq * qhat + out.cz * dcg;
    out.cn = o.cn0 + o.cnp * phat + o.cnr * rhat + o.cnda * da + o.cndr * dr - out.cy * dcg * (c / b);
    return out;
}

AeroCoefficients aero_coefficients(double alpha, double beta, double p, double q, double r,
                                   double de, double da, double dr, double vt,
                                   const AircraftParams& params) {
    return aero_coefficients(aero_basis(alpha, beta, params), p, q, r, de, da, dr, vt, params);
}

bool inside_envelope(double alpha, double beta, const AircraftParams& params) {
    return alpha >= params.envelope.alpha_min && alpha <= params.envelope.alpha_max &&
           std::abs(beta) <= params.envelope.beta_max;
}

// ---------------------------------------------------------------------------
// Equations of motion

FlightCondition flight_condition(const AircraftState& s, const AircraftParams& params) {
    FlightCondition fc;
    fc.vt = s.vt();
    // atan is cheaper than atan2 and agrees with it for u > 0, which always holds inside the envelope.
    fc.alpha = s.u > 0.0 ? std::atan(s.w / s.u) : std::atan2(s.w, s.u);
    fc.beta = std::asin(s.v / fc.vt);
    const double h = -s.z_e;
    const Atmosphere atm = standard_atmosphere(h);
    fc.qbar = 0.5 * atm.density * fc.vt * fc.vt;
    fc.mach = fc.vt / atm.speed_of_sound;
    fc.thrust = engine_thrust(s.pow, h, fc.mach, params.engine);
    fc.sph = std::sin(s.phi);
    fc.cph = std::cos(s.phi);
    fc.sth = std::sin(s.theta);
    fc.cth = std::cos(s.theta);
    fc.sps = std::sin(s.psi);
    fc.cps = std::cos(s.psi);
    fc.aero = aero_basis(fc.alpha, fc.beta, params);
    return fc;
}

namespace {

ForcesMoments forces_from(const AircraftState& s, const FlightCondition& fc, const CommandVector& c,
                          const AircraftParams& params) {
    ForcesMoments fm{};
    fm.qbar = fc.qbar;
    fm.mach = fc.mach;
    fm.thrust = fc.thrust;
    const AeroCoefficients co =
        aero_coefficients(fc.aero, s.p, s.q, s.r, c.elevator, c.aileron, c.rudder, fc.vt, params);
    const double qs = fm.qbar * params.wing_area;
    fm.aero = {qs * co.cx, qs * co.cy, qs * co.cz};
    fm.moment = {qs * params.span * co.cl, qs * params.chord * co.cm, qs * params.span * co.cn};
    const double mg = params.mass * params.g;
    fm.gravity = {-mg * fc.sth, mg * fc.cth * fc.sph, mg * fc.cth * fc.cph};
    fm.total = {fm.aero.x + fm.gravity.x + fm.thrust, fm.aero.y + fm.gravity.y,
                fm.aero.z + fm.gravity.z};
    return fm;
}

}  // namespace

ForcesMoments forces_moments(const AircraftState& s, const CommandVector& c,
                             const AircraftParams& params) {
    return forces_from(s, flight_condition(s, params), c, params);
}

std::array<double, 9> body_to_earth(double phi, double theta, double psi) {
    const double sph = std::sin(phi), cph = std::cos(phi);
    const double sth = std::sin(theta), cth = std::cos(theta);
    const double sps = std::sin(psi), cps = std::cos(psi);
    return {cth * cps, sph * sth * cps - cph * sps, cph * sth * cps + sph * sps,
            cth * sps, sph * sth * sps + cph * cps, cph * sth * sps - sph * cps,
            -sth,      sph * cth,                   cph * cth};
}

StateVector state_derivative(const AircraftState& s, const FlightCondition& fc, const CommandVector& c,
                             const AircraftParams& params) {
    if (std::abs(s.theta) >= 0.5 * kPi - params.envelope.theta_margin) {
        throw SimulationFault(FailureMode::AttitudeSingularity,
                              "pitch attitude reached the Euler-angle singularity guard");
    }
    const AeroCoefficients co =
        aero_coefficients(fc.aero, s.p, s.q, s.r, c.elevator, c.aileron, c.rudder, fc.vt, params);

    const double qs = fc.qbar * params.wing_area;
    const double inv_m = 1.0 / params.mass;
    const double g = params.g;
    const double sph = fc.sph, cph = fc.cph;
    const double sth = fc.sth, cth = fc.cth;
    const double sps = fc.sps, cps = fc.cps;

    StateVector xd{};
    // Translational dynamics: F/m + gravity - omega x V.
    xd[0] = (qs * co.cx + fc.thrust) * inv_m - g * sth + s.r * s.v - s.q * s.w;
    xd[1] = qs * co.cy * inv_m + g * cth * sph + s.p * s.w - s.r * s.u;
    xd[2] = qs * co.cz * inv_m + g * cth * cph + s.q * s.u - s.p * s.v;

    // Euler kinematics.
    const double qsr = s.q * sph + s.r * cph;
    xd[3] = s.p + (sth / cth) * qsr;
    xd[4] = s.q * cph - s.r * sph;
    xd[5] = qsr / cth;

    // Rotational dynamics.
    const InertiaCoefficients& k = params.inertia;
    const double roll = qs * params.span * co.cl;
    const double pitch = qs * params.chord * co.cm;
    const double yaw = qs * params.span * co.cn;
    xd[6] = (k.c1 * s.r + k.c2 * s.p) * s.q + k.c3 * roll + k.c4 * yaw;
    xd[7] = k.c5 * s.p * s.r - k.c6 * (s.p * s.p - s.r * s.r) + k.c7 * pitch;
    xd[8] = (k.c8 * s.p - k.c2 * s.r) * s.q + k.c4 * roll + k.c9 * yaw;

    // Navigation: body velocities rotated into NED.
    xd[9] = cth * cps * s.u + (sph * sth * cps - cph * sps) * s.v + (cph * sth * cps + sph * sps) * s.w;
    xd[10] = cth * sps * s.u + (sph * sth * sps + cph * cps) * s.v + (cph * sth * sps - sph * cps) * s.w;
    xd[11] = -sth * s.u + sph * cth * s.v + cph * cth * s.w;

    // First-order engine lag.
    xd[12] = (throttle_gear(c.throttle, params.engine) - s.pow) / params.engine.thrust_lag_s;
    return xd;
}

StateVector state_derivative(const AircraftState& s, const CommandVector& c,
                             const AircraftParams& params) {
    return state_derivative(s, flight_condition(s, params), c, params);
}

AircraftState rk4_step(const AircraftState& s, const FlightCondition& fc, const CommandVector& c,
                       double dt, const AircraftParams& params) {
    auto stage = [&](const StateVector& slope, double h) {
        AircraftState x = s;
        x.u += h * slope[0];
        x.v += h * slope[1];
        x.w += h * slope[2];
        x.phi += h * slope[3];
        x.theta += h * slope[4];
        x.psi += h * slope[5];
        x.p += h * slope[6];
        x.q += h * slope[7];
        x.r += h * slope[8];
        x.x_e += h * slope[9];
        x.y_e += h * slope[10];
        x.z_e += h * slope[11];
        x.pow += h * slope[12];
        return x;
    };
    auto f = [&](const AircraftState& x) { return state_derivative(x, flight_condition(x, params), c, params); };
    const StateVector k1 = state_derivative(s, fc, c, params);
    const StateVector k2 = f(stage(k1, 0.5 * dt));
    const StateVector k3 = f(stage(k2, 0.5 * dt));
    const StateVector k4 = f(stage(k3, dt));
    StateVector sum;
    for (std::size_t i = 0; i < kStateSize; ++i) {
        sum[i] = k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i];
    }
    const AircraftState x1 = stage(sum, dt / 6.0);
    if (!x1.finite()) {
        throw SimulationFault(FailureMode::NumericDivergence, "non-finite state after RK4 step");
    }
    return x1;
}

AircraftState rk4_step(const AircraftState& s, const CommandVector& c, double dt,
                       const AircraftParams& params) {
    return rk4_step(s, flight_condition(s, params), c, dt, params);
}

Measurements measure(const AircraftState& s, const FlightCondition& fc, const CommandVector& c,
                     const AircraftParams& params) {
    const ForcesMoments fm = forces_from(s, fc, c, params);
    const InertiaCoefficients& k = params.inertia;
    const double qdot = k.c5 * s.p * s.r - k.c6 * (s.p * s.p - s.r * s.r) + k.c7 * fm.moment.y;
    const double rdot = (k.c8 * s.p - k.c2 * s.r) * s.q + k.c4 * fm.moment.x + k.c9 * fm.moment.z;
    // Specific force from aero and thrust only; gravity is not sensed.
    const double ay = fm.aero.y / params.mass + params.accel_x * rdot;
    const double az = fm.aero.z / params.mass - params.accel_x * qdot;
    Measurements m;
    m.nz = -az / params.g;
    m.ny = ay / params.g;
    m.ps = s.p * std::cos(fc.alpha) + s.r * std::sin(fc.alpha);
    m.nyr = m.ny + s.r;
    return m;
}

Measurements measure(const AircraftState& s, const CommandVector& c, const AircraftParams& params) {
    return measure(s, flight_condition(s, params), c, params);
}

double dynamic_residual(const StateVector& xd) {
    double worst = 0.0;
    for (std::size_t i : {0u, 1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 12u}) {
        worst = std::max(worst, std::abs(xd[i]));
    }
    return worst;
}


// ---------------------------------------------------------------------------
// Trim

namespace {

AircraftState trim_state(double vt, double alt, double alpha, double throttle,
                         const AircraftParams& params) {
    AircraftState s = AircraftState::from_wind_axes(vt, alpha, 0.0);
    s.theta = alpha;
    s.z_e = -alt;
    s.pow = throttle_gear(throttle, params.engine);
    return s;
}

std::array<double, 3> trim_residual(double vt, double alt, const std::array<double, 3>& x,
                                    const AircraftParams& params) {
    const AircraftState s = trim_state(vt, alt, x[0], x[2], params);
    const CommandVector c{x[2], x[1], 0.0, 0.0};
    const StateVector xd = state_derivative(s, c, params);
    return {xd[0], xd[2], xd[7]};
}

}  // namespace

TrimPoint trim(double vt, double altitude_ft, const AircraftParams& params, const TrimGuess& guess) {
    if (!(vt > 0.0) || !std::isfinite(altitude_ft)) {
        throw TrimError("trim: airspeed must be positive and altitude finite");
    }
    std::array<double, 3> x{guess.alpha, guess.elevator, guess.throttle};
    std::array<double, 3> f = trim_residual(vt, altitude_ft, x, params);
    auto norm = [](const std::array<double, 3>& v) {
        return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
    };

    for (int iter = 0; iter < 100 && norm(f) > 1e-10; ++iter) {
        // Central-difference Jacobian, columns = alpha, elevator, throttle.
        double jac[3][3];
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-6;
            auto xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const auto fp = trim_residual(vt, altitude_ft, xp, params);
            const auto fm = trim_residual(vt, altitude_ft, xm, params);
            for (int i = 0; i < 3; ++i) {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        // Cramer's rule on the 3x3 system J dx = -f.
        auto det3 = [](const double m[3][3]) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const double d = det3(jac);
        if (!std::isfinite(d) || std::abs(d) < 1e-300) {
            throw TrimError("trim: singular Jacobian");
        }
        std::array<double, 3> dx{};
        for (int j = 0; j < 3; ++j) {
            double m[3][3];
            for (int i = 0; i < 3; ++i) {
                for (int k = 0; k < 3; ++k) {
                    m[i][k] = (k == j) ? -f[i] : jac[i][k];
                }
            }
            dx[j] = det3(m) / d;
        }
        // Backtrack until the residual drops.
        double step = 1.0;
        std::array<double, 3> xn{}, fn{};
        for (int ls = 0; ls < 30; ++ls) {
            for (int i = 0; i < 3; ++i) {
                xn[i] = x[i] + step * dx[i];
            }
            fn = trim_residual(vt, altitude_ft, xn, params);
            if (norm(fn) < norm(f)) {
                break;
            }
            step *= 0.5;
        }
        x = xn;
        f = fn;
    }

    const double res = norm(f);
    if (!(res <= 1e-10)) {
        throw TrimError("trim did not converge at Vt=" + std::to_string(vt) +
                        " ft/s, h=" + std::to_string(altitude_ft) + " ft (residual " +
                        std::to_string(res) + ")");
    }
    if (x[2] < params.actuators.throttle_min || x[2] > params.actuators.throttle_max ||
        std::abs(x[1]) > params.actuators.elevator_max || !inside_envelope(x[0], 0.0, params)) {
        throw TrimError("trim solution lies outside actuator or aerodynamic limits");
    }

    TrimPoint tp;
    tp.state = trim_state(vt, altitude_ft, x[0], x[2], params);
    tp.command = CommandVector{x[2], x[1], 0.0, 0.0};
    tp.residual = dynamic_residual(state_derivative(tp.state, tp.command, params));
    tp.outputs = measure(tp.state, tp.command, params);
    return tp;
}

}  // namespace rpas
