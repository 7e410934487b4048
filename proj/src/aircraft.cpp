#include "rpas/aircraft.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rpas {

using nlohmann::json;

namespace {

double positive(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ConfigError(std::string("aircraft data: missing numeric field '") + key + "'");
    }
    const double v = j.at(key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string("aircraft data: '") + key + "' must be positive");
    }
    return v;
}

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ConfigError(std::string("aircraft data: missing numeric field '") + key + "'");
    }
    return j.at(key).get<double>();
}

template <std::size_t N>
void read_array(const json& j, const char* key, std::array<double, N>& out) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != N) {
        throw ConfigError(std::string("aircraft data: '") + key + "' must be an array of " +
                          std::to_string(N) + " numbers");
    }
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = j.at(key)[i].get<double>();
    }
}

void read_table(const json& j, const char* key, EngineData::Table& out) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 6) {
        throw ConfigError(std::string("aircraft data: engine table '") + key + "' must be 6x6");
    }
    for (std::size_t i = 0; i < 6; ++i) {
        const json& row = j.at(key)[i];
        if (!row.is_array() || row.size() != 6) {
            throw ConfigError(std::string("aircraft data: engine table '") + key + "' must be 6x6");
        }
        for (std::size_t k = 0; k < 6; ++k) {
            out[i][k] = row[k].get<double>();
        }
    }
}

void expect_grid(const json& j, const char* key, double step) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 6) {
        throw ConfigError(std::string("aircraft data: engine axis '") + key + "' must have 6 entries");
    }
    for (std::size_t i = 0; i < 6; ++i) {
        if (std::abs(j.at(key)[i].get<double>() - step * static_cast<double>(i)) > 1e-9 * step) {
            throw ConfigError(std::string("aircraft data: engine axis '") + key +
                              "' must be a uniform grid starting at 0");
        }
    }
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

InertiaCoefficients inertia_coefficients(double ixx, double iyy, double izz, double ixz) {
    InertiaCoefficients c;
    c.gamma = ixx * izz - ixz * ixz;
    if (!(c.gamma > 0.0) || !(iyy > 0.0)) {
        throw ConfigError("inertia tensor is not positive definite (Gamma <= 0)");
    }
    c.c1 = ((iyy - izz) * izz - ixz * ixz) / c.gamma;
    c.c2 = (ixx - iyy + izz) * ixz / c.gamma;
    c.c3 = izz / c.gamma;
    c.c4 = ixz / c.gamma;
    c.c5 = (izz - ixx) / iyy;
    c.c6 = ixz / iyy;
    c.c7 = 1.0 / iyy;
    c.c8 = (ixx * (ixx - iyy) + ixz * ixz) / c.gamma;
    c.c9 = ixx / c.gamma;
    return c;
}

InertiaCoefficients inertia_coefficients(const AircraftParams& params) {
    return inertia_coefficients(params.ixx, params.iyy, params.izz, params.ixz);
}

void AircraftParams::finalize() {
    for (double v : {mass, g, wing_area, span, chord, ixx, iyy, izz, engine.thrust_lag_s}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("aircraft data: mass, g, geometry, inertias and thrust lag must be positive");
        }
    }
    inertia = inertia_coefficients(*this);
    if (!(envelope.alpha_min < envelope.alpha_max) || !(envelope.beta_max > 0.0)) {
        throw ConfigError("aircraft data: empty aerodynamic envelope");
    }
}

AircraftParams parse_aircraft_params(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("aircraft data: ") + e.what());
    }
    if (j.value("schema", "") != "rpas-aircraft/1") {
        throw ConfigError("aircraft data: unsupported schema (expected rpas-aircraft/1)");
    }
    AircraftParams p;
    p.name = j.value("name", "");
    p.version = j.value("version", "");
    p.data_hash = fnv1a64(json_text);

    try {
        const json& mass = j.at("mass");
        p.mass = positive(mass, "mass_slug");
        p.g = positive(mass, "g_ftps2");

        const json& geo = j.at("geometry");
        p.wing_area = positive(geo, "wing_area_ft2");
        p.span = positive(geo, "span_ft");
        p.chord = positive(geo, "chord_ft");
        p.xcg = number(geo, "xcg");
        p.xcg_ref = number(geo, "xcg_ref");
        p.accel_x = number(geo, "accelerometer_x_ft");

        const json& in = j.at("inertia");
        p.ixx = positive(in, "ixx");
        p.iyy = positive(in, "iyy");
        p.izz = positive(in, "izz");
        p.ixz = number(in, "ixz");

        const json& eng = j.at("engine");
        p.engine.thrust_lag_s = positive(eng, "thrust_lag_s");
        const json& gear = eng.at("throttle_gear");
        p.engine.gear_knee = number(gear, "knee");
        p.engine.gear_low_slope = number(gear, "low_slope");
        p.engine.gear_high_slope = number(gear, "high_slope");
        p.engine.gear_high_offset = number(gear, "high_offset");
        expect_grid(eng, "mach", 0.2);
        expect_grid(eng, "altitude_ft", 10000.0);
        read_table(eng, "idle_lbf", p.engine.idle);
        read_table(eng, "military_lbf", p.engine.military);
        read_table(eng, "maximum_lbf", p.engine.maximum);

        const json& aero = j.at("aero");
        if (aero.value("model", "") != "morelli-global-polynomial") {
            throw ConfigError("aircraft data: aero.model must be morelli-global-polynomial");
        }
        AeroData& a = p.aero;
        read_array(aero, "cx0", a.cx0);
        read_array(aero, "cxq", a.cxq);
        read_array(aero, "cy0", a.cy0);
        read_array(aero, "cyp", a.cyp);
        read_array(aero, "cyr", a.cyr);
        read_array(aero, "cz0", a.cz0);
        read_array(aero, "czq", a.czq);
        read_array(aero, "cl0", a.cl0);
        read_array(aero, "clp", a.clp);
        read_array(aero, "clr", a.clr);
        read_array(aero, "clda", a.clda);
        read_array(aero, "cldr", a.cldr);
        read_array(aero, "cm0", a.cm0);
        read_array(aero, "cmq", a.cmq);
        read_array(aero, "cn0", a.cn0);
        read_array(aero, "cnp", a.cnp);
        read_array(aero, "cnr", a.cnr);
        read_array(aero, "cnda", a.cnda);
        read_array(aero, "cndr", a.cndr);

        const json& env = j.at("envelope");
        p.envelope.alpha_min = number(env, "alpha_min_deg") * kDegToRad;
        p.envelope.alpha_max = number(env, "alpha_max_deg") * kDegToRad;
        p.envelope.beta_max = positive(env, "beta_max_deg") * kDegToRad;
        p.envelope.theta_margin = positive(env, "theta_margin_rad");

        const json& act = j.at("actuators");
        p.actuators.throttle_min = number(act, "throttle_min");
        p.actuators.throttle_max = number(act, "throttle_max");
        p.actuators.elevator_max = positive(act, "elevator_max_deg") * kDegToRad;
        p.actuators.aileron_max = positive(act, "aileron_max_deg") * kDegToRad;
        p.actuators.rudder_max = positive(act, "rudder_max_deg") * kDegToRad;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("aircraft data: ") + e.what());
    }
    p.finalize();
    return p;
}

AircraftParams load_aircraft_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open aircraft data file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_aircraft_params(ss.str());
}

}  // namespace rpas
