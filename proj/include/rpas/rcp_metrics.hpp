#pragma once

// Required Communication Performance metrics for a two-state (on/off) link
// whose sojourn times are exponential:
//   T_on  ~ Exp(lambda_off)   time spent available before dropping out
//   T_off ~ Exp(lambda_on)    time spent unavailable before recovering
//
// All functions are pure and throw std::domain_error on invalid input.
// Results are never clamped into [0, 1].

namespace rpas::rcp {

struct RcpRates {
    double lambda_on = 0.0;   // 1/s, off -> on
    double lambda_off = 0.0;  // 1/s, on -> off
    // When set, lambda_on + lambda_off must equal 1 and then P_A == lambda_on.
    bool unit_sum = false;

    void validate() const;

    /// Unit-sum rates for a target steady-state availability: lambda_on = pa, lambda_off = 1 - pa.
    static RcpRates from_availability(double pa);
};

struct MessageSpec {
    double size_bits = 0.0;
    double bitrate = 0.0;  // bits/s

    void validate() const;
    double tau_msg() const;
};

/// Probability the link is on at time t given it was on at t = 0.
double availability_at(const RcpRates& rates, double t);

/// Long-run on fraction lambda_on / (lambda_on + lambda_off).
double steady_state_availability(const RcpRates& rates);

/// Probability an on link stays on for at least tau: exp(-lambda_off * tau).
double continuity(const RcpRates& rates, double tau);

/// P_A * exp(-(1 - P_A) * (tau_msg + epsilon)).
double communicability(double availability, double tau_msg, double epsilon);
double communicability(double availability, const MessageSpec& msg, double epsilon);

/// Communicability evaluated from its integral-ratio definition by adaptive
/// Gauss-Kronrod quadrature over the density of the time since the link last
/// became available, f(tau) = (1 - P_A) exp(-(1 - P_A) tau). Independent of the
/// closed form; used as a cross-check.
double communicability_numeric(double availability, double tau_msg, double epsilon);

/// Transmission time of a message: size_bits / bitrate.
double message_duration(double size_bits, double bitrate);

}  // namespace rpas::rcp
