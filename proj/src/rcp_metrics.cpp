#include "rpas/rcp_metrics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

#include "rpas/common.hpp"

namespace rpas::rcp {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::domain_error(what);
    }
}

void require_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
    }
}

}  // namespace

void RcpRates::validate() const {
    require(std::isfinite(lambda_on) && std::isfinite(lambda_off), "rates must be finite");
    require(lambda_on >= 0.0 && lambda_off >= 0.0, "rates must be non-negative");
    require(lambda_on + lambda_off > 0.0, "lambda_on and lambda_off cannot both be zero");
    if (unit_sum) {
        require(std::abs(lambda_on + lambda_off - 1.0) <= 1e-12,
                "unit-sum convention requires lambda_on + lambda_off == 1");
    }
}

RcpRates RcpRates::from_availability(double pa) {
    require_probability(pa, "availability");
    return RcpRates{pa, 1.0 - pa, true};
}

void MessageSpec::validate() const {
    require(std::isfinite(size_bits) && size_bits > 0.0, "message size must be positive");
    require(std::isfinite(bitrate) && bitrate > 0.0, "bitrate must be positive");
}

double MessageSpec::tau_msg() const {
    return message_duration(size_bits, bitrate);
}

double availability_at(const RcpRates& rates, double t) {
    rates.validate();
    require(std::isfinite(t) && t >= 0.0, "time must be non-negative");
    const double total = rates.lambda_on + rates.lambda_off;
    const double steady = rates.lambda_on / total;
    return (1.0 - steady) * std::exp(-total * t) + steady;
}

double steady_state_availability(const RcpRates& rates) {
    rates.validate();
    return rates.lambda_on / (rates.lambda_on + rates.lambda_off);
}

double continuity(const RcpRates& rates, double tau) {
    rates.validate();
    require(std::isfinite(tau) && tau >= 0.0, "duration must be non-negative");
    return std::exp(-rates.lambda_off * tau);
}

double communicability(double availability, double tau_msg, double epsilon) {
    require_probability(availability, "availability");
    require(std::isfinite(tau_msg) && tau_msg >= 0.0, "message duration must be non-negative");
    require(std::isfinite(epsilon) && epsilon >= 0.0, "latency must be non-negative");
    return availability * std::exp(-(1.0 - availability) * (tau_msg + epsilon));
}

double communicability(double availability, const MessageSpec& msg, double epsilon) {
    return communicability(availability, msg.tau_msg(), epsilon);
}

double communicability_numeric(double availability, double tau_msg, double epsilon) {
    require_probability(availability, "availability");
    require(std::isfinite(tau_msg) && tau_msg >= 0.0, "message duration must be non-negative");
    require(std::isfinite(epsilon) && epsilon >= 0.0, "latency must be non-negative");

    const double rate = 1.0 - availability;
    if (rate == 0.0) {
        // Degenerate density: the link never drops, the ratio is 1.
        return availability;
    }
    const double lead = tau_msg + epsilon;
    // Tail mass beyond the horizon is exp(-50) relative to the unit total.
    const double horizon = 50.0 / rate;
    auto density = [rate](double tau) { return rate * std::exp(-rate * tau); };

    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    constexpr unsigned kMaxDepth = 30;
    constexpr double kTol = 1e-14;
    double err_num = 0.0;
    double err_den = 0.0;
    double numerator = 0.0;
    if (lead < horizon) {
        numerator = Quad::integrate([&](double tau) { return (tau - lead) * density(tau); }, lead,
                                    horizon, kMaxDepth, kTol, &err_num);
    }
    const double denominator =
        Quad::integrate([&](double tau) { return tau * density(tau); }, 0.0, horizon, kMaxDepth,
                        kTol, &err_den);
    if (!std::isfinite(numerator) || !std::isfinite(denominator) || denominator <= 0.0 ||
        err_num > 1e-10 * denominator || err_den > 1e-10 * denominator) {
        throw NumericError("communicability quadrature did not converge");
    }
    return availability * numerator / denominator;
}

double message_duration(double size_bits, double bitrate) {
    MessageSpec{size_bits, bitrate}.validate();
    return size_bits / bitrate;
}

}  // namespace rpas::rcp
