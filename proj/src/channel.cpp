#include "rpas/channel.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "rpas/rng.hpp"

namespace rpas::channel {

LinkSchedule::LinkSchedule(std::vector<LinkInterval> intervals, double horizon, std::uint64_t seed)
    : intervals_(std::move(intervals)), horizon_(horizon), seed_(seed) {
    if (!(horizon_ > 0.0)) {
        throw std::domain_error("schedule horizon must be positive");
    }
    if (intervals_.empty() || intervals_.front().state != LinkState::On) {
        throw std::domain_error("schedule must start in the on state");
    }
    starts_.reserve(intervals_.size());
    double t = 0.0;
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        if (!(intervals_[i].duration > 0.0)) {
            throw std::domain_error("schedule interval durations must be positive");
        }
        if (i > 0 && intervals_[i].state == intervals_[i - 1].state) {
            throw std::domain_error("schedule states must alternate");
        }
        starts_.push_back(t);
        t += intervals_[i].duration;
    }
    if (t < horizon_) {
        throw std::domain_error("schedule intervals do not cover the horizon");
    }
}

LinkState LinkSchedule::state_at(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
        throw std::domain_error("time " + std::to_string(t) + " outside schedule horizon");
    }
    auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
    return intervals_[static_cast<std::size_t>(it - starts_.begin()) - 1].state;
}

double LinkSchedule::on_fraction() const {
    double on = 0.0;
    for (std::size_t i = 0; i < intervals_.size() && starts_[i] < horizon_; ++i) {
        if (intervals_[i].state == LinkState::On) {
            on += std::min(intervals_[i].duration, horizon_ - starts_[i]);
        }
    }
    return on / horizon_;
}

LinkSchedule sample_link_schedule(const rcp::RcpRates& rates, double horizon, std::uint64_t seed) {
    rates.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::domain_error("schedule horizon must be positive and finite");
    }
    if (rates.lambda_on == 0.0) {
        throw std::domain_error("lambda_on = 0 leaves the link off forever after the first drop");
    }
    std::vector<LinkInterval> intervals;
    if (rates.lambda_off == 0.0) {
        intervals.push_back({LinkState::On, horizon});
        return LinkSchedule(std::move(intervals), horizon, seed);
    }
    Rng rng(seed);
    double t = 0.0;
    LinkState state = LinkState::On;
    while (t < horizon) {
        const double rate = state == LinkState::On ? rates.lambda_off : rates.lambda_on;
        double d = rng.exponential(rate);
        if (!(d > 0.0)) {
            d = std::numeric_limits<double>::min();
        }
        intervals.push_back({state, d});
        t += d;
        state = state == LinkState::On ? LinkState::Off : LinkState::On;
    }
    return LinkSchedule(std::move(intervals), horizon, seed);
}

LinkSchedule sample_link_schedule(double pa, double horizon, std::uint64_t seed) {
    if (!(pa > 0.0 && pa <= 1.0)) {
        throw std::domain_error("availability must lie in (0, 1]");
    }
    return sample_link_schedule(rcp::RcpRates::from_availability(pa), horizon, seed);
}

std::vector<std::uint8_t> make_mask(const LinkSchedule& schedule, double dt, std::size_t n_steps) {
    if (!(dt > 0.0)) {
        throw std::domain_error("mask step must be positive");
    }
    if (n_steps == 0) {
        return {};
    }
    if (static_cast<double>(n_steps) * dt > schedule.horizon() * (1.0 + 1e-12)) {
        throw std::domain_error("schedule horizon shorter than requested mask");
    }
    std::vector<std::uint8_t> mask(n_steps);
    const auto& iv = schedule.intervals();
    std::size_t idx = 0;
    double end = iv[0].duration;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        // Same edge rule as state_at: t == end belongs to the next interval.
        while (t >= end && idx + 1 < iv.size()) {
            ++idx;
            end += iv[idx].duration;
        }
        mask[k] = static_cast<std::uint8_t>(iv[idx].state);
    }
    return mask;
}

void write_mask_csv(std::ostream& out, const std::vector<std::uint8_t>& mask, double dt) {
    out << "step,time_s,link_state\n";
    // k / (1/dt) prints 0.003 where k * dt would print 0.0030000000000000001.
    const double inv = std::round(1.0 / dt);
    const bool exact = std::abs(inv * dt - 1.0) < 1e-12;
    char buf[64];
    for (std::size_t k = 0; k < mask.size(); ++k) {
        const double t = exact ? static_cast<double>(k) / inv : static_cast<double>(k) * dt;
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, t);
        (void)ec;
        out << k << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf)) << ','
            << static_cast<int>(mask[k]) << '\n';
    }
}

std::size_t delay_depth(double epsilon, double dt) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw std::domain_error("latency must be non-negative");
    }
    if (!(dt > 0.0)) {
        throw std::domain_error("time step must be positive");
    }
    return static_cast<std::size_t>(std::llround(2.0 * epsilon / dt));
}

std::string_view to_string(LossMode mode) {
    return mode == LossMode::FailsafeReference ? "failsafe-reference" : "zero-control";
}

std::string_view to_string(ThrottleOnLoss t) {
    return t == ThrottleOnLoss::HoldLast ? "hold-last" : "zero";
}

LossMode parse_loss_mode(std::string_view s) {
    if (s == "failsafe-reference") {
        return LossMode::FailsafeReference;
    }
    if (s == "zero-control") {
        return LossMode::ZeroControl;
    }
    throw std::invalid_argument("unknown loss policy '" + std::string(s) + "'");
}

ThrottleOnLoss parse_throttle_on_loss(std::string_view s) {
    if (s == "hold-last") {
        return ThrottleOnLoss::HoldLast;
    }
    if (s == "zero") {
        return ThrottleOnLoss::Zero;
    }
    throw std::invalid_argument("unknown throttle-on-loss setting '" + std::string(s) + "'");
}

CommandVector apply_link_policy(LinkState x, const CommandVector& remote_delayed,
                                const CommandVector& failsafe, const LossPolicy& policy) {
    if (x == LinkState::On) {
        return remote_delayed;
    }
    if (policy.mode == LossMode::ZeroControl) {
        return CommandVector{};
    }
    return failsafe;
}

}  // namespace rpas::channel
