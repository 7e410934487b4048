#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rpas/rcp_metrics.hpp"
#include "rpas/types.hpp"

namespace rpas::channel {

enum class LinkState : std::uint8_t { Off = 0, On = 1 };

struct LinkInterval {
    LinkState state = LinkState::On;
    double duration = 0.0;  // s, > 0
};

/// Alternating on/off sojourns sampled from the two-state chain. Always starts on.
class LinkSchedule {
public:
    LinkSchedule(std::vector<LinkInterval> intervals, double horizon, std::uint64_t seed);

    const std::vector<LinkInterval>& intervals() const { return intervals_; }
    double horizon() const { return horizon_; }
    std::uint64_t seed() const { return seed_; }

    /// State at time t in [0, horizon]. A t on an interval edge belongs to the later interval.
    LinkState state_at(double t) const;

    /// Fraction of [0, horizon] spent on.
    double on_fraction() const;

private:
    std::vector<LinkInterval> intervals_;
    std::vector<double> starts_;  // start time of each interval
    double horizon_;
    std::uint64_t seed_;
};

/// Samples a schedule under the unit-sum convention: on sojourns ~ Exp(1 - pa),
/// off sojourns ~ Exp(pa). pa = 1 gives a single on interval spanning the horizon.
LinkSchedule sample_link_schedule(double pa, double horizon, std::uint64_t seed);

/// Same with general rates (on sojourns ~ Exp(lambda_off), off ~ Exp(lambda_on)).
LinkSchedule sample_link_schedule(const rcp::RcpRates& rates, double horizon, std::uint64_t seed);

/// mask[k] = state_at(k * dt), k in [0, n_steps).
std::vector<std::uint8_t> make_mask(const LinkSchedule& schedule, double dt, std::size_t n_steps);

/// Writes the mask as CSV (step, time_s, link_state).
void write_mask_csv(std::ostream& out, const std::vector<std::uint8_t>& mask, double dt);

/// Number of whole steps in a round trip of 2 * epsilon at step dt.
std::size_t delay_depth(double epsilon, double dt);

/// Fixed-depth FIFO: push(x_k) returns x_{k - depth}, or the fill value during warm-up.
template <typename T>
class DelayLine {
public:
    DelayLine(std::size_t depth, const T& fill) : buffer_(depth, fill) {}

    std::size_t depth() const { return buffer_.size(); }

    T push(const T& now) {
        if (buffer_.empty()) {
            return now;
        }
        T out = buffer_[head_];
        buffer_[head_] = now;
        head_ = (head_ + 1 == buffer_.size()) ? 0 : head_ + 1;
        return out;
    }

private:
    std::vector<T> buffer_;
    std::size_t head_ = 0;
};

/// Command delay as a free function over a command-vector line.
inline CommandVector delayed(DelayLine<CommandVector>& line, const CommandVector& cmd_now) {
    return line.push(cmd_now);
}

enum class LossMode { FailsafeReference, ZeroControl };
enum class ThrottleOnLoss { HoldLast, Zero };

struct LossPolicy {
    LossMode mode = LossMode::FailsafeReference;
    ThrottleOnLoss throttle = ThrottleOnLoss::HoldLast;
};

std::string_view to_string(LossMode mode);
std::string_view to_string(ThrottleOnLoss t);
LossMode parse_loss_mode(std::string_view s);
ThrottleOnLoss parse_throttle_on_loss(std::string_view s);

/// Command actually applied to the aircraft for the given link state.
///   On  -> the delayed remote command.
///   Off -> failsafe-reference: the onboard fallback command;
///          zero-control: the all-zero command (u(t) = X(t) u(t - 2 eps)).
CommandVector apply_link_policy(LinkState x, const CommandVector& remote_delayed,
                                const CommandVector& failsafe, const LossPolicy& policy);

}  // namespace rpas::channel
