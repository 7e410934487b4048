#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "ks.hpp"
#include "rpas/channel.hpp"

using namespace rpas;
using namespace rpas::channel;

using rpas::testing::ks_exponential;

TEST(Schedule, FullAvailabilityIsOneInterval) {
    const LinkSchedule s = sample_link_schedule(1.0, 100.0, 7);
    ASSERT_EQ(s.intervals().size(), 1u);
    EXPECT_EQ(s.intervals()[0].state, LinkState::On);
    EXPECT_GE(s.intervals()[0].duration, 100.0);
    EXPECT_DOUBLE_EQ(s.on_fraction(), 1.0);
}

TEST(Schedule, RejectsBadInputs) {
    EXPECT_THROW(sample_link_schedule(0.0, 10.0, 1), std::domain_error);
    EXPECT_THROW(sample_link_schedule(1.1, 10.0, 1), std::domain_error);
    EXPECT_THROW(sample_link_schedule(0.5, 0.0, 1), std::domain_error);
}

TEST(Schedule, DeterministicPerSeed) {
    const auto a = sample_link_schedule(0.7, 500.0, 99);
    const auto b = sample_link_schedule(0.7, 500.0, 99);
    const auto c = sample_link_schedule(0.7, 500.0, 100);
    ASSERT_EQ(a.intervals().size(), b.intervals().size());
    for (std::size_t i = 0; i < a.intervals().size(); ++i) {
        EXPECT_EQ(a.intervals()[i].duration, b.intervals()[i].duration);
        EXPECT_EQ(a.intervals()[i].state, b.intervals()[i].state);
    }
    EXPECT_NE(a.intervals()[0].duration, c.intervals()[0].duration);
}

TEST(Schedule, AlternatesAndStartsOn) {
    const auto s = sample_link_schedule(0.6, 1000.0, 3);
    EXPECT_EQ(s.intervals().front().state, LinkState::On);
    for (std::size_t i = 1; i < s.intervals().size(); ++i) {
        EXPECT_NE(s.intervals()[i].state, s.intervals()[i - 1].state);
        EXPECT_GT(s.intervals()[i].duration, 0.0);
    }
}

TEST(Schedule, LongRunOnFraction) {
    const auto s = sample_link_schedule(0.8, 1e5, 42);
    EXPECT_NEAR(s.on_fraction(), 0.8, 0.01);
}

TEST(Schedule, OnIntervalsAreExponentialKs) {
    // Collect >= 1e5 on sojourns at P_A = 0.8 (rate 0.2).
    std::vector<double> on;
    std::uint64_t seed = 1;
    while (on.size() < 100000) {
        const auto s = sample_link_schedule(0.8, 1e5, seed++);
        for (std::size_t i = 0; i + 1 < s.intervals().size(); ++i) {  // last one is truncated by the horizon
            if (s.intervals()[i].state == LinkState::On) {
                on.push_back(s.intervals()[i].duration);
            }
        }
    }
    const auto ks = ks_exponential(on, 0.2);
    EXPECT_GT(ks.p_value, 0.01) << "D=" << ks.d;
}

TEST(StateAt, EdgesBelongToLaterInterval) {
    const LinkSchedule s({{LinkState::On, 5.0}, {LinkState::Off, 3.0}, {LinkState::On, 10.0}}, 15.0, 0);
    EXPECT_EQ(s.state_at(0.0), LinkState::On);
    EXPECT_EQ(s.state_at(4.999), LinkState::On);
    EXPECT_EQ(s.state_at(5.0), LinkState::Off);
    EXPECT_EQ(s.state_at(6.0), LinkState::Off);
    EXPECT_EQ(s.state_at(8.0), LinkState::On);
    EXPECT_EQ(s.state_at(15.0), LinkState::On);
    EXPECT_THROW(s.state_at(-0.1), std::domain_error);
    EXPECT_THROW(s.state_at(15.1), std::domain_error);
}

TEST(Schedule, ConstructorValidates) {
    EXPECT_THROW(LinkSchedule({{LinkState::Off, 5.0}}, 5.0, 0), std::domain_error);
    EXPECT_THROW(LinkSchedule({{LinkState::On, 5.0}, {LinkState::On, 5.0}}, 10.0, 0), std::domain_error);
    EXPECT_THROW(LinkSchedule({{LinkState::On, 5.0}}, 6.0, 0), std::domain_error);
}

TEST(Mask, MatchesStateAt) {
    const auto s = sample_link_schedule(0.7, 200.0, 5);
    const double dt = 1e-3;
    const auto mask = make_mask(s, dt, 200000);
    for (std::size_t k = 0; k < mask.size(); k += 7) {
        ASSERT_EQ(mask[k], static_cast<std::uint8_t>(s.state_at(static_cast<double>(k) * dt))) << k;
    }
}

TEST(Mask, EdgeCases) {
    const auto full = make_mask(sample_link_schedule(1.0, 10.0, 1), 1e-3, 10000);
    EXPECT_TRUE(std::all_of(full.begin(), full.end(), [](auto x) { return x == 1; }));
    EXPECT_TRUE(make_mask(sample_link_schedule(0.5, 10.0, 1), 1e-3, 0).empty());
    EXPECT_THROW(make_mask(sample_link_schedule(0.5, 10.0, 1), 1e-3, 20000), std::domain_error);
}

TEST(Mask, MeanTracksAvailability) {
    const auto mask = make_mask(sample_link_schedule(0.7, 2e4, 11), 0.1, 200000);
    double mean = 0.0;
    for (auto x : mask) {
        mean += x;
    }
    EXPECT_NEAR(mean / static_cast<double>(mask.size()), 0.7, 0.02);
}

TEST(Mask, CsvDump) {
    std::ostringstream os;
    write_mask_csv(os, {1, 1, 0}, 1e-3);
    EXPECT_EQ(os.str(), "step,time_s,link_state\n0,0,1\n1,0.001,1\n2,0.002,0\n");
}

TEST(Delay, Depth) {
    EXPECT_EQ(delay_depth(0.0, 1e-3), 0u);
    EXPECT_EQ(delay_depth(0.05, 1e-3), 100u);
    for (int k = 0; k <= 100; ++k) {
        EXPECT_EQ(delay_depth(k / 1000.0, 1e-3), static_cast<std::size_t>(2 * k));
    }
}

TEST(Delay, IdentityAtZeroDepth) {
    DelayLine<CommandVector> line(0, CommandVector{});
    const CommandVector c{0.5, 0.1, -0.2, 0.3};
    EXPECT_EQ(delayed(line, c), c);
}

TEST(Delay, ExactShiftWithWarmup) {
    const CommandVector fill{0.2, -0.03, 0.0, 0.0};
    DelayLine<CommandVector> line(delay_depth(0.05, 1e-3), fill);
    std::vector<CommandVector> in;
    for (int k = 0; k < 500; ++k) {
        in.push_back({k * 1e-3, std::sin(k * 0.1), 0.0, -1.0 * k});
    }
    for (std::size_t k = 0; k < in.size(); ++k) {
        const CommandVector out = delayed(line, in[k]);
        if (k < 100) {
            EXPECT_EQ(out, fill);
        } else {
            EXPECT_EQ(out, in[k - 100]);
        }
    }
}

TEST(LinkPolicy, Selection) {
    const CommandVector remote{0.5, 0.1, 0.2, 0.3};
    const CommandVector safe{0.4, -0.1, 0.0, 0.0};
    EXPECT_EQ(apply_link_policy(LinkState::On, remote, safe, {}), remote);
    EXPECT_EQ(apply_link_policy(LinkState::Off, remote, safe, {}), safe);
    EXPECT_EQ(apply_link_policy(LinkState::Off, remote, safe, {LossMode::ZeroControl, ThrottleOnLoss::HoldLast}),
              CommandVector{});
    EXPECT_EQ(apply_link_policy(LinkState::On, remote, safe, {LossMode::ZeroControl, ThrottleOnLoss::Zero}), remote);
}

TEST(LinkPolicy, NamesRoundTrip) {
    for (auto m : {LossMode::FailsafeReference, LossMode::ZeroControl}) {
        EXPECT_EQ(parse_loss_mode(to_string(m)), m);
    }
    for (auto t : {ThrottleOnLoss::HoldLast, ThrottleOnLoss::Zero}) {
        EXPECT_EQ(parse_throttle_on_loss(to_string(t)), t);
    }
    EXPECT_THROW(parse_loss_mode("bogus"), std::invalid_argument);
}
