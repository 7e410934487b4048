#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "rpas/mission.hpp"

using namespace rpas;

namespace {

const MissionSetup& setup(int n) {
    static const AircraftParams p = load_aircraft_params(RPAS_DATA_DIR "/f16.json");
    static const control::ControllerConfig c = control::load_controller_config(RPAS_DATA_DIR "/controller.json");
    static const MissionSetup s1 = make_setup(load_scenario(RPAS_SCENARIO_DIR "/scenario1.json"), p, c);
    static const MissionSetup s2 = make_setup(load_scenario(RPAS_SCENARIO_DIR "/scenario2.json"), p, c);
    return n == 1 ? s1 : s2;
}

std::string csv(const std::vector<TrajectoryRow>& rows) {
    std::ostringstream os;
    write_trajectory_csv(os, rows);
    return os.str();
}

}  // namespace

TEST(Mission, Scenario2Baseline) {
    const auto out = run_mission(setup(2), RunConfig{});
    ASSERT_TRUE(out.record.success);
    ASSERT_TRUE(out.record.completion_time.has_value());
    EXPECT_LT(*out.record.completion_time, setup(2).scenario.time_limit);
    EXPECT_FALSE(out.record.failure_mode.has_value());
    EXPECT_EQ(out.record.waypoints_reached, setup(2).scenario.waypoints.size());
}

TEST(Mission, Scenario1Baseline) {
    const auto out = run_mission(setup(1), RunConfig{}, true);
    ASSERT_TRUE(out.record.success);
    for (const auto& row : out.trajectory) {
        EXPECT_GE(row.state.altitude(), 3800.0);
        EXPECT_LE(row.state.altitude(), 4600.0);
    }
    // Waypoint index never decreases.
    for (std::size_t k = 1; k < out.trajectory.size(); ++k) {
        EXPECT_GE(out.trajectory[k].waypoint_index, out.trajectory[k - 1].waypoint_index);
    }
}

TEST(Mission, IdentityChannelIsBitIdentical) {
    RunConfig with;
    RunConfig bypass;
    bypass.bypass_channel = true;
    const auto a = run_mission(setup(2), with, true);
    const auto b = run_mission(setup(2), bypass, true);
    EXPECT_EQ(a.record, b.record);
    EXPECT_EQ(csv(a.trajectory), csv(b.trajectory));
}

TEST(Mission, TinyTimeLimitTimesOut) {
    MissionSetup s = setup(2);
    s.scenario.time_limit = 0.001;
    const auto out = run_mission(s, RunConfig{});
    EXPECT_FALSE(out.record.success);
    EXPECT_EQ(out.record.failure_mode, FailureMode::Timeout);
    EXPECT_EQ(out.record.waypoints_reached, 0u);
}

TEST(Mission, TrajectoryRowCount) {
    MissionSetup s = setup(2);
    s.scenario.time_limit = 1.0;
    const auto out = run_mission(s, RunConfig{}, true);
    EXPECT_EQ(out.record.failure_mode, FailureMode::Timeout);
    EXPECT_EQ(out.trajectory.size(), 1001u);
    EXPECT_DOUBLE_EQ(out.trajectory.back().time, 1.0);
}

TEST(Mission, Deterministic) {
    RunConfig r;
    r.pa = 0.83;
    r.epsilon = 0.037;
    r.seed = 12345;
    const auto a = run_mission(setup(1), r, true);
    const auto b = run_mission(setup(1), r, true);
    EXPECT_EQ(a.record, b.record);
    EXPECT_EQ(csv(a.trajectory), csv(b.trajectory));
}

TEST(Mission, LinkStateMeanTracksAvailability) {
    MissionSetup s = setup(2);
    s.scenario.waypoints = {{19000, -4500, -4000}};
    s.scenario.time_limit = 30.0;
    RunConfig r;
    r.pa = 0.7;
    r.seed = 9;
    const auto out = run_mission(s, r, true);
    double mean = 0;
    for (const auto& row : out.trajectory) {
        mean += row.link_state;
    }
    mean /= static_cast<double>(out.trajectory.size());
    EXPECT_GT(mean, 0.4);
    EXPECT_LT(mean, 1.0);
}

TEST(Mission, FailsafeReferencesAfterPermanentLoss) {
    RunConfig r;
    r.force_loss_after = 10.0;
    const auto out = run_mission(setup(2), r, true);
    bool seen = false;
    for (const auto& row : out.trajectory) {
        if (row.time >= 10.0) {
            seen = true;
            EXPECT_EQ(row.link_state, 0);
            EXPECT_EQ(row.reference.nz, 0.0);
            EXPECT_EQ(row.reference.ps, 0.0);
            EXPECT_EQ(row.reference.nyr, 0.0);
        }
    }
    EXPECT_TRUE(seen);
    EXPECT_FALSE(out.record.success);
}

TEST(Mission, ZeroControlPolicyAppliesZeroCommand) {
    RunConfig r;
    r.force_loss_after = 5.0;
    r.policy.mode = channel::LossMode::ZeroControl;
    MissionSetup s = setup(2);
    s.scenario.time_limit = 6.0;
    const auto out = run_mission(s, r, true);
    for (const auto& row : out.trajectory) {
        if (row.time >= 5.0) {
            EXPECT_EQ(row.command, CommandVector{});
        }
    }
}

TEST(Mission, RecordInvariantsUnderLoss) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        RunConfig r;
        r.pa = 0.55;
        r.epsilon = 0.09;
        r.seed = seed;
        const auto rec = run_mission(setup(1), r).record;
        EXPECT_NE(rec.success, rec.failure_mode.has_value());
        EXPECT_EQ(rec.success, rec.completion_time.has_value());
    }
}

TEST(Mission, RunConfigValidation) {
    RunConfig r;
    r.epsilon = -1.0;
    EXPECT_THROW(r.validate(), ConfigError);
    r = RunConfig{};
    r.pa = 1.2;
    EXPECT_THROW(r.validate(), ConfigError);
    r.pa = 0.0;
    EXPECT_THROW(r.validate(), ConfigError);
}

TEST(Scenario, ParseErrors) {
    EXPECT_THROW(parse_scenario("{}"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema":"rpas-scenario/1","waypoints":[]})"), ConfigError);
    EXPECT_THROW(parse_scenario(
                     R"({"schema":"rpas-scenario/1","name":"x","waypoints":[{"north_ft":99999,"east_ft":0,"altitude_ft":4000}]})"),
                 ConfigError);
    EXPECT_THROW(load_scenario("/nonexistent.json"), ConfigError);
}

TEST(Trajectory, CsvHeader) {
    std::ostringstream os;
    write_trajectory_csv(os, {});
    EXPECT_EQ(os.str(),
              "time_s,x_e,y_e,h,Vt,alpha,beta,phi,theta,psi,p,q,r,pow,de,da,dr,dt_cmd,Nz,ps,Nyr,link_state,"
              "waypoint_index\n");
    EXPECT_THROW(export_trajectory("/nonexistent/dir/t.csv", {}), std::runtime_error);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(format_double(std::stod(format_double(1.0 / 3.0))), format_double(1.0 / 3.0));
}
