#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rpas/montecarlo.hpp"

using namespace rpas;
using namespace rpas::mc;

namespace {

const MissionSetup& setup2() {
    static const MissionSetup s =
        make_setup(load_scenario(RPAS_SCENARIO_DIR "/scenario2.json"), load_aircraft_params(RPAS_DATA_DIR "/f16.json"),
                   control::load_controller_config(RPAS_DATA_DIR "/controller.json"));
    return s;
}

RunRecord rec(double pa, double eps, bool ok, double t = 50.0) {
    RunRecord r;
    r.pa = pa;
    r.epsilon = eps;
    r.success = ok;
    if (ok) {
        r.completion_time = t;
    } else {
        r.failure_mode = FailureMode::Timeout;
    }
    return r;
}

std::string records_csv(const std::vector<RunRecord>& r) {
    std::ostringstream os;
    write_records_csv(os, r);
    return os.str();
}

}  // namespace

TEST(Sampling, GridSnappedAndInRange) {
    SweepConfig cfg;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const auto s = sample_run(cfg, i);
        EXPECT_GE(s.pa, 0.5);
        EXPECT_LE(s.pa, 1.0);
        EXPECT_GE(s.epsilon, 0.0);
        EXPECT_LE(s.epsilon, 0.1);
        EXPECT_NEAR(s.pa * 1000, std::round(s.pa * 1000), 1e-9);
        EXPECT_NEAR(s.epsilon * 1000, std::round(s.epsilon * 1000), 1e-9);
        EXPECT_EQ(s.seed, sample_run(cfg, i).seed);
    }
    EXPECT_NE(sample_run(cfg, 0).seed, sample_run(cfg, 1).seed);
}

TEST(Sampling, ConfigValidation) {
    SweepConfig c;
    c.n_samples = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SweepConfig{};
    c.pa_lo = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SweepConfig{};
    c.eps_hi = -0.1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Sweep, WorkerCountDoesNotChangeRecords) {
    SweepConfig cfg;
    cfg.n_samples = 100;
    cfg.base_seed = 7;
    cfg.workers = 1;
    const auto a = run_sweep(setup2(), cfg);
    cfg.workers = 8;
    std::size_t last = 0;
    const auto b = run_sweep(setup2(), cfg, [&](std::size_t done, std::size_t) { last = std::max(last, done); });
    EXPECT_EQ(records_csv(a), records_csv(b));
    EXPECT_EQ(last, 100u);
    ASSERT_EQ(a.size(), 100u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].run_id, i);
    }
}

TEST(Sweep, ParallelForRethrows) {
    EXPECT_THROW(parallel_for(50, 4,
                              [](std::size_t i) {
                                  if (i == 17) {
                                      throw std::runtime_error("boom");
                                  }
                              }),
                 std::runtime_error);
}

TEST(RecordsCsv, RoundTripAndHeader) {
    std::vector<RunRecord> r{rec(0.9, 0.01, true, 42.5), rec(0.6, 0.099, false)};
    r[1].run_id = 1;
    r[1].waypoints_reached = 2;
    const std::string text = records_csv(r);
    EXPECT_EQ(text.substr(0, text.find('\n')), kRecordsHeader);
    EXPECT_EQ(std::string(kRecordsHeader),
              "run_id,p_a,epsilon,seed,success,completion_time_s,failure_mode,waypoints_reached");
    std::istringstream in(text);
    EXPECT_EQ(read_records_csv(in), r);
    std::istringstream bad("nope\n1,2\n");
    EXPECT_THROW(read_records_csv(bad), ConfigError);
    std::istringstream inconsistent(std::string(kRecordsHeader) + "\n0,0.9,0.01,1,1,,timeout,0\n");
    EXPECT_THROW(read_records_csv(inconsistent), ConfigError);
}

TEST(Bins, EdgeRule) {
    BinSpec b{0.0, 1.0, 4};
    EXPECT_EQ(b.index(0.0), 0u);
    EXPECT_EQ(b.index(0.25), 1u);  // interior edge goes up
    EXPECT_EQ(b.index(1.0), 3u);   // last bin closed
    EXPECT_FALSE(b.index(1.1).has_value());
    EXPECT_FALSE(b.index(-0.1).has_value());
    BinSpec pa{0.5, 1.0, 10};
    EXPECT_EQ(pa.index(0.55), 1u);  // 0.55 is not exact in binary
}

TEST(Surface, RatesAndAbsentTimes) {
    BinSpec pa{0.5, 1.0, 2}, eps{0.0, 0.1, 2};
    std::vector<RunRecord> r{rec(0.9, 0.01, true), rec(0.9, 0.01, true), rec(0.9, 0.02, true),
                             rec(0.9, 0.03, false), rec(0.6, 0.09, false), rec(0.6, 0.01, true, 42.0)};
    const auto g = success_surface(r, pa, eps);
    EXPECT_DOUBLE_EQ(*g.cell(1, 0).success_rate(), 0.75);
    EXPECT_DOUBLE_EQ(*g.cell(0, 0).mean_completion_time(), 42.0);
    EXPECT_FALSE(g.cell(0, 1).mean_completion_time().has_value());
    EXPECT_FALSE(g.cell(1, 1).success_rate().has_value());
    EXPECT_EQ(g.total(), r.size());

    std::ostringstream os;
    write_surface_csv(os, g);
    EXPECT_NE(os.str().find("0.75,50\n"), std::string::npos);
    EXPECT_NE(os.str().find("0.5,0.75,0.05,0.1,1,0,\n"), std::string::npos);
}

TEST(Surface, AllSuccessAndShuffleInvariance) {
    SweepConfig cfg;
    std::vector<RunRecord> r;
    for (std::uint64_t i = 0; i < 500; ++i) {
        const auto s = sample_run(cfg, i);
        r.push_back(rec(s.pa, s.epsilon, i % 3 != 0, static_cast<double>(i % 7)));
    }
    BinSpec pa{0.5, 1.0, 5}, eps{0.0, 0.1, 5};
    const auto a = success_surface(r, pa, eps);
    auto shuffled = r;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(3));
    EXPECT_EQ(a, success_surface(shuffled, pa, eps));

    // Merge in two different groupings.
    EnvelopeGrid x(pa, eps), y(pa, eps), z(pa, eps);
    for (std::size_t i = 0; i < r.size(); ++i) {
        (i % 3 == 0 ? x : i % 3 == 1 ? y : z).add(r[i]);
    }
    EnvelopeGrid left = x;
    left.merge(y);
    left.merge(z);
    EnvelopeGrid right = z;
    right.merge(y);
    right.merge(x);
    EXPECT_EQ(left, right);
    EXPECT_EQ(left, a);

    std::vector<RunRecord> ok;
    for (auto q : r) {
        q.success = true;
        q.failure_mode.reset();
        q.completion_time = 1.0;
        ok.push_back(q);
    }
    const auto all = success_surface(ok, pa, eps);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            if (all.cell(i, j).count > 0) {
                EXPECT_EQ(*all.cell(i, j).success_rate(), 1.0);
            }
        }
    }
    EnvelopeGrid g(pa, eps);
    EXPECT_THROW(g.add(rec(0.2, 0.05, true)), std::out_of_range);
}

TEST(Curves, MappingAndPartition) {
    const rcp::MessageSpec msg{448, 2400};
    const std::vector<double> edges{0.0, 0.02, 0.04, 0.06, 0.08, 0.1};
    EXPECT_EQ(eps_interval(edges, 0.0), 0u);
    EXPECT_EQ(eps_interval(edges, 0.02), 0u);
    EXPECT_EQ(eps_interval(edges, 0.021), 1u);
    EXPECT_EQ(eps_interval(edges, 0.1), 4u);
    EXPECT_FALSE(eps_interval(edges, 0.11).has_value());

    std::vector<RunRecord> r{rec(1.0, 0.09, true), rec(0.95, 0.05, true)};
    const BinSpec bins{0.0, 1.0, 10000};
    const auto pts = communicability_curves(r, msg, edges, bins);
    ASSERT_EQ(pts.size(), 2u);
    // P_A = 1 maps to the top bin whatever the latency.
    EXPECT_EQ(pts[1].eps_lo, 0.08);
    EXPECT_DOUBLE_EQ(pts[1].p_comm_hi, 1.0);
    EXPECT_NEAR(0.5 * (pts[0].p_comm_lo + pts[0].p_comm_hi), 0.9388, 1e-4);

    SweepConfig cfg;
    std::vector<RunRecord> many;
    for (std::uint64_t i = 0; i < 3000; ++i) {
        const auto s = sample_run(cfg, i);
        many.push_back(rec(s.pa, s.epsilon, i % 2 == 0));
    }
    std::uint64_t total = 0;
    for (const auto& p : communicability_curves(many, msg, edges, BinSpec{0.0, 1.0, 20})) {
        total += p.cell.count;
    }
    EXPECT_EQ(total, many.size());
}

TEST(Blockage, BandDetector) {
    const std::vector<double> eps{0.0, 0.001, 0.002, 0.003, 0.004, 0.005};
    EXPECT_TRUE(detect_bands({true, true, true, true, true, true}, eps).empty());
    const auto one = detect_bands({true, false, true, true, true, true}, eps);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].first, 1u);
    EXPECT_EQ(one[0].eps_last, 0.001);
    const auto wide = detect_bands({true, false, false, true, false, true}, eps);
    ASSERT_EQ(wide.size(), 2u);
    EXPECT_EQ(wide[0].last, 2u);
    // A failing tail is a cliff, not a band.
    EXPECT_TRUE(detect_bands({true, true, false, false, false, false}, eps).empty());
    EXPECT_TRUE(detect_bands({false, true, true, true, true, true}, eps).empty());
}

TEST(Blockage, SweepReport) {
    const std::vector<double> eps{0.0, 0.01};
    const auto entries = latency_blockage_sweep(setup2(), eps, 2);
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_TRUE(entries[0].record.success);
    std::vector<bool> ok;
    for (const auto& e : entries) {
        ok.push_back(e.record.success);
    }
    std::ostringstream os;
    write_blockage_csv(os, entries, detect_bands(ok, eps));
    EXPECT_EQ(os.str().substr(0, 33), "epsilon,success,completion_time_s");
    EXPECT_NE(os.str().find("# bands: "), std::string::npos);
}
