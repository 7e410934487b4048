#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rpas/montecarlo.hpp"
#include "rpas/rcp_metrics.hpp"

namespace fs = std::filesystem;
using namespace rpas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMissionFailure = 2;

// Relative output paths land under $RPAS_OUTPUT_DIR when it is set.
fs::path output_path(const std::string& p) {
    fs::path path(p);
    const char* dir = std::getenv("RPAS_OUTPUT_DIR");
    if (dir != nullptr && *dir != '\0' && path.is_relative()) {
        fs::create_directories(dir);
        return fs::path(dir) / path;
    }
    return path;
}

// Writes through `fn` to a file, or to stdout when path is empty.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    const fs::path p = output_path(path);
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open output file " + p.string());
    }
    fn(out);
    if (!out) {
        throw ConfigError("write failed for " + p.string());
    }
    std::cerr << "wrote " << p.string() << '\n';
}

std::vector<RunRecord> load_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open records file " + path);
    }
    auto records = mc::read_records_csv(in);
    if (records.empty()) {
        throw ConfigError("records file " + path + " has no rows");
    }
    return records;
}

std::size_t default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string print12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

struct Common {
    std::string aircraft = RPAS_DATA_DIR "/f16.json";
    std::string controller = RPAS_DATA_DIR "/controller.json";
};

MissionSetup load_setup(const Common& c, const std::string& scenario) {
    const ScenarioConfig sc = load_scenario(scenario);
    return make_setup(sc, load_aircraft_params(c.aircraft), control::load_controller_config(c.controller));
}

channel::LossPolicy parse_policy(const std::string& mode, const std::string& throttle) {
    try {
        return {channel::parse_loss_mode(mode), channel::parse_throttle_on_loss(throttle)};
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reliability lab for a remotely piloted fighter: link metrics, closed-loop missions, sweeps."};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--aircraft", common.aircraft, "Aircraft data file")->check(CLI::ExistingFile);
    app.add_option("--controller", common.controller, "Controller config file")->check(CLI::ExistingFile);
    bool show_version = false;
    app.add_flag("--version", show_version, "Print build and data-file version");

    // trim
    auto* trim_cmd = app.add_subcommand("trim", "Solve wings-level trim and print it as CSV");
    double trim_vt = 540.0, trim_alt = 4000.0;
    trim_cmd->add_option("--vt", trim_vt, "True airspeed, ft/s");
    trim_cmd->add_option("--alt", trim_alt, "Altitude, ft");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run one mission; exit 2 if the mission fails");
    std::string sim_scenario, sim_traj, sim_policy = "failsafe-reference", sim_throttle = "hold-last";
    RunConfig sim_run;
    sim->add_option("scenario", sim_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--pa", sim_run.pa, "Link availability in (0, 1]");
    sim->add_option("--eps", sim_run.epsilon, "One-way latency, s");
    sim->add_option("--seed", sim_run.seed, "Channel seed");
    sim->add_option("--loss-policy", sim_policy, "failsafe-reference | zero-control");
    sim->add_option("--throttle-on-loss", sim_throttle, "hold-last | zero");
    sim->add_option("--traj-out", sim_traj, "Trajectory CSV path");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over (P_A, eps); records CSV");
    std::string sw_scenario, sw_out, sw_policy = "failsafe-reference", sw_throttle = "hold-last";
    mc::SweepConfig sw;
    sw.workers = default_workers();
    sweep->add_option("scenario", sw_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--samples", sw.n_samples, "Number of runs");
    sweep->add_option("--workers", sw.workers, "Worker threads");
    sweep->add_option("--seed", sw.base_seed, "Base seed");
    sweep->add_option("--pa-min", sw.pa_lo);
    sweep->add_option("--pa-max", sw.pa_hi);
    sweep->add_option("--eps-min", sw.eps_lo);
    sweep->add_option("--eps-max", sw.eps_hi);
    sweep->add_option("--grid", sw.grid, "Sampling grid step");
    sweep->add_option("--loss-policy", sw_policy);
    sweep->add_option("--throttle-on-loss", sw_throttle);
    sweep->add_option("--out", sw_out, "Output CSV (default stdout)");

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Success-rate and completion-time surface from records");
    std::string agg_in, agg_out;
    mc::BinSpec agg_pa{0.5, 1.0, 10}, agg_eps{0.0, 0.1, 10};
    agg->add_option("records", agg_in, "Records CSV")->required()->check(CLI::ExistingFile);
    agg->add_option("--pa-bins", agg_pa.n);
    agg->add_option("--eps-bins", agg_eps.n);
    agg->add_option("--pa-min", agg_pa.lo);
    agg->add_option("--pa-max", agg_pa.hi);
    agg->add_option("--eps-min", agg_eps.lo);
    agg->add_option("--eps-max", agg_eps.hi);
    agg->add_option("--out", agg_out);

    // curves
    auto* cur = app.add_subcommand("curves", "Success rate against communicability per latency interval");
    std::string cur_in, cur_out;
    rcp::MessageSpec cur_msg{448.0, 2400.0};
    std::vector<double> cur_edges{0.0, 0.02, 0.04, 0.06, 0.08, 0.1};
    std::size_t cur_bins = 20;
    cur->add_option("records", cur_in, "Records CSV")->required()->check(CLI::ExistingFile);
    cur->add_option("--bitrate", cur_msg.bitrate, "bits/s");
    cur->add_option("--size-bits", cur_msg.size_bits, "Message size, bits");
    cur->add_option("--eps-edges", cur_edges, "Latency interval edges")->delimiter(',');
    cur->add_option("--p-comm-bins", cur_bins, "Bins on [0, 1]");
    cur->add_option("--out", cur_out);

    // blockage
    auto* blk = app.add_subcommand("blockage", "Latency sweep at P_A = 1 with band detection");
    std::string blk_scenario, blk_records, blk_out;
    double blk_lo = 0.0, blk_hi = 0.1, blk_step = 1e-3;
    std::size_t blk_workers = default_workers();
    auto* blk_src = blk->add_option("scenario", blk_scenario, "Scenario JSON")->check(CLI::ExistingFile);
    blk->add_option("--records", blk_records, "Use existing records instead of simulating")
        ->check(CLI::ExistingFile)
        ->excludes(blk_src);
    blk->add_option("--eps-min", blk_lo);
    blk->add_option("--eps-max", blk_hi);
    blk->add_option("--step", blk_step);
    blk->add_option("--workers", blk_workers);
    blk->add_option("--out", blk_out);

    // rcp
    auto* rcpc = app.add_subcommand("rcp", "Link performance metrics");
    rcpc->require_subcommand(1);
    double lon = 0, loff = 0, t = 0, tau = 0, pa = 1, eps = 0, bits = 448, bitrate = 2400;
    auto* r_av = rcpc->add_subcommand("availability", "P_A(t) from the on state");
    r_av->add_option("--lon", lon)->required();
    r_av->add_option("--loff", loff)->required();
    r_av->add_option("--t", t)->required();
    auto* r_ss = rcpc->add_subcommand("steady", "Steady-state availability");
    r_ss->add_option("--lon", lon)->required();
    r_ss->add_option("--loff", loff)->required();
    auto* r_co = rcpc->add_subcommand("continuity", "Probability the link stays on for tau");
    r_co->add_option("--loff", loff)->required();
    r_co->add_option("--tau", tau)->required();
    auto* r_pc = rcpc->add_subcommand("communicability", "Message success probability");
    r_pc->add_option("--pa", pa)->required();
    auto* r_pc_tau = r_pc->add_option("--tau", tau, "Message duration, s");
    r_pc->add_option("--bits", bits)->excludes(r_pc_tau);
    r_pc->add_option("--bitrate", bitrate)->excludes(r_pc_tau);
    r_pc->add_option("--eps", eps)->required();
    auto* r_tm = rcpc->add_subcommand("tau-msg", "Message duration");
    r_tm->add_option("--bits", bits)->required();
    r_tm->add_option("--bitrate", bitrate)->required();

    // --version alone must not trip require_subcommand.
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--version") {
            show_version = true;
        }
    }
    if (show_version) {
        try {
            const AircraftParams p = load_aircraft_params(common.aircraft);
            char hash[17];
            std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(p.data_hash));
            std::cout << "rpas " << RPAS_VERSION << " aircraft-data " << p.version << ' ' << hash << '\n';
            return kExitOk;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitUsage;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*trim_cmd) {
            const AircraftParams p = load_aircraft_params(common.aircraft);
            const TrimPoint tp = trim(trim_vt, trim_alt, p);
            std::cout << "vt_ftps,altitude_ft,alpha_deg,theta_deg,elevator_deg,throttle,pow,residual,nz\n"
                      << format_double(trim_vt) << ',' << format_double(trim_alt) << ','
                      << format_double(tp.state.alpha() * kRadToDeg) << ','
                      << format_double(tp.state.theta * kRadToDeg) << ','
                      << format_double(tp.command.elevator * kRadToDeg) << ',' << format_double(tp.command.throttle)
                      << ',' << format_double(tp.state.pow) << ',' << format_double(tp.residual) << ','
                      << format_double(tp.outputs.nz) << '\n';
            return kExitOk;
        }

        if (*sim) {
            sim_run.policy = parse_policy(sim_policy, sim_throttle);
            sim_run.validate();
            const MissionSetup setup = load_setup(common, sim_scenario);
            const RunOutput out = run_mission(setup, sim_run, !sim_traj.empty());
            mc::write_records_csv(std::cout, {out.record});
            if (!sim_traj.empty()) {
                emit(sim_traj, [&](std::ostream& os) { write_trajectory_csv(os, out.trajectory); });
            }
            if (!out.record.success) {
                std::cerr << "mission failed: " << to_string(*out.record.failure_mode) << " after "
                          << out.record.waypoints_reached << " waypoint(s)\n";
                return kExitMissionFailure;
            }
            std::cerr << "mission complete in " << format_double(*out.record.completion_time) << " s\n";
            return kExitOk;
        }

        if (*sweep) {
            sw.policy = parse_policy(sw_policy, sw_throttle);
            sw.validate();
            const MissionSetup setup = load_setup(common, sw_scenario);
            std::size_t next_report = 0;
            const auto progress = [&](std::size_t done, std::size_t total) {
                if (done >= next_report || done == total) {
                    std::cerr << "\r" << done << '/' << total << std::flush;
                    next_report = done + std::max<std::size_t>(1, total / 100);
                }
            };
            std::vector<RunRecord> records;
            try {
                records = mc::run_sweep(setup, sw, progress);
            } catch (const mc::SweepError& e) {
                std::cerr << "\nsweep aborted: " << e.what() << "\ncompleted runs (" << e.completed().size()
                          << "):";
                for (std::size_t i : e.completed()) {
                    std::cerr << ' ' << i;
                }
                std::cerr << '\n';
                return kExitUsage;
            }
            std::cerr << '\n';
            emit(sw_out, [&](std::ostream& os) { mc::write_records_csv(os, records); });
            return kExitOk;
        }

        if (*agg) {
            const auto records = load_records(agg_in);
            const auto grid = mc::success_surface(records, agg_pa, agg_eps);
            emit(agg_out, [&](std::ostream& os) { mc::write_surface_csv(os, grid); });
            return kExitOk;
        }

        if (*cur) {
            const auto records = load_records(cur_in);
            std::cerr << "tau_msg = " << print12(cur_msg.tau_msg()) << " s\n";
            const auto pts = mc::communicability_curves(records, cur_msg, cur_edges, mc::BinSpec{0.0, 1.0, cur_bins});
            emit(cur_out, [&](std::ostream& os) { mc::write_curves_csv(os, pts); });
            return kExitOk;
        }

        if (*blk) {
            std::vector<mc::BlockageEntry> entries;
            if (!blk_records.empty()) {
                // One entry per distinct latency; it succeeds only if every record there did.
                std::map<double, mc::BlockageEntry> by_eps;
                for (const auto& r : load_records(blk_records)) {
                    auto [it, fresh] = by_eps.try_emplace(r.epsilon, mc::BlockageEntry{r.epsilon, r});
                    if (!fresh && !r.success) {
                        it->second.record = r;
                    }
                }
                for (auto& [e, entry] : by_eps) {
                    entries.push_back(entry);
                }
            } else {
                if (blk_scenario.empty()) {
                    throw ConfigError("blockage needs a scenario or --records");
                }
                if (!(blk_step > 0.0) || !(blk_hi >= blk_lo)) {
                    throw ConfigError("blockage: need step > 0 and eps-max >= eps-min");
                }
                std::vector<double> grid;
                const auto n = static_cast<std::size_t>(std::llround((blk_hi - blk_lo) / blk_step));
                const double inv = std::round(1.0 / blk_step);
                const bool exact = std::abs(inv * blk_step - 1.0) < 1e-12;
                for (std::size_t k = 0; k <= n; ++k) {
                    grid.push_back(exact ? (std::round(blk_lo * inv) + static_cast<double>(k)) / inv
                                         : blk_lo + static_cast<double>(k) * blk_step);
                }
                const MissionSetup setup = load_setup(common, blk_scenario);
                entries = mc::latency_blockage_sweep(setup, grid, blk_workers);
            }
            std::vector<bool> ok;
            std::vector<double> eps_axis;
            for (const auto& e : entries) {
                ok.push_back(e.record.success);
                eps_axis.push_back(e.epsilon);
            }
            const auto bands = mc::detect_bands(ok, eps_axis);
            std::cerr << bands.size() << " band(s) found\n";
            emit(blk_out, [&](std::ostream& os) { mc::write_blockage_csv(os, entries, bands); });
            return kExitOk;
        }

        if (*rcpc) {
            double v = 0.0;
            if (*r_av) {
                v = rcp::availability_at({lon, loff}, t);
            } else if (*r_ss) {
                v = rcp::steady_state_availability({lon, loff});
            } else if (*r_co) {
                v = rcp::continuity({0.0, loff}, tau);
            } else if (*r_pc) {
                const double tm = r_pc_tau->count() > 0 ? tau : rcp::message_duration(bits, bitrate);
                v = rcp::communicability(pa, tm, eps);
            } else {
                v = rcp::message_duration(bits, bitrate);
            }
            std::cout << print12(v) << '\n';
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
