#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpas/mission.hpp"
#include "rpas/rcp_metrics.hpp"

namespace rpas::mc {

struct SweepConfig {
    std::size_t n_samples = 20000;
    std::uint64_t base_seed = 1;
    std::size_t workers = 1;
    // Uniform grids: P_A = pa_lo + k * grid, epsilon = eps_lo + k * grid.
    double pa_lo = 0.5, pa_hi = 1.0;
    double eps_lo = 0.0, eps_hi = 0.1;
    double grid = 1e-3;
    channel::LossPolicy policy;

    void validate() const;
};

struct SampledRun {
    double pa = 1.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

/// Parameters of run i. Pure function of (config, i).
SampledRun sample_run(const SweepConfig& cfg, std::uint64_t index);

/// Thrown when a worker fails outside the mission's own failure handling.
class SweepError : public std::runtime_error {
public:
    SweepError(const std::string& what, std::vector<std::size_t> completed)
        : std::runtime_error(what), completed_(std::move(completed)) {}
    const std::vector<std::size_t>& completed() const { return completed_; }

private:
    std::vector<std::size_t> completed_;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Records in run-index order; identical for any worker count.
std::vector<RunRecord> run_sweep(const MissionSetup& setup, const SweepConfig& cfg,
                                 const Progress& progress = {});

/// Runs fn(i) for i in [0, n) on a pool of `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(std::istream& in);
extern const char* const kRecordsHeader;

// ---------------------------------------------------------------------------
// Aggregation

/// Equal-width bins on [lo, hi]. A value on an interior edge goes to the upper
/// bin; hi itself belongs to the last bin.
struct BinSpec {
    double lo = 0.0, hi = 1.0;
    std::size_t n = 1;

    void validate() const;
    double edge(std::size_t i) const;
    /// Bin of x, or nullopt outside [lo, hi] (edge tolerance 1e-9 of a bin width).
    std::optional<std::size_t> index(double x) const;
};

/// Commutative-monoid cell: merging in any order gives the same totals.
struct Cell {
    std::uint64_t count = 0;
    std::uint64_t successes = 0;
    double time_sum = 0.0;  // successful runs only
    std::uint64_t time_count = 0;

    void add(const RunRecord& r);
    void merge(const Cell& o);
    std::optional<double> success_rate() const;
    std::optional<double> mean_completion_time() const;

    friend bool operator==(const Cell&, const Cell&) = default;
};

class EnvelopeGrid {
public:
    EnvelopeGrid(BinSpec pa, BinSpec eps);

    /// Throws std::out_of_range for a record outside both axes' ranges.
    void add(const RunRecord& r);
    void merge(const EnvelopeGrid& o);

    const BinSpec& pa_bins() const { return pa_; }
    const BinSpec& eps_bins() const { return eps_; }
    const Cell& cell(std::size_t i_pa, std::size_t i_eps) const { return cells_[i_pa * eps_.n + i_eps]; }
    std::uint64_t total() const;

    friend bool operator==(const EnvelopeGrid& a, const EnvelopeGrid& b) { return a.cells_ == b.cells_; }

private:
    BinSpec pa_, eps_;
    std::vector<Cell> cells_;
};

/// Success-rate and completion-time surfaces share one grid; completion time
/// counts successful runs only.
EnvelopeGrid success_surface(const std::vector<RunRecord>& records, const BinSpec& pa, const BinSpec& eps);
inline EnvelopeGrid completion_time_surface(const std::vector<RunRecord>& records, const BinSpec& pa,
                                            const BinSpec& eps) {
    return success_surface(records, pa, eps);
}

void write_surface_csv(std::ostream& out, const EnvelopeGrid& grid);

// ---------------------------------------------------------------------------
// Communicability curves

struct CurvePoint {
    double eps_lo = 0.0, eps_hi = 0.0;
    double p_comm_lo = 0.0, p_comm_hi = 0.0;
    Cell cell;
};

/// Epsilon intervals are (lo, hi], except the first which also takes lo.
/// Each record maps to P_comm = communicability(P_A, msg, eps) and is binned
/// within its interval. Only non-empty bins are returned.
std::vector<CurvePoint> communicability_curves(const std::vector<RunRecord>& records,
                                               const rcp::MessageSpec& msg,
                                               const std::vector<double>& eps_edges,
                                               const BinSpec& p_comm_bins);

/// Interval index of eps under the (lo, hi] convention, or nullopt.
std::optional<std::size_t> eps_interval(const std::vector<double>& edges, double eps);

void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& points);

// ---------------------------------------------------------------------------
// Latency blockage

struct BlockageEntry {
    double epsilon = 0.0;
    RunRecord record;
};

/// Maximal run of failures with a success on each side.
struct Band {
    std::size_t first = 0, last = 0;  // indices of the first and last failing entry
    double eps_first = 0.0, eps_last = 0.0;
};

std::vector<Band> detect_bands(const std::vector<bool>& success, const std::vector<double>& eps);

/// One deterministic run per epsilon at P_A = 1.
std::vector<BlockageEntry> latency_blockage_sweep(const MissionSetup& setup, const std::vector<double>& eps_grid,
                                                  std::size_t workers, const channel::LossPolicy& policy = {});

void write_blockage_csv(std::ostream& out, const std::vector<BlockageEntry>& entries,
                        const std::vector<Band>& bands);

}  // namespace rpas::mc
