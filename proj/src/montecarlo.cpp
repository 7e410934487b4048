#include "rpas/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "rpas/rng.hpp"

namespace rpas::mc {

void SweepConfig::validate() const {
    if (n_samples == 0) {
        throw ConfigError("sweep: n_samples must be positive");
    }
    if (workers == 0) {
        throw ConfigError("sweep: workers must be positive");
    }
    if (!(grid > 0.0) || !(pa_lo < pa_hi) || !(eps_lo < eps_hi) || !(pa_lo > 0.0) || pa_hi > 1.0 ||
        eps_lo < 0.0) {
        throw ConfigError("sweep: need 0 < pa_lo < pa_hi <= 1, 0 <= eps_lo < eps_hi and grid > 0");
    }
    for (double span : {pa_hi - pa_lo, eps_hi - eps_lo}) {
        const double steps = span / grid;
        if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
            throw ConfigError("sweep: grid step must divide both parameter ranges");
        }
    }
}

SampledRun sample_run(const SweepConfig& cfg, std::uint64_t index) {
    SampledRun s;
    s.seed = derive_seed(cfg.base_seed, index);
    Rng rng(derive_seed(s.seed, 0));
    const auto n_pa = static_cast<std::uint64_t>(std::llround((cfg.pa_hi - cfg.pa_lo) / cfg.grid));
    const auto n_eps = static_cast<std::uint64_t>(std::llround((cfg.eps_hi - cfg.eps_lo) / cfg.grid));
    const std::uint64_t k_pa = rng.uniform_index(n_pa);
    const std::uint64_t k_eps = rng.uniform_index(n_eps);
    // Division by the inverse step keeps grid values correctly rounded (0.873, not 0.87300000000000011).
    const double inv = std::round(1.0 / cfg.grid);
    if (std::abs(inv * cfg.grid - 1.0) < 1e-12) {
        s.pa = (std::round(cfg.pa_lo * inv) + static_cast<double>(k_pa)) / inv;
        s.epsilon = (std::round(cfg.eps_lo * inv) + static_cast<double>(k_eps)) / inv;
    } else {
        s.pa = cfg.pa_lo + static_cast<double>(k_pa) * cfg.grid;
        s.epsilon = cfg.eps_lo + static_cast<double>(k_eps) * cfg.grid;
    }
    return s;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            if (abort.load(std::memory_order_relaxed)) {
                return;
            }
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                abort = true;
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<RunRecord> run_sweep(const MissionSetup& setup, const SweepConfig& cfg, const Progress& progress) {
    cfg.validate();
    std::vector<RunRecord> records(cfg.n_samples);
    std::vector<std::uint8_t> finished(cfg.n_samples, 0);
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    try {
        parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
            const SampledRun s = sample_run(cfg, i);
            RunConfig rc;
            rc.pa = s.pa;
            rc.epsilon = s.epsilon;
            rc.seed = s.seed;
            rc.policy = cfg.policy;
            RunRecord r = run_mission(setup, rc).record;
            r.run_id = i;
            records[i] = r;
            finished[i] = 1;
            const std::size_t d = done.fetch_add(1) + 1;
            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(d, cfg.n_samples);
            }
        });
    } catch (const std::exception& e) {
        std::vector<std::size_t> completed;
        for (std::size_t i = 0; i < finished.size(); ++i) {
            if (finished[i]) {
                completed.push_back(i);
            }
        }
        throw SweepError(std::string("sweep aborted: ") + e.what(), std::move(completed));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Records CSV

const char* const kRecordsHeader =
    "run_id,p_a,epsilon,seed,success,completion_time_s,failure_mode,waypoints_reached";

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        out << r.run_id << ',' << format_double(r.pa) << ',' << format_double(r.epsilon) << ',' << r.seed << ','
            << (r.success ? 1 : 0) << ',';
        if (r.completion_time) {
            out << format_double(*r.completion_time);
        }
        out << ',';
        if (r.failure_mode) {
            out << to_string(*r.failure_mode);
        }
        out << ',' << r.waypoints_reached << '\n';
    }
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            f.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    f.push_back(cur);
    return f;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("records CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
}

}  // namespace

std::vector<RunRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("records CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kRecordsHeader) {
        throw ConfigError("records CSV header mismatch; expected: " + std::string(kRecordsHeader));
    }
    std::vector<RunRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 8) {
            throw ConfigError("records CSV line " + std::to_string(line_no) + ": expected 8 fields");
        }
        RunRecord r;
        r.run_id = parse_number<std::uint64_t>(f[0], line_no);
        r.pa = parse_number<double>(f[1], line_no);
        r.epsilon = parse_number<double>(f[2], line_no);
        r.seed = parse_number<std::uint64_t>(f[3], line_no);
        if (f[4] != "0" && f[4] != "1") {
            throw ConfigError("records CSV line " + std::to_string(line_no) + ": success must be 0 or 1");
        }
        r.success = f[4] == "1";
        if (!f[5].empty()) {
            r.completion_time = parse_number<double>(f[5], line_no);
        }
        if (!f[6].empty()) {
            try {
                r.failure_mode = parse_failure_mode(f[6]);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("records CSV line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        r.waypoints_reached = parse_number<std::size_t>(f[7], line_no);
        if (r.success != r.completion_time.has_value() || r.success == r.failure_mode.has_value()) {
            throw ConfigError("records CSV line " + std::to_string(line_no) +
                              ": success must come with a completion time and no failure mode");
        }
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation

void BinSpec::validate() const {
    if (n == 0 || !(lo < hi)) {
        throw ConfigError("bins: need n > 0 and lo < hi");
    }
}

double BinSpec::edge(std::size_t i) const {
    return i == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
}

std::optional<std::size_t> BinSpec::index(double x) const {
    const double w = (hi - lo) / static_cast<double>(n);
    const double tol = 1e-9 * w;
    if (!(x >= lo - tol && x <= hi + tol)) {
        return std::nullopt;
    }
    const double pos = (x - lo) / w;
    auto i = static_cast<std::ptrdiff_t>(std::floor(pos + 1e-9));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
    return static_cast<std::size_t>(i);
}

void Cell::add(const RunRecord& r) {
    ++count;
    if (r.success) {
        ++successes;
        if (r.completion_time) {
            time_sum += *r.completion_time;
            ++time_count;
        }
    }
}

void Cell::merge(const Cell& o) {
    count += o.count;
    successes += o.successes;
    time_sum += o.time_sum;
    time_count += o.time_count;
}

std::optional<double> Cell::success_rate() const {
    if (count == 0) {
        return std::nullopt;
    }
    return static_cast<double>(successes) / static_cast<double>(count);
}

std::optional<double> Cell::mean_completion_time() const {
    if (time_count == 0) {
        return std::nullopt;
    }
    return time_sum / static_cast<double>(time_count);
}

EnvelopeGrid::EnvelopeGrid(BinSpec pa, BinSpec eps) : pa_(pa), eps_(eps) {
    pa_.validate();
    eps_.validate();
    cells_.resize(pa_.n * eps_.n);
}

void EnvelopeGrid::add(const RunRecord& r) {
    const auto i = pa_.index(r.pa);
    const auto j = eps_.index(r.epsilon);
    if (!i || !j) {
        throw std::out_of_range("record " + std::to_string(r.run_id) + " lies outside the surface bins");
    }
    cells_[*i * eps_.n + *j].add(r);
}

void EnvelopeGrid::merge(const EnvelopeGrid& o) {
    if (o.cells_.size() != cells_.size() || o.pa_.lo != pa_.lo || o.pa_.hi != pa_.hi || o.eps_.lo != eps_.lo ||
        o.eps_.hi != eps_.hi) {
        throw std::invalid_argument("cannot merge grids with different bins");
    }
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        cells_[k].merge(o.cells_[k]);
    }
}

std::uint64_t EnvelopeGrid::total() const {
    std::uint64_t t = 0;
    for (const auto& c : cells_) {
        t += c.count;
    }
    return t;
}

EnvelopeGrid success_surface(const std::vector<RunRecord>& records, const BinSpec& pa, const BinSpec& eps) {
    if (records.empty()) {
        throw ConfigError("aggregate: no records");
    }
    EnvelopeGrid g(pa, eps);
    for (const auto& r : records) {
        g.add(r);
    }
    return g;
}

namespace {

void write_optional(std::ostream& out, const std::optional<double>& v) {
    if (v) {
        out << format_double(*v);
    }
}

}  // namespace

void write_surface_csv(std::ostream& out, const EnvelopeGrid& grid) {
    out << "pa_bin_lo,pa_bin_hi,eps_bin_lo,eps_bin_hi,count,success_rate,mean_completion_time_s\n";
    const BinSpec& pa = grid.pa_bins();
    const BinSpec& eps = grid.eps_bins();
    for (std::size_t i = 0; i < pa.n; ++i) {
        for (std::size_t j = 0; j < eps.n; ++j) {
            const Cell& c = grid.cell(i, j);
            out << format_double(pa.edge(i)) << ',' << format_double(pa.edge(i + 1)) << ','
                << format_double(eps.edge(j)) << ',' << format_double(eps.edge(j + 1)) << ',' << c.count << ',';
            write_optional(out, c.success_rate());
            out << ',';
            write_optional(out, c.mean_completion_time());
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Curves

std::optional<std::size_t> eps_interval(const std::vector<double>& edges, double eps) {
    if (edges.size() < 2) {
        return std::nullopt;
    }
    if (eps == edges.front()) {
        return 0;
    }
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (eps > edges[i] && eps <= edges[i + 1]) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<CurvePoint> communicability_curves(const std::vector<RunRecord>& records, const rcp::MessageSpec& msg,
                                               const std::vector<double>& eps_edges, const BinSpec& p_bins) {
    msg.validate();
    p_bins.validate();
    if (eps_edges.size() < 2 || !std::is_sorted(eps_edges.begin(), eps_edges.end()) ||
        std::adjacent_find(eps_edges.begin(), eps_edges.end()) != eps_edges.end()) {
        throw ConfigError("curves: epsilon interval edges must be strictly increasing");
    }
    const std::size_t n_int = eps_edges.size() - 1;
    std::vector<Cell> cells(n_int * p_bins.n);
    for (const auto& r : records) {
        const auto i = eps_interval(eps_edges, r.epsilon);
        if (!i) {
            throw ConfigError("curves: record " + std::to_string(r.run_id) + " has epsilon outside the intervals");
        }
        const double pc = rcp::communicability(r.pa, msg, r.epsilon);
        const auto j = p_bins.index(pc);
        if (!j) {
            throw ConfigError("curves: record " + std::to_string(r.run_id) + " has P_comm outside the bins");
        }
        cells[*i * p_bins.n + *j].add(r);
    }
    std::vector<CurvePoint> out;
    for (std::size_t i = 0; i < n_int; ++i) {
        for (std::size_t j = 0; j < p_bins.n; ++j) {
            const Cell& c = cells[i * p_bins.n + j];
            if (c.count > 0) {
                out.push_back({eps_edges[i], eps_edges[i + 1], p_bins.edge(j), p_bins.edge(j + 1), c});
            }
        }
    }
    return out;
}

void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& points) {
    out << "eps_interval_lo,eps_interval_hi,p_comm_bin,success_rate,count\n";
    for (const auto& p : points) {
        out << format_double(p.eps_lo) << ',' << format_double(p.eps_hi) << ','
            << format_double(0.5 * (p.p_comm_lo + p.p_comm_hi)) << ',';
        write_optional(out, p.cell.success_rate());
        out << ',' << p.cell.count << '\n';
    }
}

// ---------------------------------------------------------------------------
// Blockage

std::vector<Band> detect_bands(const std::vector<bool>& success, const std::vector<double>& eps) {
    if (success.size() != eps.size()) {
        throw std::invalid_argument("detect_bands: size mismatch");
    }
    std::vector<Band> bands;
    std::size_t i = 0;
    const std::size_t n = success.size();
    while (i < n) {
        if (success[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && !success[j + 1]) {
            ++j;
        }
        if (i > 0 && j + 1 < n) {
            bands.push_back({i, j, eps[i], eps[j]});
        }
        i = j + 1;
    }
    return bands;
}

std::vector<BlockageEntry> latency_blockage_sweep(const MissionSetup& setup, const std::vector<double>& eps_grid,
                                                  std::size_t workers, const channel::LossPolicy& policy) {
    for (std::size_t i = 1; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > eps_grid[i - 1])) {
            throw ConfigError("blockage: epsilon grid must be strictly increasing");
        }
    }
    std::vector<BlockageEntry> out(eps_grid.size());
    parallel_for(eps_grid.size(), workers, [&](std::size_t i) {
        RunConfig rc;
        rc.pa = 1.0;
        rc.epsilon = eps_grid[i];
        rc.policy = policy;
        out[i].epsilon = eps_grid[i];
        out[i].record = run_mission(setup, rc).record;
        out[i].record.run_id = i;
    });
    return out;
}

void write_blockage_csv(std::ostream& out, const std::vector<BlockageEntry>& entries, const std::vector<Band>& bands) {
    out << "epsilon,success,completion_time_s\n";
    for (const auto& e : entries) {
        out << format_double(e.epsilon) << ',' << (e.record.success ? 1 : 0) << ',';
        if (e.record.completion_time) {
            out << format_double(*e.record.completion_time);
        }
        out << '\n';
    }
    out << "\n# bands: " << bands.size() << '\n';
    out << "# band,eps_first_fail,eps_last_fail\n";
    for (std::size_t k = 0; k < bands.size(); ++k) {
        out << "# " << k << ',' << format_double(bands[k].eps_first) << ',' << format_double(bands[k].eps_last)
            << '\n';
    }
}

}  // namespace rpas::mc
