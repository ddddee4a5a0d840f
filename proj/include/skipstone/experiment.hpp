// Experiment harness: single throws, velocity/height sweeps, damping
// calibration against reference skip counts, and plot data export.
#pragma once

#include <skipstone/config.hpp>
#include <skipstone/io.hpp>
#include <skipstone/throw_planner.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace skipstone {

/// Reference skip counts at a 0.5 m release height, keyed by release speed.
struct SkipTarget {
    double velocity = 0.0;
    int skips = 0;
};

inline std::vector<SkipTarget> table2_targets() { return {{14.4, 4}, {12.6, 3}, {9.9, 0}}; }
inline constexpr double kTable2Height = 0.5;

/// Release state for DirectRelease mode: rock above the water at x = 0,
/// horizontal velocity along +x, leading edge raised by the release pitch.
inline RockState direct_release_state(double velocity, double height, const ThrowSetup &setup = {}) {
    if (!std::isfinite(velocity) || velocity < 0.0) throw InvalidArgument("release velocity must be >= 0");
    RockState s;
    s.position = Vec3(0.0, 0.0, height);
    s.orientation = Quat(pitched_rock_orientation(setup.release_pitch));
    s.linear_velocity = velocity * setup.throw_direction.normalized();
    s.angular_velocity = Vec3::Zero();
    return s;
}

struct ThrowRecord {
    std::string label;
    double desired_velocity = 0.0;
    double height = 0.0;
    RockState release;
    SimResult sim;
};

inline std::string throw_label(double velocity, double height) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << "throw_v" << velocity << "_h" << height;
    return os.str();
}

inline ThrowRecord run_direct(const ExperimentConfig &config, double velocity, double height,
                              bool record_samples = true) {
    SimConfig sim = config.sim;
    sim.record_samples = record_samples;
    ThrowRecord r;
    r.label = throw_label(velocity, height);
    r.desired_velocity = velocity;
    r.height = height;
    if (!(height > config.water.surface_height))
        throw InvalidArgument("release height must be above the water surface");
    r.release = direct_release_state(velocity, height, config.setup);
    r.sim = simulate_throw(r.release, config.rock, config.calibrated_water(), sim);
    return r;
}

struct PipelineResult {
    RehearsalResult rehearsal;
    ThrowRecord record;
};

/// Drag, pick, load and throw with the arm, then simulate the released rock.
inline PipelineResult run_full_pipeline(const ExperimentConfig &config, double velocity, double height,
                                        bool record_samples = true) {
    const WaterModel water = config.calibrated_water();
    ThrowPlanner planner(config.scene, config.rock, config.arm, config.setup);
    PipelineResult out;
    out.rehearsal = planner.run(velocity, height);
    SimConfig sim = config.sim;
    sim.record_samples = record_samples;
    out.record.label = throw_label(velocity, height);
    out.record.desired_velocity = velocity;
    out.record.height = height;
    out.record.release = out.rehearsal.release;
    out.record.sim = simulate_throw(out.record.release, config.rock, water, sim);
    return out;
}

struct SweepRow {
    double desired_velocity = 0.0;
    double achieved_velocity = 0.0;
    double height = 0.0;
    int skips = 0;
    double total_range = 0.0;
    std::string outcome;
    int reference_skips = -1; // -1: no reference value
    std::string error;        // error code when the cell failed
};

struct SweepResult {
    Mode mode = Mode::DirectRelease;
    std::vector<SweepRow> rows;
};

inline SweepRow make_row(const ThrowRecord &r) {
    SweepRow row;
    row.desired_velocity = r.desired_velocity;
    row.achieved_velocity = r.release.linear_velocity.norm();
    row.height = r.height;
    row.skips = count_skips(r.sim);
    row.total_range = r.sim.total_range;
    row.outcome = to_string(r.sim.outcome);
    return row;
}

/// One row per (velocity, height) pair, ordered by velocity then height.
/// Cells that fail (unreachable release, solver failure) are reported in
/// the row instead of aborting the sweep.
inline SweepResult run_sweep(const ExperimentConfig &config, Mode mode) {
    if (config.sweep.velocities.empty() || config.sweep.heights.empty())
        throw InvalidArgument("sweep needs at least one velocity and one height");
    config.calibrated_water();
    std::vector<std::pair<double, double>> cells;
    for (double v : config.sweep.velocities)
        for (double h : config.sweep.heights) cells.emplace_back(v, h);
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

    SweepResult result;
    result.mode = mode;
    for (const auto &[v, h] : cells) {
        try {
            const ThrowRecord r = mode == Mode::DirectRelease ? run_direct(config, v, h, false)
                                                              : run_full_pipeline(config, v, h, false).record;
            result.rows.push_back(make_row(r));
        } catch (const Error &e) {
            SweepRow row;
            row.desired_velocity = v;
            row.height = h;
            row.outcome = "error";
            row.error = e.code();
            result.rows.push_back(row);
        }
    }
    return result;
}

/// DirectRelease runs at the reference speeds and height, listed alongside
/// the reference skip counts.
inline SweepResult run_table2(const ExperimentConfig &config, std::vector<ThrowRecord> *records = nullptr) {
    config.calibrated_water();
    SweepResult result;
    for (const auto &target : table2_targets()) {
        ThrowRecord r = run_direct(config, target.velocity, kTable2Height, records != nullptr);
        SweepRow row = make_row(r);
        row.reference_skips = target.skips;
        result.rows.push_back(row);
        if (records) records->push_back(std::move(r));
    }
    return result;
}

inline constexpr const char *kSweepHeader =
    "desired_velocity,achieved_velocity,height,skips,total_range,outcome,reference_skips,error";

inline void write_sweep_csv(std::ostream &out, const SweepResult &r) {
    out << kSweepHeader << '\n' << std::setprecision(17);
    for (const auto &row : r.rows)
        out << row.desired_velocity << ',' << row.achieved_velocity << ',' << row.height << ',' << row.skips
            << ',' << row.total_range << ',' << row.outcome << ',' << row.reference_skips << ',' << row.error
            << '\n';
}

inline SweepResult read_sweep_csv(std::istream &in, Mode mode = Mode::DirectRelease) {
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader) throw IoError("sweep CSV: unexpected header");
    SweepResult r;
    r.mode = mode;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto c = detail::split_csv_line(line);
        if (c.size() != 8) throw IoError("line " + std::to_string(line_no) + ": expected 8 columns");
        SweepRow row;
        row.desired_velocity = detail::csv_number(c[0], line_no);
        row.achieved_velocity = detail::csv_number(c[1], line_no);
        row.height = detail::csv_number(c[2], line_no);
        row.skips = static_cast<int>(detail::csv_number(c[3], line_no));
        row.total_range = detail::csv_number(c[4], line_no);
        row.outcome = c[5];
        row.reference_skips = static_cast<int>(detail::csv_number(c[6], line_no));
        row.error = c[7];
        r.rows.push_back(row);
    }
    return r;
}

inline json to_json(const SweepResult &r) {
    json rows = json::array();
    for (const auto &row : r.rows) {
        json j = {{"desired_velocity", row.desired_velocity},
                  {"achieved_velocity", row.achieved_velocity},
                  {"height", row.height},
                  {"skips", row.skips},
                  {"total_range", row.total_range},
                  {"outcome", row.outcome}};
        if (row.reference_skips >= 0) j["reference_skips"] = row.reference_skips;
        if (!row.error.empty()) j["error"] = row.error;
        rows.push_back(j);
    }
    return {{"mode", to_string(r.mode)}, {"rows", rows}};
}

struct CalibrationSample {
    double damping = 0.0;
    std::vector<int> skips;
    int mismatch = 0;
};

struct CalibrationOptions {
    double max_damping = 1.0;
    int grid_intervals = 20;
    int bisection_steps = 6;
};

struct CalibrationReport {
    double damping = 0.0;
    int mismatch = 0;
    std::vector<SkipTarget> targets;
    std::vector<CalibrationSample> samples; // sorted by damping
};

inline json to_json(const CalibrationReport &r) {
    json table = json::array();
    for (const auto &s : r.samples)
        table.push_back({{"damping", s.damping}, {"skips", s.skips}, {"mismatch", s.mismatch}});
    json targets = json::array();
    for (const auto &t : r.targets) targets.push_back({{"velocity", t.velocity}, {"skips", t.skips}});
    return {{"damping_coefficient", r.damping}, {"mismatch", r.mismatch}, {"targets", targets}, {"table", table}};
}

inline CalibrationSample evaluate_damping(const ExperimentConfig &config, const std::vector<SkipTarget> &targets,
                                          double damping) {
    ExperimentConfig c = config;
    c.damping = damping;
    CalibrationSample s;
    s.damping = damping;
    for (const auto &t : targets) {
        const int k = count_skips(run_direct(c, t.velocity, kTable2Height, false).sim);
        s.skips.push_back(k);
        s.mismatch += std::abs(k - t.skips);
    }
    return s;
}

/// Fits the damping coefficient D to the targets: a uniform grid over
/// [0, max_damping] (visited in seed-shuffled order), then bisection on both
/// edges of the widest run of best-mismatch grid points. Returns the middle
/// of that run and stores it in config.damping. Throws CalibrationFailed
/// when the best total mismatch exceeds one skip.
inline CalibrationReport calibrate(ExperimentConfig &config, const std::vector<SkipTarget> &targets = table2_targets(),
                                   const CalibrationOptions &options = {}) {
    if (targets.empty()) throw InvalidArgument("calibration needs at least one target");
    if (!(options.max_damping > 0.0) || options.grid_intervals < 1 || options.bisection_steps < 0)
        throw InvalidArgument("bad calibration options");

    const int n = options.grid_intervals + 1;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<CalibrationSample> grid(n);
    for (int k : order) grid[k] = evaluate_damping(config, targets, options.max_damping * k / (n - 1));

    CalibrationReport report;
    report.targets = targets;
    int best = grid[0].mismatch;
    for (const auto &s : grid) best = std::min(best, s.mismatch);

    // widest contiguous run of best grid points; ties go to the lower D
    int run_start = 0, run_len = 0;
    for (int i = 0; i < n;) {
        if (grid[i].mismatch != best) {
            ++i;
            continue;
        }
        int j = i;
        while (j < n && grid[j].mismatch == best) ++j;
        if (j - i > run_len) {
            run_start = i;
            run_len = j - i;
        }
        i = j;
    }

    std::vector<CalibrationSample> extra;
    auto refine = [&](double inside, double outside) {
        for (int s = 0; s < options.bisection_steps; ++s) {
            const double mid = 0.5 * (inside + outside);
            CalibrationSample m = evaluate_damping(config, targets, mid);
            (m.mismatch == best ? inside : outside) = mid;
            extra.push_back(std::move(m));
        }
        return inside;
    };
    const int last = run_start + run_len - 1;
    const double left = run_start > 0 ? refine(grid[run_start].damping, grid[run_start - 1].damping)
                                      : grid[run_start].damping;
    const double right = last < n - 1 ? refine(grid[last].damping, grid[last + 1].damping) : grid[last].damping;

    CalibrationSample chosen = evaluate_damping(config, targets, 0.5 * (left + right));
    if (chosen.mismatch != best) {
        // the run is not one interval between grid points; keep its middle grid point
        extra.push_back(chosen);
        chosen = grid[run_start + (run_len - 1) / 2];
    } else {
        extra.push_back(chosen);
    }

    report.samples = grid;
    report.samples.insert(report.samples.end(), extra.begin(), extra.end());
    std::sort(report.samples.begin(), report.samples.end(),
              [](const auto &a, const auto &b) { return a.damping < b.damping; });
    report.damping = chosen.damping;
    report.mismatch = chosen.mismatch;

    if (best > 1) {
        std::ostringstream os;
        os << "no damping coefficient reaches a total skip mismatch <= 1 (best " << best << ");"
           << " damping -> mismatch:";
        for (const auto &s : grid) os << ' ' << s.damping << "->" << s.mismatch;
        throw CalibrationFailed(os.str());
    }
    config.damping = report.damping;
    return report;
}

/// Writes one trajectory CSV per throw plus summary.csv (one row per throw,
/// naming its trajectory file). Returns the paths written.
inline std::vector<std::string> export_plots(const std::vector<ThrowRecord> &records, const std::string &directory) {
    if (records.empty()) throw InvalidArgument("nothing to export: no throw results");
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    try {
        fs::create_directories(directory);
    } catch (const fs::filesystem_error &e) {
        throw IoError(e.what());
    }
    auto open = [](const fs::path &p) {
        std::ofstream out(p);
        if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
        return out;
    };
    for (const auto &r : records) {
        const fs::path p = fs::path(directory) / (r.label + ".csv");
        auto out = open(p);
        write_trajectory_csv(out, r.sim.samples);
        written.push_back(p.string());
    }
    const fs::path summary = fs::path(directory) / "summary.csv";
    auto out = open(summary);
    out << "label,desired_velocity,height,release_speed,skips,total_range,outcome,file\n" << std::setprecision(17);
    for (const auto &r : records)
        out << r.label << ',' << r.desired_velocity << ',' << r.height << ',' << r.release.linear_velocity.norm()
            << ',' << count_skips(r.sim) << ',' << r.sim.total_range << ',' << to_string(r.sim.outcome) << ','
            << r.label << ".csv\n";
    written.push_back(summary.string());
    return written;
}

} // namespace skipstone
