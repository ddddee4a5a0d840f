#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace skipstone;
namespace fs = std::filesystem;

namespace {

ExperimentConfig with_damping(double d) {
    ExperimentConfig c;
    c.damping = d;
    return c;
}

const ExperimentConfig &calibrated() {
    static const ExperimentConfig c = [] {
        ExperimentConfig x;
        calibrate(x);
        return x;
    }();
    return c;
}

std::string sweep_bytes(const SweepResult &r) {
    std::ostringstream os;
    write_sweep_csv(os, r);
    return os.str();
}

fs::path scratch_dir(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("skipstone_test_" + name);
    fs::remove_all(p);
    return p;
}

std::vector<std::string> read_lines(const fs::path &p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

} // namespace

TEST(DirectRelease, StateIsFlatPitchedAndHorizontal) {
    const ThrowSetup setup;
    const RockState s = direct_release_state(12.6, 0.5, setup);
    EXPECT_EQ(s.position, Vec3(0, 0, 0.5));
    EXPECT_NEAR(s.linear_velocity.norm(), 12.6, 1e-12);
    EXPECT_EQ(s.linear_velocity.z(), 0.0);
    EXPECT_EQ(s.angular_velocity, Vec3::Zero());
    EXPECT_NEAR(compute_alpha(s), setup.release_pitch, 1e-12);
    EXPECT_THROW(direct_release_state(-1.0, 0.5), InvalidArgument);
}

TEST(Table2, NeedsCalibration) {
    const ExperimentConfig c;
    EXPECT_THROW(run_table2(c), CalibrationMissing);
    EXPECT_THROW(run_sweep(c, Mode::DirectRelease), CalibrationMissing);
    EXPECT_THROW(run_direct(c, 14.4, 0.5), CalibrationMissing);
}

TEST(Table2, ReferenceCountsInsideCalibratedPlateau) {
    std::vector<ThrowRecord> records;
    const SweepResult r = run_table2(with_damping(0.225), &records);
    ASSERT_EQ(r.rows.size(), 3u);
    const auto targets = table2_targets();
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r.rows[i].desired_velocity, targets[i].velocity);
        EXPECT_EQ(r.rows[i].height, 0.5);
        EXPECT_EQ(r.rows[i].reference_skips, targets[i].skips);
        EXPECT_EQ(r.rows[i].skips, targets[i].skips) << targets[i].velocity;
        EXPECT_NEAR(r.rows[i].achieved_velocity, targets[i].velocity, 1e-12);
    }
    EXPECT_EQ(r.rows[2].outcome, "sank");
    ASSERT_EQ(records.size(), 3u);
    EXPECT_FALSE(records[0].sim.samples.empty());
}

TEST(Calibrate, ExactMatchFoundWhereGridOracleFindsOne) {
    // brute-force scan at 1e-3 up to the first exact match
    const ExperimentConfig base;
    const auto targets = table2_targets();
    double first_exact = -1.0;
    for (int k = 0; k <= 1000 && first_exact < 0.0; ++k)
        if (evaluate_damping(base, targets, k * 1e-3).mismatch == 0) first_exact = k * 1e-3;
    ASSERT_GE(first_exact, 0.0) << "no exact-match damping on the 1e-3 grid";

    ExperimentConfig c;
    const CalibrationReport report = calibrate(c, targets);
    EXPECT_EQ(report.mismatch, 0);
    ASSERT_TRUE(c.damping.has_value());
    EXPECT_EQ(*c.damping, report.damping);
    EXPECT_GE(report.damping, first_exact);
    EXPECT_EQ(evaluate_damping(base, targets, report.damping).mismatch, 0);
    // the 1e-3 grid points around the answer also match exactly
    const double lo = std::floor(report.damping * 1e3) * 1e-3;
    EXPECT_EQ(evaluate_damping(base, targets, lo).mismatch, 0);
    EXPECT_EQ(evaluate_damping(base, targets, lo + 1e-3).mismatch, 0);
}

TEST(Calibrate, ReportIsSortedAndSeedIndependent) {
    ExperimentConfig a, b;
    b.seed = 12345;
    const CalibrationReport ra = calibrate(a);
    const CalibrationReport rb = calibrate(b);
    EXPECT_EQ(ra.damping, rb.damping);
    ASSERT_GE(ra.samples.size(), 21u);
    for (std::size_t i = 1; i < ra.samples.size(); ++i) EXPECT_LE(ra.samples[i - 1].damping, ra.samples[i].damping);
    const json j = to_json(ra);
    EXPECT_EQ(j.at("mismatch").get<int>(), 0);
    EXPECT_EQ(j.at("table").size(), ra.samples.size());
}

TEST(Calibrate, NoDampingOvershootsAtLowSpeeds) {
    const auto targets = table2_targets();
    const CalibrationSample none = evaluate_damping(ExperimentConfig{}, targets, 0.0);
    const CalibrationSample fit = evaluate_damping(ExperimentConfig{}, targets, *calibrated().damping);
    EXPECT_GT(none.mismatch, 0);
    for (std::size_t i = 0; i < targets.size(); ++i) EXPECT_GE(none.skips[i], fit.skips[i]) << targets[i].velocity;
    EXPECT_GT(none.skips[1], targets[1].skips);
}

TEST(Calibrate, EnormousDampingKillsEverySkip) {
    const ExperimentConfig c = with_damping(1e3);
    for (double v : {8.0, 12.6, 14.4, 25.0, 40.0}) EXPECT_EQ(count_skips(run_direct(c, v, 0.5, false).sim), 0) << v;
}

TEST(Calibrate, UnreachableTargetsFail) {
    ExperimentConfig c;
    // more skips at lower speed than higher: no D can produce this
    const std::vector<SkipTarget> impossible = {{9.0, 6}, {14.4, 0}};
    CalibrationOptions o;
    o.grid_intervals = 5;
    o.bisection_steps = 1;
    try {
        calibrate(c, impossible, o);
        FAIL() << "expected CalibrationFailed";
    } catch (const CalibrationFailed &e) {
        EXPECT_EQ(e.code(), "calibration_failed");
        EXPECT_NE(std::string(e.what()).find("->"), std::string::npos);
    }
    EXPECT_FALSE(c.damping.has_value());
    EXPECT_THROW(calibrate(c, {}), InvalidArgument);
}

TEST(Sweep, OneRowPerCellInKeyOrder) {
    ExperimentConfig c = calibrated();
    c.sweep.velocities = {12.0, 9.0, 12.0, 10.5};
    c.sweep.heights = {0.75, 0.5};
    const SweepResult r = run_sweep(c, Mode::DirectRelease);
    ASSERT_EQ(r.rows.size(), 6u);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        const auto a = std::pair(r.rows[i - 1].desired_velocity, r.rows[i - 1].height);
        const auto b = std::pair(r.rows[i].desired_velocity, r.rows[i].height);
        EXPECT_LT(a, b);
    }
    for (const auto &row : r.rows) {
        EXPECT_EQ(row.skips, count_skips(run_direct(c, row.desired_velocity, row.height, false).sim));
        EXPECT_TRUE(row.error.empty());
    }
}

TEST(Sweep, ByteIdenticalAcrossRuns) {
    ExperimentConfig c = calibrated();
    c.seed = 99;
    const std::string first = sweep_bytes(run_sweep(c, Mode::DirectRelease));
    const std::string second = sweep_bytes(run_sweep(c, Mode::DirectRelease));
    EXPECT_EQ(first, second);
    EXPECT_EQ(first.substr(0, first.find('\n')), kSweepHeader);
}

TEST(Sweep, VelocityCutoffAndMonotoneCounts) {
    const SweepResult r = run_sweep(calibrated(), Mode::DirectRelease);
    ASSERT_EQ(r.rows.size(), 17u);
    double cutoff = -1.0;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        if (i > 0) EXPECT_GE(r.rows[i].skips, r.rows[i - 1].skips) << r.rows[i].desired_velocity;
        if (cutoff < 0.0 && r.rows[i].skips > 0) cutoff = r.rows[i].desired_velocity;
    }
    EXPECT_GE(cutoff, 9.9);
    EXPECT_LE(cutoff, 12.6);
}

TEST(Sweep, HigherReleaseSkipsNoMore) {
    const ExperimentConfig &c = calibrated();
    const int low = count_skips(run_direct(c, 14.4, 0.5, false).sim);
    const int high = count_skips(run_direct(c, 14.4, 1.0, false).sim);
    EXPECT_LE(high, low);
}

TEST(Sweep, FailedCellsAreRecorded) {
    ExperimentConfig c = calibrated();
    c.sweep.velocities = {12.6};
    c.sweep.heights = {-0.1, 0.5};
    const SweepResult r = run_sweep(c, Mode::DirectRelease);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].outcome, "error");
    EXPECT_EQ(r.rows[0].error, "invalid_argument");
    EXPECT_TRUE(r.rows[1].error.empty());
    c.sweep.heights.clear();
    EXPECT_THROW(run_sweep(c, Mode::DirectRelease), InvalidArgument);
}

TEST(Export, ThreeTrajectoriesAndSummary) {
    std::vector<ThrowRecord> records;
    run_table2(calibrated(), &records);
    const fs::path dir = scratch_dir("export");
    const auto written = export_plots(records, dir.string());
    ASSERT_EQ(written.size(), 4u);
    for (const auto &p : written) EXPECT_TRUE(fs::exists(p)) << p;
    const auto summary = read_lines(dir / "summary.csv");
    ASSERT_EQ(summary.size(), 4u);
    EXPECT_EQ(summary[0], "label,desired_velocity,height,release_speed,skips,total_range,outcome,file");
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::ifstream in(written[i]);
        const auto back = read_trajectory_csv(in);
        ASSERT_EQ(back.size(), records[i].sim.samples.size());
        EXPECT_EQ(back.back().state.position, records[i].sim.samples.back().state.position);
        EXPECT_NE(summary[i + 1].find(records[i].label + ".csv"), std::string::npos);
    }
    fs::remove_all(dir);
}

TEST(Export, RejectsEmptyAndUnwritable) {
    EXPECT_THROW(export_plots({}, scratch_dir("empty").string()), InvalidArgument);
    std::vector<ThrowRecord> one(1);
    one[0].label = "x";
    const fs::path blocker = scratch_dir("blocker");
    std::ofstream(blocker) << "file, not a directory";
    EXPECT_THROW(export_plots(one, (blocker / "sub").string()), IoError);
    fs::remove(blocker);
}

TEST(FullPipeline, NominalThrowSkips) {
    const PipelineResult r = run_full_pipeline(calibrated(), 25.0, 0.5);
    const double achieved = r.record.release.linear_velocity.norm();
    EXPECT_LE(std::abs(achieved - 25.0), r.rehearsal.problem.eps_v);
    EXPECT_GE(count_skips(r.record.sim), 4);
    EXPECT_EQ(r.record.sim.samples.front().state.position, r.record.release.position);
}

TEST(FullPipeline, ZeroSpeedDropsAndSinks) {
    const PipelineResult r = run_full_pipeline(calibrated(), 0.0, 0.5);
    EXPECT_EQ(count_skips(r.record.sim), 0);
    EXPECT_EQ(r.record.sim.outcome, Outcome::Sank);
    EXPECT_LE(r.record.release.linear_velocity.norm(), r.rehearsal.problem.eps_v);
    // falls nearly straight down from the release point
    const Vec3 entry = r.record.sim.samples.back().state.position - r.record.release.position;
    EXPECT_LT(entry.head<2>().norm(), 0.1);
}

TEST(FullPipeline, HigherReleaseSkipsNoMore) {
    const ExperimentConfig &c = calibrated();
    const int low = count_skips(run_full_pipeline(c, 25.0, 0.5, false).record.sim);
    const int high = count_skips(run_full_pipeline(c, 25.0, 1.0, false).record.sim);
    EXPECT_LE(high, low);
}

TEST(FullPipeline, SweepModeUsesPlanner) {
    ExperimentConfig c = calibrated();
    c.sweep.velocities = {25.0};
    c.sweep.heights = {0.5};
    const SweepResult r = run_sweep(c, Mode::FullPipeline);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.mode, Mode::FullPipeline);
    EXPECT_TRUE(r.rows[0].error.empty()) << r.rows[0].error;
    EXPECT_NEAR(r.rows[0].achieved_velocity, 25.0, c.setup.eps_v);
}
