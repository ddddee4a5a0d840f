// skipstone command-line tool.
//
//   skipstone simulate  --velocity 14.4 --height 0.5 [--config f] [--out dir]
//   skipstone throw     --velocity 25 --height 0.5   [--config f] [--out dir]
//   skipstone sweep     [--mode direct|full] [--velocity v] [--height h] [--out dir]
//   skipstone calibrate [--config f] [--seed n] [--out dir]
//   skipstone export    [--mode direct|full] [--out dir]
//
// Every command prints one JSON document on stdout. Failures print
// {"error": {"code": ..., "message": ...}} and exit nonzero.
#include <skipstone/skipstone.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace skipstone;
namespace fs = std::filesystem;

struct Options {
    std::string config_path;
    std::optional<double> velocity;
    std::optional<double> height;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string mode;
};

ExperimentConfig load(const Options &o, bool allow_missing = false) {
    ExperimentConfig c;
    if (!o.config_path.empty() && !(allow_missing && !fs::exists(o.config_path))) c = load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (!o.mode.empty()) c.mode = mode_from_string(o.mode);
    if (!o.out.empty()) c.output_dir = o.out;
    return c;
}

double required(const std::optional<double> &v, const char *flag) {
    if (!v) throw InvalidArgument(std::string("missing required flag ") + flag);
    return *v;
}

std::ofstream open_out(const fs::path &p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    return out;
}

fs::path output_dir(const Options &o) {
    const fs::path dir(o.out);
    try {
        fs::create_directories(dir);
    } catch (const fs::filesystem_error &e) {
        throw IoError(e.what());
    }
    return dir;
}

json release_json(const ThrowRecord &r) {
    return {{"label", r.label},
            {"desired_velocity", r.desired_velocity},
            {"height", r.height},
            {"release", rock_state_to_json(r.release)},
            {"achieved_velocity", r.release.linear_velocity.norm()},
            {"result", to_json(r.sim)}};
}

json cmd_simulate(const Options &o) {
    const ExperimentConfig c = load(o);
    const ThrowRecord r = run_direct(c, required(o.velocity, "--velocity"), required(o.height, "--height"));
    json j = release_json(r);
    j["mode"] = to_string(Mode::DirectRelease);
    if (!o.out.empty()) {
        const fs::path dir = output_dir(o);
        auto csv = open_out(dir / "trajectory.csv");
        write_trajectory_csv(csv, r.sim.samples);
        open_out(dir / "result.json") << j.dump(2) << '\n';
    }
    return j;
}

json cmd_throw(const Options &o) {
    const ExperimentConfig c = load(o);
    const PipelineResult p = run_full_pipeline(c, required(o.velocity, "--velocity"), required(o.height, "--height"));
    json states = json::array();
    for (const auto &v : p.rehearsal.visits) states.push_back({{"state", to_string(v.state)}, {"entry_time", v.entry_time}});
    json j = release_json(p.record);
    j["mode"] = to_string(Mode::FullPipeline);
    j["states"] = states;
    j["solver"] = to_json(p.rehearsal.solution.report);
    if (!o.out.empty()) {
        const fs::path dir = output_dir(o);
        auto csv = open_out(dir / "trajectory.csv");
        write_trajectory_csv(csv, p.record.sim.samples);
        auto trace = open_out(dir / "planner_trace.csv");
        write_trace_csv(trace, p.rehearsal.trace);
        open_out(dir / "problem.json") << to_json(p.rehearsal.problem).dump(2) << '\n';
        open_out(dir / "solution.json") << to_json(p.rehearsal.solution).dump(2) << '\n';
        open_out(dir / "result.json") << j.dump(2) << '\n';
    }
    return j;
}

json cmd_sweep(const Options &o) {
    ExperimentConfig c = load(o);
    if (o.velocity) c.sweep.velocities = {*o.velocity};
    if (o.height) c.sweep.heights = {*o.height};
    const SweepResult r = run_sweep(c, c.mode);
    const json j = to_json(r);
    if (!o.out.empty()) {
        const fs::path dir = output_dir(o);
        auto csv = open_out(dir / "sweep.csv");
        write_sweep_csv(csv, r);
        open_out(dir / "sweep.json") << j.dump(2) << '\n';
    }
    return j;
}

json cmd_calibrate(const Options &o) {
    ExperimentConfig c = load(o, true);
    const CalibrationReport report = calibrate(c);
    json j = to_json(report);
    if (!o.config_path.empty()) {
        save_config(o.config_path, c);
        j["config"] = o.config_path;
    }
    if (!o.out.empty()) open_out(output_dir(o) / "calibration.json") << j.dump(2) << '\n';
    return j;
}

json cmd_export(const Options &o) {
    const ExperimentConfig c = load(o);
    const std::string dir = o.out.empty() ? c.output_dir : o.out;
    std::vector<ThrowRecord> records;
    if (c.mode == Mode::DirectRelease) {
        run_table2(c, &records);
    } else {
        for (const auto &t : table2_targets()) records.push_back(run_full_pipeline(c, t.velocity, kTable2Height).record);
    }
    const auto files = export_plots(records, dir);
    return {{"mode", to_string(c.mode)}, {"directory", dir}, {"files", files}};
}

int fail(const std::string &code, const std::string &message, int status) {
    std::cout << json{{"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
    return status;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Rock skipping: throw planning and skip simulation"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", o.config_path, "INI configuration file");
        sub->add_option("--velocity", o.velocity, "release speed, m/s");
        sub->add_option("--height", o.height, "release height, m");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--mode", o.mode, "direct or full");
    };
    struct Command {
        const char *name;
        const char *help;
        json (*run)(const Options &);
    };
    const Command commands[] = {
        {"simulate", "single direct-release throw", cmd_simulate},
        {"throw", "full pipeline: drag, pick, load, throw, simulate", cmd_throw},
        {"sweep", "grid over release velocity and height", cmd_sweep},
        {"calibrate", "fit the water damping coefficient", cmd_calibrate},
        {"export", "write trajectory CSVs and a summary for plotting", cmd_export},
    };
    for (const auto &c : commands) add_common(app.add_subcommand(c.name, c.help));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail("usage", e.what(), 2);
    }

    try {
        for (const auto &c : commands) {
            if (app.got_subcommand(c.name)) {
                std::cout << c.run(o).dump(2) << std::endl;
                return 0;
            }
        }
        return fail("usage", "no subcommand", 2);
    } catch (const ConfigError &e) {
        return fail(e.code(), e.what(), 2);
    } catch (const InvalidArgument &e) {
        return fail(e.code(), e.what(), 2);
    } catch (const Error &e) {
        return fail(e.code(), e.what(), 1);
    } catch (const std::exception &e) {
        return fail("internal", e.what(), 1);
    }
}
