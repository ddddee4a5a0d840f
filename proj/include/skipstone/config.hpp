// Experiment configuration and its INI file format.
//
//   [rock]       radius, thickness, mass
//   [water]      density, drag_coefficient, damping_coefficient, surface_height
//   [sim]        dt_flight, dt_contact, max_sim_time, sink_depth_threshold, x_extent
//   [scene]      table_height, table_center, table_size, table_edge_position,
//                rock_start_position
//   [throw]      swing_radius, release_bearing, load_back_angle, follow_through_angle,
//                release_pitch, swing_length, eps_p, eps_theta, eps_v,
//                release_fraction, max_release_tumble_rate
//   [sweep]      velocities, heights   ("8, 9, 10" or "8:16:0.5")
//   [experiment] mode (direct | full), output_dir, seed
//   [arm]        joints, ee_offset      plus one [jointN] section per joint with
//                axis, offset, lower, upper, velocity_limit
//
// Vectors are whitespace-separated triples. A missing damping_coefficient
// means the model has not been calibrated yet.
#pragma once

#include <skipstone/arm_kinematics.hpp>
#include <skipstone/flight_simulator.hpp>
#include <skipstone/scene.hpp>
#include <skipstone/skip_dynamics.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace skipstone {

enum class Mode { DirectRelease, FullPipeline };

inline std::string to_string(Mode m) { return m == Mode::DirectRelease ? "direct" : "full"; }

inline Mode mode_from_string(const std::string &s) {
    if (s == "direct" || s == "DirectRelease") return Mode::DirectRelease;
    if (s == "full" || s == "FullPipeline") return Mode::FullPipeline;
    throw ConfigError("unknown mode '" + s + "' (expected direct or full)");
}

struct SweepSpec {
    std::vector<double> velocities;
    std::vector<double> heights;
};

inline std::vector<double> default_velocity_grid() {
    std::vector<double> v;
    for (int i = 0; i <= 16; ++i) v.push_back(8.0 + 0.5 * i);
    return v;
}

struct ExperimentConfig {
    RockGeometry rock;
    WaterModel water;
    std::optional<double> damping; // unset until calibrated
    SimConfig sim;
    TaskScene scene;
    ThrowSetup setup;
    ArmModel arm = default_arm();
    SweepSpec sweep{default_velocity_grid(), {0.5}};
    Mode mode = Mode::DirectRelease;
    std::string output_dir = "results";
    std::uint64_t seed = 0;

    /// Water model with the calibrated damping coefficient.
    WaterModel calibrated_water() const {
        if (!damping)
            throw CalibrationMissing(
                "damping_coefficient is not calibrated; run `skipstone calibrate --config <file>` first");
        WaterModel w = water;
        w.damping_coefficient = *damping;
        return w;
    }

    void validate() const {
        rock.validate();
        water.validate();
        if (damping && !(*damping >= 0.0)) throw ConfigError("damping_coefficient must be >= 0");
        sim.validate();
        scene.validate(rock);
        if (std::abs(scene.water_surface_height - water.surface_height) > 1e-12)
            throw ConfigError("scene and water disagree on the surface height");
        arm.validate();
    }
};

namespace detail {

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
    if (v == 0.0) v = 0.0; // drop the sign of -0
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string format_vec(const Vec3 &v) {
    return format_number(v.x()) + " " + format_number(v.y()) + " " + format_number(v.z());
}

inline double parse_number(const std::string &text, const std::string &key) {
    std::istringstream is(text);
    double v;
    std::string rest;
    if (!(is >> v) || (is >> rest)) throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
    return v;
}

inline Vec3 parse_vec(const std::string &text, const std::string &key) {
    std::istringstream is(text);
    Vec3 v;
    std::string rest;
    if (!(is >> v.x() >> v.y() >> v.z()) || (is >> rest))
        throw ConfigError("'" + key + "': expected three numbers, got '" + text + "'");
    return v;
}

inline std::vector<double> parse_list(const std::string &text, const std::string &key) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::string a, b, c;
        std::istringstream is(text);
        std::getline(is, a, ':');
        std::getline(is, b, ':');
        std::getline(is, c);
        const double start = parse_number(a, key), stop = parse_number(b, key), step = parse_number(c, key);
        if (!(step > 0.0) || stop < start) throw ConfigError("'" + key + "': bad range '" + text + "'");
        const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
        for (int i = 0; i <= n; ++i) out.push_back(start + i * step);
        return out;
    }
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(parse_number(item, key));
    }
    if (out.empty()) throw ConfigError("'" + key + "': empty list");
    return out;
}

inline std::string format_list(const std::vector<double> &v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out;
}

/// Reads keys of one section, rejecting any key it does not know.
class SectionReader {
public:
    SectionReader(const boost::property_tree::ptree &root, std::string name) : name_(std::move(name)) {
        if (auto child = root.get_child_optional(name_)) section_ = &*child;
    }

    bool present() const { return section_ != nullptr; }

    std::optional<std::string> raw(const std::string &key) {
        seen_.insert(key);
        if (!section_) return std::nullopt;
        auto v = section_->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return *v;
    }

    void number(const std::string &key, double &out) {
        if (auto v = raw(key)) out = parse_number(*v, name_ + "." + key);
    }
    void vec(const std::string &key, Vec3 &out) {
        if (auto v = raw(key)) out = parse_vec(*v, name_ + "." + key);
    }

    void finish() const {
        if (!section_) return;
        for (const auto &kv : *section_)
            if (!seen_.count(kv.first)) throw ConfigError("unknown key '" + name_ + "." + kv.first + "'");
    }

private:
    std::string name_;
    const boost::property_tree::ptree *section_ = nullptr;
    std::set<std::string> seen_;
};

} // namespace detail

inline ExperimentConfig parse_config(std::istream &in) {
    namespace pt = boost::property_tree;
    pt::ptree root;
    try {
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error &e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    ExperimentConfig c;
    std::set<std::string> known = {"rock", "water", "sim", "scene", "throw", "sweep", "experiment", "arm"};

    detail::SectionReader rock(root, "rock");
    rock.number("radius", c.rock.radius);
    rock.number("thickness", c.rock.thickness);
    rock.number("mass", c.rock.mass);
    rock.finish();

    detail::SectionReader water(root, "water");
    water.number("density", c.water.density);
    water.number("drag_coefficient", c.water.drag_coefficient);
    water.number("surface_height", c.water.surface_height);
    if (auto d = water.raw("damping_coefficient"))
        c.damping = detail::parse_number(*d, "water.damping_coefficient");
    water.finish();
    c.scene.water_surface_height = c.water.surface_height;

    detail::SectionReader sim(root, "sim");
    sim.number("dt_flight", c.sim.dt_flight);
    sim.number("dt_contact", c.sim.dt_contact);
    sim.number("max_sim_time", c.sim.max_sim_time);
    sim.number("sink_depth_threshold", c.sim.sink_depth_threshold);
    sim.number("x_extent", c.sim.x_extent);
    sim.finish();

    detail::SectionReader scene(root, "scene");
    scene.number("table_height", c.scene.table_height);
    scene.vec("table_center", c.scene.table_center);
    scene.vec("table_size", c.scene.table_size);
    scene.vec("table_edge_position", c.scene.table_edge_position);
    const bool explicit_start = scene.raw("rock_start_position").has_value();
    scene.vec("rock_start_position", c.scene.rock_start_position);
    scene.finish();
    if (!explicit_start)
        c.scene.rock_start_position.z() = c.scene.table_height + 0.5 * c.rock.thickness;

    detail::SectionReader thr(root, "throw");
    thr.number("swing_radius", c.setup.swing_radius);
    thr.number("release_bearing", c.setup.release_bearing);
    thr.number("load_back_angle", c.setup.load_back_angle);
    thr.number("follow_through_angle", c.setup.follow_through_angle);
    thr.number("release_pitch", c.setup.release_pitch);
    thr.number("swing_length", c.setup.swing_length);
    thr.number("eps_p", c.setup.eps_p);
    thr.number("eps_theta", c.setup.eps_theta);
    thr.number("eps_v", c.setup.eps_v);
    thr.number("release_fraction", c.setup.release_fraction);
    thr.number("max_release_tumble_rate", c.setup.max_release_tumble_rate);
    thr.finish();

    detail::SectionReader sweep(root, "sweep");
    if (auto v = sweep.raw("velocities")) c.sweep.velocities = detail::parse_list(*v, "sweep.velocities");
    if (auto v = sweep.raw("heights")) c.sweep.heights = detail::parse_list(*v, "sweep.heights");
    sweep.finish();

    detail::SectionReader exp(root, "experiment");
    if (auto v = exp.raw("mode")) c.mode = mode_from_string(*v);
    if (auto v = exp.raw("output_dir")) c.output_dir = *v;
    if (auto v = exp.raw("seed")) {
        try {
            // stoull silently wraps a leading minus sign
            if (v->empty() || !std::isdigit(static_cast<unsigned char>(v->front()))) throw std::invalid_argument("sign");
            std::size_t used = 0;
            c.seed = std::stoull(*v, &used);
            if (used != v->size()) throw std::invalid_argument("trailing");
        } catch (const std::exception &) {
            throw ConfigError("'experiment.seed': expected a non-negative integer, got '" + *v + "'");
        }
    }
    exp.finish();

    detail::SectionReader arm(root, "arm");
    if (arm.present()) {
        double count = 0;
        arm.number("joints", count);
        if (!(count >= 1) || count != std::floor(count)) throw ConfigError("'arm.joints' must be a positive integer");
        Vec3 ee = c.arm.ee_offset.translation();
        arm.vec("ee_offset", ee);
        arm.finish();
        ArmModel model;
        model.ee_offset = Pose(Eigen::Translation3d(ee));
        for (int i = 1; i <= static_cast<int>(count); ++i) {
            const std::string name = "joint" + std::to_string(i);
            known.insert(name);
            detail::SectionReader js(root, name);
            if (!js.present()) throw ConfigError("missing section [" + name + "]");
            Joint j;
            j.name = name;
            Vec3 offset = Vec3::Zero();
            js.vec("axis", j.axis);
            js.vec("offset", offset);
            js.number("lower", j.lower);
            js.number("upper", j.upper);
            js.number("velocity_limit", j.velocity_limit);
            js.finish();
            j.parent_offset = Pose(Eigen::Translation3d(offset));
            model.joints.push_back(j);
        }
        c.arm = model;
    }

    for (const auto &kv : root)
        if (!known.count(kv.first)) throw ConfigError("unknown section [" + kv.first + "]");

    try {
        c.validate();
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    return parse_config(in);
}

inline void write_config(std::ostream &out, const ExperimentConfig &c) {
    using detail::format_number;
    using detail::format_vec;
    out << "[rock]\n"
        << "radius = " << format_number(c.rock.radius) << "\n"
        << "thickness = " << format_number(c.rock.thickness) << "\n"
        << "mass = " << format_number(c.rock.mass) << "\n\n";
    out << "[water]\n"
        << "density = " << format_number(c.water.density) << "\n"
        << "drag_coefficient = " << format_number(c.water.drag_coefficient) << "\n";
    if (c.damping) out << "damping_coefficient = " << format_number(*c.damping) << "\n";
    out << "surface_height = " << format_number(c.water.surface_height) << "\n\n";
    out << "[sim]\n"
        << "dt_flight = " << format_number(c.sim.dt_flight) << "\n"
        << "dt_contact = " << format_number(c.sim.dt_contact) << "\n"
        << "max_sim_time = " << format_number(c.sim.max_sim_time) << "\n"
        << "sink_depth_threshold = " << format_number(c.sim.sink_depth_threshold) << "\n"
        << "x_extent = " << format_number(c.sim.x_extent) << "\n\n";
    out << "[scene]\n"
        << "table_height = " << format_number(c.scene.table_height) << "\n"
        << "table_center = " << format_vec(c.scene.table_center) << "\n"
        << "table_size = " << format_vec(c.scene.table_size) << "\n"
        << "table_edge_position = " << format_vec(c.scene.table_edge_position) << "\n"
        << "rock_start_position = " << format_vec(c.scene.rock_start_position) << "\n\n";
    out << "[throw]\n"
        << "swing_radius = " << format_number(c.setup.swing_radius) << "\n"
        << "release_bearing = " << format_number(c.setup.release_bearing) << "\n"
        << "load_back_angle = " << format_number(c.setup.load_back_angle) << "\n"
        << "follow_through_angle = " << format_number(c.setup.follow_through_angle) << "\n"
        << "release_pitch = " << format_number(c.setup.release_pitch) << "\n"
        << "swing_length = " << format_number(c.setup.swing_length) << "\n"
        << "eps_p = " << format_number(c.setup.eps_p) << "\n"
        << "eps_theta = " << format_number(c.setup.eps_theta) << "\n"
        << "eps_v = " << format_number(c.setup.eps_v) << "\n"
        << "release_fraction = " << format_number(c.setup.release_fraction) << "\n"
        << "max_release_tumble_rate = " << format_number(c.setup.max_release_tumble_rate) << "\n\n";
    out << "[sweep]\n"
        << "velocities = " << detail::format_list(c.sweep.velocities) << "\n"
        << "heights = " << detail::format_list(c.sweep.heights) << "\n\n";
    out << "[experiment]\n"
        << "mode = " << to_string(c.mode) << "\n"
        << "output_dir = " << c.output_dir << "\n"
        << "seed = " << c.seed << "\n\n";
    out << "[arm]\n"
        << "joints = " << c.arm.dof() << "\n"
        << "ee_offset = " << format_vec(c.arm.ee_offset.translation()) << "\n";
    for (const auto &j : c.arm.joints) {
        out << "\n[" << "joint" << (&j - c.arm.joints.data()) + 1 << "]\n"
            << "axis = " << format_vec(j.axis) << "\n"
            << "offset = " << format_vec(j.parent_offset.translation()) << "\n"
            << "lower = " << format_number(j.lower) << "\n"
            << "upper = " << format_number(j.upper) << "\n"
            << "velocity_limit = " << format_number(j.velocity_limit) << "\n";
    }
}

inline void save_config(const std::string &path, const ExperimentConfig &c) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config file '" + path + "'");
    write_config(out, c);
    if (!out) throw IoError("failed writing config file '" + path + "'");
}

} // namespace skipstone
