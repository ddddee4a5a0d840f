// CSV and JSON serialization for trajectories, throw problems, solutions and
// simulation results. Numbers are written with 17 significant digits so that
// parsing a written file gives back the same doubles.
#pragma once

#include <skipstone/flight_simulator.hpp>
#include <skipstone/throw_planner.hpp>
#include <skipstone/trajectory_optimizer.hpp>

#include <nlohmann/json.hpp>

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace skipstone {

using json = nlohmann::json;

inline constexpr const char *kTrajectoryHeader = "t,x,y,z,vx,vy,vz,qw,qx,qy,qz,wetted_area,in_contact";

inline void write_trajectory_csv(std::ostream &out, const std::vector<Sample> &samples) {
    out << kTrajectoryHeader << '\n' << std::setprecision(17);
    for (const auto &s : samples) {
        const auto &r = s.state;
        out << s.t << ',' << r.position.x() << ',' << r.position.y() << ',' << r.position.z() << ','
            << r.linear_velocity.x() << ',' << r.linear_velocity.y() << ',' << r.linear_velocity.z() << ','
            << r.orientation.w() << ',' << r.orientation.x() << ',' << r.orientation.y() << ','
            << r.orientation.z() << ',' << s.wetted_area << ',' << (s.in_contact ? 1 : 0) << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double csv_number(const std::string &cell, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception &) {
        throw IoError("line " + std::to_string(line) + ": bad number '" + cell + "'");
    }
}

} // namespace detail

/// Parses a trajectory CSV. Angular velocity is not stored and reads as zero.
inline std::vector<Sample> read_trajectory_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line) || line != kTrajectoryHeader)
        throw IoError("trajectory CSV: unexpected header");
    std::vector<Sample> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 13) throw IoError("line " + std::to_string(line_no) + ": expected 13 columns");
        double v[13];
        for (int i = 0; i < 13; ++i) v[i] = detail::csv_number(cells[i], line_no);
        Sample s;
        s.t = v[0];
        s.state.position = Vec3(v[1], v[2], v[3]);
        s.state.linear_velocity = Vec3(v[4], v[5], v[6]);
        s.state.orientation = Quat(v[7], v[8], v[9], v[10]);
        s.state.angular_velocity = Vec3::Zero();
        s.wetted_area = v[11];
        s.in_contact = v[12] != 0.0;
        out.push_back(s);
    }
    return out;
}

inline json vec_to_json(const Eigen::VectorXd &v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline VecX vec_from_json(const json &j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vec3 vec3_from_json(const json &j) {
    const VecX v = vec_from_json(j);
    if (v.size() != 3) throw IoError("expected a 3-vector in JSON");
    return v;
}

inline json pose_to_json(const Pose &p) {
    const Quat q(p.linear());
    return {{"position", vec_to_json(p.translation())}, {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}}};
}

inline Pose pose_from_json(const json &j) {
    const auto q = j.at("quaternion_wxyz").get<std::vector<double>>();
    if (q.size() != 4) throw IoError("expected a wxyz quaternion in JSON");
    Pose p = Pose::Identity();
    p.linear() = Quat(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
    p.translation() = vec3_from_json(j.at("position"));
    return p;
}

inline json rock_state_to_json(const RockState &s) {
    return {{"position", vec_to_json(s.position)},
            {"quaternion_wxyz", {s.orientation.w(), s.orientation.x(), s.orientation.y(), s.orientation.z()}},
            {"linear_velocity", vec_to_json(s.linear_velocity)},
            {"angular_velocity", vec_to_json(s.angular_velocity)}};
}

inline json to_json(const ThrowProblem &p) {
    return {{"p0_des", pose_to_json(p.p0_des)},
            {"pr_des", pose_to_json(p.pr_des)},
            {"pf_des", pose_to_json(p.pf_des)},
            {"pdot_r_des", vec_to_json(p.pdot_r_des)},
            {"eps_p", p.eps_p},
            {"eps_theta", p.eps_theta},
            {"eps_v", p.eps_v},
            {"release_fraction", p.release_fraction},
            {"max_release_tumble_rate", p.max_release_tumble_rate},
            {"grasp_offset", pose_to_json(p.grasp_offset)},
            {"lower_limits", vec_to_json(p.lower_limits)},
            {"upper_limits", vec_to_json(p.upper_limits)},
            {"velocity_limits", vec_to_json(p.velocity_limits)}};
}

inline ThrowProblem throw_problem_from_json(const json &j) {
    try {
        ThrowProblem p;
        p.p0_des = pose_from_json(j.at("p0_des"));
        p.pr_des = pose_from_json(j.at("pr_des"));
        p.pf_des = pose_from_json(j.at("pf_des"));
        p.pdot_r_des = vec3_from_json(j.at("pdot_r_des"));
        p.eps_p = j.at("eps_p").get<double>();
        p.eps_theta = j.at("eps_theta").get<double>();
        p.eps_v = j.at("eps_v").get<double>();
        p.release_fraction = j.at("release_fraction").get<double>();
        p.max_release_tumble_rate = j.value("max_release_tumble_rate", 0.0);
        p.grasp_offset = pose_from_json(j.at("grasp_offset"));
        p.lower_limits = vec_from_json(j.at("lower_limits"));
        p.upper_limits = vec_from_json(j.at("upper_limits"));
        p.velocity_limits = vec_from_json(j.at("velocity_limits"));
        p.validate();
        return p;
    } catch (const json::exception &e) {
        throw IoError(std::string("throw problem JSON: ") + e.what());
    }
}

inline json to_json(const ThrowTrajectory &t) {
    json rows = json::array();
    for (int i = 0; i < t.control_points.rows(); ++i) rows.push_back(vec_to_json(t.control_points.row(i).transpose()));
    return {{"control_points", rows},
            {"spline_degree", t.spline_degree},
            {"duration", t.duration},
            {"path_length", t.path_length},
            {"release_time", t.release_time}};
}

inline ThrowTrajectory throw_trajectory_from_json(const json &j) {
    try {
        ThrowTrajectory t;
        const auto &rows = j.at("control_points");
        if (!rows.is_array() || rows.empty()) throw IoError("trajectory JSON: no control points");
        const VecX first = vec_from_json(rows[0]);
        t.control_points.resize(static_cast<Eigen::Index>(rows.size()), first.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const VecX r = vec_from_json(rows[i]);
            if (r.size() != first.size()) throw IoError("trajectory JSON: ragged control points");
            t.control_points.row(static_cast<Eigen::Index>(i)) = r.transpose();
        }
        t.spline_degree = j.at("spline_degree").get<int>();
        t.duration = j.at("duration").get<double>();
        t.path_length = j.at("path_length").get<double>();
        t.release_time = j.at("release_time").get<double>();
        return t;
    } catch (const json::exception &e) {
        throw IoError(std::string("trajectory JSON: ") + e.what());
    }
}

inline json to_json(const SolveReport &r) {
    const auto &c = r.residuals;
    return {{"converged", r.converged},
            {"iterations", r.iterations},
            {"inner_iterations", r.inner_iterations},
            {"max_constraint_violation", r.max_constraint_violation},
            {"objective", r.objective},
            {"stationarity", r.stationarity},
            {"residuals",
             {{"start_position", c.start_position},
              {"end_position", c.end_position},
              {"release_position", c.release_position},
              {"release_orientation", c.release_orientation},
              {"release_velocity", c.release_velocity},
              {"release_tumble_rate", c.release_tumble_rate},
              {"joint_position", c.joint_position},
              {"joint_velocity", c.joint_velocity}}}};
}

inline json to_json(const ThrowSolution &s) {
    return {{"trajectory", to_json(s.trajectory)}, {"report", to_json(s.report)}};
}

/// Result summary without the sample log.
inline json to_json(const SimResult &r) {
    json skips = json::array();
    for (const auto &e : r.skip_events)
        skips.push_back({{"index", e.index},
                         {"entry_time", e.entry_time},
                         {"exit_time", e.exit_time},
                         {"entry_position", vec_to_json(e.entry_position)},
                         {"exit_position", vec_to_json(e.exit_position)},
                         {"entry_speed", e.entry_speed},
                         {"exit_speed", e.exit_speed}});
    return {{"skips", count_skips(r)},
            {"outcome", to_string(r.outcome)},
            {"total_range", r.total_range},
            {"final_time", r.final_time},
            {"final_state", rock_state_to_json(r.final_state)},
            {"skip_events", skips}};
}

} // namespace skipstone
