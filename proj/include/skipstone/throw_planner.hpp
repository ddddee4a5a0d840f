// Five-state task planner: drag the rock to the table edge, pick it up with
// an antipodal grasp, carry it to the load pose, throw, then stop.
//
// Keyframes are gripper poses. The first three states are tracked with
// differential IK; the throw executes an optimized joint trajectory. Grasping
// and dragging are kinematic: a closed gripper rigidly carries the rock, and
// a completed drag places the rock at the table edge.
#pragma once

#include <skipstone/arm_kinematics.hpp>
#include <skipstone/flight_simulator.hpp>
#include <skipstone/scene.hpp>
#include <skipstone/trajectory_optimizer.hpp>

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace skipstone {

enum class PlannerState { DragToEdge, PickUp, LoadUp, Throw, Terminal };

inline std::string to_string(PlannerState s) {
    switch (s) {
    case PlannerState::DragToEdge: return "DragToEdge";
    case PlannerState::PickUp: return "PickUp";
    case PlannerState::LoadUp: return "LoadUp";
    case PlannerState::Throw: return "Throw";
    case PlannerState::Terminal: return "Terminal";
    }
    return "unknown";
}

enum class GripperCommand { None, Open, Close };

inline std::string to_string(GripperCommand g) {
    switch (g) {
    case GripperCommand::None: return "none";
    case GripperCommand::Open: return "open";
    case GripperCommand::Close: return "close";
    }
    return "unknown";
}

struct Keyframe {
    double time = 0.0; // relative to the start of the state
    Pose pose = Pose::Identity();
    /// Executed once this keyframe has been reached.
    GripperCommand gripper = GripperCommand::None;
};

struct PlannerOptions {
    double position_tolerance = 0.01;
    double orientation_tolerance = 0.05;
    double cartesian_speed = 0.3; // keyframe spacing, m/s
    double min_segment_duration = 0.4;
    double settle_time = 3.0;     // extra time after the last keyframe before a stall
    double control_dt = 0.01;
    double tracking_gain = 0.5;
    double posture_gain = 0.5;    // null-space pull toward an IK solution of the last keyframe
    double hover_height = 0.04;   // above the rock top before pressing
    double press_depth = 0.003;
    double pregrasp_distance = 0.05;
    double lift_height = 0.15;
    double edge_tolerance = 1e-3;
};

/// Gripper orientation pointing straight down with the fingers closing along
/// world x.
inline Mat3 downward_gripper_orientation() {
    Mat3 r;
    r.col(0) = Vec3::UnitY();
    r.col(1) = Vec3::UnitX();
    r.col(2) = -Vec3::UnitZ();
    return r;
}

namespace detail {

inline double segment_duration(const Pose &a, const Pose &b, const PlannerOptions &o) {
    return std::max(o.min_segment_duration, (b.translation() - a.translation()).norm() / o.cartesian_speed);
}

inline void append_keyframe(std::vector<Keyframe> &frames, const Pose &from, const Pose &to,
                            const PlannerOptions &o, GripperCommand g = GripperCommand::None) {
    const Pose &prev = frames.empty() ? from : frames.back().pose;
    const double t0 = frames.empty() ? 0.0 : frames.back().time;
    frames.push_back({t0 + segment_duration(prev, to, o), to, g});
}

inline Pose make_pose(const Mat3 &r, const Vec3 &p) {
    Pose out = Pose::Identity();
    out.linear() = r;
    out.translation() = p;
    return out;
}

} // namespace detail

/// Press-and-drag keyframes: hover above the rock, press on its top face,
/// slide horizontally to the table edge, lift off. Empty when the rock is
/// already at the edge.
inline std::vector<Keyframe> plan_drag_keyframes(const TaskScene &scene, const RockGeometry &rock,
                                                 const Vec3 &rock_position,
                                                 const PlannerOptions &o = {}) {
    const Vec3 edge(scene.table_edge_position.x(), scene.table_edge_position.y(), rock_position.z());
    if ((rock_position - edge).head<2>().norm() <= o.edge_tolerance) return {};
    const Mat3 down = downward_gripper_orientation();
    const double top = scene.table_height + rock.thickness;
    const double press_z = top - o.press_depth;
    const double hover_z = top + o.hover_height;

    const Pose hover = detail::make_pose(down, Vec3(rock_position.x(), rock_position.y(), hover_z));
    const Pose press = detail::make_pose(down, Vec3(rock_position.x(), rock_position.y(), press_z));
    const Pose slid = detail::make_pose(down, Vec3(edge.x(), edge.y(), press_z));
    const Pose lift = detail::make_pose(down, Vec3(edge.x(), edge.y(), hover_z));

    std::vector<Keyframe> frames;
    frames.push_back({o.min_segment_duration, hover, GripperCommand::Close});
    detail::append_keyframe(frames, hover, press, o);
    detail::append_keyframe(frames, press, slid, o);
    detail::append_keyframe(frames, slid, lift, o, GripperCommand::Open);
    return frames;
}

inline std::vector<Keyframe> plan_drag_keyframes(const TaskScene &scene, const RockGeometry &rock,
                                                 const PlannerOptions &o = {}) {
    return plan_drag_keyframes(scene, rock, scene.rock_start_position, o);
}

/// Flat rock resting at the table edge, body x pointing away from the arm
/// base axis so the radial grasp matches the swing poses.
inline Pose rock_pose_at_edge(const TaskScene &scene, const RockGeometry &rock) {
    const Vec3 p(scene.table_edge_position.x(), scene.table_edge_position.y(),
                 scene.table_height + 0.5 * rock.thickness);
    const double bearing = std::atan2(p.y(), p.x());
    return detail::make_pose(
        Eigen::AngleAxisd(bearing - kPi / 2.0, Vec3::UnitZ()).toRotationMatrix(), p);
}

/// Antipodal grasp keyframes: pre-grasp stand-off along the approach axis,
/// grasp pose (fingers on the two flat faces), close, lift.
inline std::vector<Keyframe> plan_pick_keyframes(const TaskScene &scene, const RockGeometry &rock,
                                                 const Pose &gripper_start,
                                                 const PlannerOptions &o = {}) {
    const Pose grasp = default_grasp_offset();
    const Pose rock_pose = rock_pose_at_edge(scene, rock);
    const Pose grasp_pose = rock_pose * grasp.inverse();
    const Vec3 approach = grasp_pose.linear().col(2);
    Pose pregrasp = grasp_pose;
    pregrasp.translation() -= o.pregrasp_distance * approach;
    Pose lift = grasp_pose;
    lift.translation().z() += o.lift_height;

    std::vector<Keyframe> frames;
    detail::append_keyframe(frames, gripper_start, pregrasp, o, GripperCommand::Open);
    detail::append_keyframe(frames, pregrasp, grasp_pose, o, GripperCommand::Close);
    detail::append_keyframe(frames, grasp_pose, lift, o);
    return frames;
}

/// Bearing of the load pose: at least load_back_angle behind the release
/// bearing and far enough that the straight load-to-release distance is at
/// least swing_length.
inline double load_bearing(const ThrowSetup &setup) {
    if (setup.swing_length >= 2.0 * setup.swing_radius)
        throw InfeasibleGeometry("swing length exceeds the swing circle diameter");
    const double needed = 2.0 * std::asin(setup.swing_length / (2.0 * setup.swing_radius));
    return setup.release_bearing + std::max(setup.load_back_angle, needed);
}

/// Load pose p0: on the swing circle, on the far side from the water.
inline Pose plan_load_pose(const ThrowSetup &setup, double height) {
    return swing_pose(setup, load_bearing(setup), height);
}

/// What the planner sees when deciding whether the current state is done.
struct WorldSnapshot {
    double time = 0.0;
    double state_deadline = 0.0;
    bool keyframes_exhausted = false;
    double position_error = 0.0;
    double orientation_error = 0.0;
    bool release_executed = false;
};

inline PlannerState next_state(PlannerState s) {
    switch (s) {
    case PlannerState::DragToEdge: return PlannerState::PickUp;
    case PlannerState::PickUp: return PlannerState::LoadUp;
    case PlannerState::LoadUp: return PlannerState::Throw;
    default: return PlannerState::Terminal;
    }
}

/// One transition decision. Throws PlannerStall when the state has run past
/// its deadline without completing.
inline PlannerState advance(PlannerState s, const WorldSnapshot &w, const PlannerOptions &o = {}) {
    if (s == PlannerState::Terminal) return s;
    bool done;
    if (s == PlannerState::Throw)
        done = w.release_executed;
    else
        done = w.keyframes_exhausted && w.position_error < o.position_tolerance &&
               w.orientation_error < o.orientation_tolerance;
    if (done) return next_state(s);
    if (w.time > w.state_deadline)
        throw PlannerStall("planner stalled in state " + to_string(s) + " at t = " +
                           std::to_string(w.time) + " (pose error " + std::to_string(w.position_error) +
                           " m, " + std::to_string(w.orientation_error) + " rad)");
    return s;
}

/// One row of the planner trace: a command sent to the arm.
struct TraceRow {
    PlannerState state = PlannerState::DragToEdge;
    double time = 0.0;
    Pose commanded = Pose::Identity();
    GripperCommand gripper = GripperCommand::None;
};

inline void write_trace_csv(std::ostream &out, const std::vector<TraceRow> &trace) {
    out << "state,t,x,y,z,qw,qx,qy,qz,gripper\n";
    out.precision(10);
    for (const auto &r : trace) {
        const Quat q(r.commanded.linear());
        const Vec3 &p = r.commanded.translation();
        out << to_string(r.state) << ',' << r.time << ',' << p.x() << ',' << p.y() << ',' << p.z()
            << ',' << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z() << ','
            << to_string(r.gripper) << '\n';
    }
}

struct StateVisit {
    PlannerState state;
    double entry_time;
};

struct RehearsalResult {
    std::vector<StateVisit> visits;
    std::vector<TraceRow> trace;
    VecX load_configuration;
    Pose load_pose = Pose::Identity();
    ThrowProblem problem;
    ThrowSolution solution;
    RockState release;
};

/// Starting arm configuration: elbow bent, facing the table.
inline VecX home_configuration(const ArmModel &arm) {
    VecX q = VecX::Zero(arm.dof());
    if (arm.dof() == 7) q << -kPi / 2.0, 0.6, 0.0, -1.0, 0.0, 1.2, 0.0;
    return q;
}

/// Runs the planner against a kinematic world: the arm follows the commanded
/// poses through differential IK and the rock follows the gripper once
/// grasped. Ends in Terminal right after the release.
class ThrowPlanner {
public:
    ThrowPlanner(TaskScene scene, RockGeometry rock, ArmModel arm, ThrowSetup setup = {},
                 PlannerOptions options = {}, OptimizerOptions optimizer = {})
        : scene_(std::move(scene)), rock_(rock), arm_(std::move(arm)), setup_(setup),
          options_(options), optimizer_(std::move(optimizer)) {
        scene_.validate(rock_);
        arm_.validate();
        if (!(options_.control_dt > 0.0)) throw InvalidArgument("control dt must be positive");
    }

    PlannerState state() const { return state_; }
    const VecX &configuration() const { return q_; }

    RehearsalResult run(double desired_speed, double desired_height) {
        if (!(desired_height > scene_.water_surface_height))
            throw InvalidArgument("release height must be above the water surface");
        RehearsalResult out;
        q_ = home_configuration(arm_);
        rock_pose_ = detail::make_pose(Mat3::Identity(), scene_.rock_start_position);
        attached_ = false;
        time_ = 0.0;
        state_ = PlannerState::DragToEdge;
        out.load_pose = plan_load_pose(setup_, desired_height);

        while (state_ != PlannerState::Terminal) {
            out.visits.push_back({state_, time_});
            switch (state_) {
            case PlannerState::DragToEdge:
                track(plan_drag_keyframes(scene_, rock_, rock_pose_.translation(), options_), out);
                rock_pose_ = rock_pose_at_edge(scene_, rock_);
                break;
            case PlannerState::PickUp:
                track(plan_pick_keyframes(scene_, rock_, gripper_pose(), options_), out);
                break;
            case PlannerState::LoadUp:
                track(load_keyframes(out.load_pose), out);
                out.load_configuration = q_;
                break;
            case PlannerState::Throw:
                execute_throw(desired_speed, desired_height, out);
                break;
            case PlannerState::Terminal: break;
            }
        }
        out.visits.push_back({state_, time_});
        return out;
    }

private:
    Pose gripper_pose() const { return forward_kinematics(arm_, q_); }

    /// LoadUp waypoints sweep counter-clockwise around the base through the
    /// water side, which keeps the base joint inside its limits.
    std::vector<Keyframe> load_keyframes(const Pose &load_pose) const {
        const Pose grasp_inv = default_grasp_offset().inverse();
        const Pose start = gripper_pose();
        const double z = load_pose.translation().z();
        const double start_bearing =
            std::atan2(rock_pose_.translation().y(), rock_pose_.translation().x());
        double end_bearing = load_bearing(setup_);
        while (end_bearing < start_bearing) end_bearing += 2.0 * kPi;
        std::vector<Keyframe> frames;
        const int pieces = std::max(1, static_cast<int>(std::ceil((end_bearing - start_bearing) / (kPi / 4.0))));
        for (int k = 1; k <= pieces; ++k) {
            const double b = start_bearing + (end_bearing - start_bearing) * k / pieces;
            const Pose target = k == pieces ? load_pose : swing_pose(setup_, b, z);
            detail::append_keyframe(frames, start, target * grasp_inv, options_);
        }
        return frames;
    }

    Pose interpolate(const Pose &a, const Pose &b, double u) const {
        u = std::clamp(u, 0.0, 1.0);
        Pose p = Pose::Identity();
        p.translation() = (1.0 - u) * a.translation() + u * b.translation();
        p.linear() = Quat(a.linear()).slerp(u, Quat(b.linear())).toRotationMatrix();
        return p;
    }

    void emit(RehearsalResult &out, const Pose &commanded, GripperCommand g) {
        if (state_ == PlannerState::Terminal) return;
        out.trace.push_back({state_, time_, commanded, g});
    }

    void apply_gripper(GripperCommand g) {
        if (g == GripperCommand::Open) {
            attached_ = false;
        } else if (g == GripperCommand::Close && state_ == PlannerState::PickUp) {
            const Pose rock_in_gripper = gripper_pose() * default_grasp_offset();
            const double pos_err = (rock_in_gripper.translation() - rock_pose_.translation()).norm();
            const double normal_err =
                std::acos(std::clamp(std::abs(rock_in_gripper.linear().col(2).dot(rock_pose_.linear().col(2))),
                                     -1.0, 1.0));
            if (pos_err > options_.position_tolerance || normal_err > options_.orientation_tolerance)
                throw InfeasibleGeometry("gripper closed away from a valid grasp pose");
            attached_ = true;
        }
    }

    void track(std::vector<Keyframe> frames, RehearsalResult &out) {
        const double t0 = time_;
        const Pose start = gripper_pose();
        if (!frames.empty()) {
            // leave enough time to reach the first keyframe from here
            const double lead = detail::segment_duration(start, frames.front().pose, options_) -
                                frames.front().time;
            if (lead > 0.0)
                for (auto &f : frames) f.time += lead;
        }
        const double span = frames.empty() ? 0.0 : frames.back().time;
        WorldSnapshot w;
        w.state_deadline = t0 + span + options_.settle_time;
        std::size_t next = 0;
        DiffIkOptions ik;
        ik.gain = options_.tracking_gain;
        if (options_.posture_gain > 0.0 && !frames.empty()) {
            // null-space reference: a static IK solution of the final keyframe
            try {
                ik.posture = solve_rock_ik(arm_, Pose::Identity(), frames.back().pose, q_);
                ik.posture_gain = options_.posture_gain;
            } catch (const InfeasibleGeometry &) {
            }
        }
        while (true) {
            const double local = time_ - t0;
            while (next < frames.size() && local >= frames[next].time) {
                // a gripper command fires once its keyframe is reached
                const Pose cur = gripper_pose();
                if (frames[next].gripper != GripperCommand::None &&
                    ((cur.translation() - frames[next].pose.translation()).norm() >= options_.position_tolerance ||
                     rotation_angle(cur.linear(), frames[next].pose.linear()) >= options_.orientation_tolerance))
                    break;
                apply_gripper(frames[next].gripper);
                emit(out, frames[next].pose, frames[next].gripper);
                ++next;
            }
            Pose target = start;
            if (!frames.empty()) {
                std::size_t seg = std::min(next, frames.size() - 1);
                const double seg_start = seg == 0 ? 0.0 : frames[seg - 1].time;
                const Pose &from = seg == 0 ? start : frames[seg - 1].pose;
                target = interpolate(from, frames[seg].pose,
                                     (local - seg_start) / std::max(1e-9, frames[seg].time - seg_start));
            }
            const Pose cur = gripper_pose();
            w.time = time_;
            w.keyframes_exhausted = next >= frames.size();
            const Pose final_target = frames.empty() ? start : frames.back().pose;
            w.position_error = (final_target.translation() - cur.translation()).norm();
            w.orientation_error = rotation_angle(cur.linear(), final_target.linear());
            const PlannerState s = advance(state_, w, options_);
            if (s != state_) {
                state_ = s;
                return;
            }
            emit(out, target, GripperCommand::None);
            ArmState as{q_, VecX::Zero(arm_.dof())};
            const VecX qdot = differential_ik_step(arm_, as, target, options_.control_dt, ik);
            q_ = (q_ + options_.control_dt * qdot).cwiseMax(arm_.lower_limits()).cwiseMin(arm_.upper_limits());
            time_ += options_.control_dt;
            if (attached_) rock_pose_ = gripper_pose() * default_grasp_offset();
        }
    }

    void execute_throw(double desired_speed, double desired_height, RehearsalResult &out) {
        out.problem = build_problem(scene_, rock_pose_, desired_speed, desired_height, arm_, setup_);
        OptimizerOptions opt = optimizer_;
        opt.pinned_start = q_;
        out.solution = solve(out.problem, arm_, std::nullopt, opt);
        if (!out.solution.report.converged)
            throw SolverFailure("throw trajectory did not converge (max violation " +
                                std::to_string(out.solution.report.max_constraint_violation) +
                                ", " + std::to_string(out.solution.report.iterations) +
                                " outer iterations)");
        const ThrowTrajectory &traj = out.solution.trajectory;
        const double t0 = time_;
        WorldSnapshot w;
        w.state_deadline = t0 + traj.duration + options_.settle_time;
        for (double local = 0.0;; local = std::min(local + options_.control_dt, traj.release_time)) {
            q_ = evaluate(traj, local).first;
            time_ = t0 + local;
            w.time = time_;
            w.release_executed = local >= traj.release_time;
            if (w.release_executed) {
                out.release = release_state(traj, arm_, default_grasp_offset());
                attached_ = false;
                emit(out, gripper_pose(), GripperCommand::Open);
            } else {
                emit(out, gripper_pose(), GripperCommand::None);
            }
            state_ = advance(state_, w, options_);
            if (state_ == PlannerState::Terminal) return;
        }
    }

    TaskScene scene_;
    RockGeometry rock_;
    ArmModel arm_;
    ThrowSetup setup_;
    PlannerOptions options_;
    OptimizerOptions optimizer_;
    PlannerState state_ = PlannerState::DragToEdge;
    VecX q_;
    Pose rock_pose_ = Pose::Identity();
    bool attached_ = false;
    double time_ = 0.0;
};

} // namespace skipstone
