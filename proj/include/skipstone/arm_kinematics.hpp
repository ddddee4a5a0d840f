// Serial-chain arm model: forward kinematics, geometric Jacobian, and
// damped-least-squares differential inverse kinematics.
//
// Joint i's frame is  T_i = T_{i-1} * parent_offset_i * Rot(axis_i, q_i)  and
// the gripper frame is  T_ee = T_n * ee_offset.  Spatial vectors are ordered
// (angular; linear) and expressed in the world frame.
#pragma once

#include <skipstone/types.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace skipstone {

struct Joint {
    std::string name;
    Vec3 axis = Vec3::UnitZ();
    Pose parent_offset = Pose::Identity();
    double lower = -kPi;
    double upper = kPi;
    double velocity_limit = 1.0;
};

struct ArmModel {
    std::vector<Joint> joints;
    Pose ee_offset = Pose::Identity();

    int dof() const { return static_cast<int>(joints.size()); }

    VecX lower_limits() const {
        VecX v(dof());
        for (int i = 0; i < dof(); ++i) v[i] = joints[i].lower;
        return v;
    }
    VecX upper_limits() const {
        VecX v(dof());
        for (int i = 0; i < dof(); ++i) v[i] = joints[i].upper;
        return v;
    }
    VecX velocity_limits() const {
        VecX v(dof());
        for (int i = 0; i < dof(); ++i) v[i] = joints[i].velocity_limit;
        return v;
    }

    /// Copy of this arm whose end-effector frame is moved by `tool`
    /// (expressed in the current end-effector frame).
    ArmModel with_tool(const Pose &tool) const {
        ArmModel out = *this;
        out.ee_offset = ee_offset * tool;
        return out;
    }

    void validate() const {
        if (joints.empty()) throw InvalidArgument("arm has no joints");
        for (const auto &j : joints) {
            if (std::abs(j.axis.norm() - 1.0) > 1e-9)
                throw InvalidArgument("joint '" + j.name + "' axis is not unit length");
            if (!std::isfinite(j.lower) || !std::isfinite(j.upper) || !(j.lower < j.upper))
                throw InvalidArgument("joint '" + j.name + "' position limits invalid");
            if (!std::isfinite(j.velocity_limit) || !(j.velocity_limit > 0.0))
                throw InvalidArgument("joint '" + j.name + "' velocity limit invalid");
        }
    }
};

struct ArmState {
    VecX q;
    VecX qdot;
};

/// Approximate 7-joint IIWA-like chain (link lengths of the 14 kg model,
/// alternating z/y axes, zero pose pointing straight up). The gripper frame
/// has +z as the approach direction and +y as the finger closing axis.
/// Velocity limits are set for throwing, well above the real arm's.
inline ArmModel default_arm() {
    ArmModel arm;
    const double lengths[7] = {0.1575, 0.2025, 0.2045, 0.2155, 0.1845, 0.2155, 0.081};
    const Vec3 axes[7] = {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitY(),
                          Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitZ()};
    const double limits[7] = {2.96, 2.09, 2.96, 2.09, 2.96, 2.09, 3.05};
    for (int i = 0; i < 7; ++i) {
        Joint j;
        j.name = "joint" + std::to_string(i + 1);
        j.axis = axes[i];
        j.parent_offset = Pose(Eigen::Translation3d(0.0, 0.0, lengths[i]));
        j.lower = -limits[i];
        j.upper = limits[i];
        j.velocity_limit = 25.0;
        arm.joints.push_back(j);
    }
    // flange (0.045) plus gripper fingertip center (0.1)
    arm.ee_offset = Pose(Eigen::Translation3d(0.0, 0.0, 0.145));
    return arm;
}

/// World-frame joint axes and origins plus the end-effector pose.
struct ChainFrames {
    std::vector<Vec3> axes;
    std::vector<Vec3> origins;
    Pose ee = Pose::Identity();
};

inline void check_dimension(const ArmModel &model, const VecX &q) {
    if (q.size() != model.dof())
        throw DimensionMismatch("joint vector has " + std::to_string(q.size()) +
                                " entries, arm has " + std::to_string(model.dof()) + " joints");
}

inline ChainFrames compute_frames(const ArmModel &model, const VecX &q) {
    check_dimension(model, q);
    ChainFrames f;
    f.axes.reserve(model.dof());
    f.origins.reserve(model.dof());
    Pose t = Pose::Identity();
    for (int i = 0; i < model.dof(); ++i) {
        const Joint &j = model.joints[i];
        t = t * j.parent_offset;
        f.axes.push_back(t.linear() * j.axis);
        f.origins.push_back(t.translation());
        t = t * Eigen::AngleAxisd(q[i], j.axis);
    }
    f.ee = t * model.ee_offset;
    return f;
}

inline Pose forward_kinematics(const ArmModel &model, const VecX &q) {
    return compute_frames(model, q).ee;
}

inline Mat6X jacobian_from_frames(const ChainFrames &f) {
    const int n = static_cast<int>(f.axes.size());
    Mat6X jac(6, n);
    const Vec3 p = f.ee.translation();
    for (int i = 0; i < n; ++i) {
        jac.block<3, 1>(0, i) = f.axes[i];
        jac.block<3, 1>(3, i) = f.axes[i].cross(p - f.origins[i]);
    }
    return jac;
}

/// Geometric Jacobian, rows (angular; linear), world frame.
inline Mat6X jacobian(const ArmModel &model, const VecX &q) {
    return jacobian_from_frames(compute_frames(model, q));
}

/// d/dq of the end-effector linear velocity J_lin(q) * qdot, a 3 x n matrix.
inline MatX linear_velocity_jacobian(const ArmModel &model, const VecX &q, const VecX &qdot) {
    check_dimension(model, qdot);
    const ChainFrames f = compute_frames(model, q);
    const int n = model.dof();
    const Vec3 p = f.ee.translation();
    MatX out = MatX::Zero(3, n);
    for (int k = 0; k < n; ++k) {
        const Vec3 &ak = f.axes[k];
        Vec3 col = Vec3::Zero();
        for (int j = 0; j < n; ++j) {
            const Vec3 &aj = f.axes[j];
            Vec3 d;
            if (k <= j) {
                // rotating about a_k moves both a_j and the lever p - o_j
                const Vec3 lever = p - f.origins[j];
                d = ak.cross(aj).cross(lever) + aj.cross(ak.cross(lever));
            } else {
                // only the end-effector point moves
                d = aj.cross(ak.cross(p - f.origins[k]));
            }
            col += d * qdot[j];
        }
        out.col(k) = col;
    }
    return out;
}

/// Spatial pose error (angular; linear) that takes `current` to `desired`,
/// expressed in the world frame.
inline Eigen::Matrix<double, 6, 1> pose_error(const Pose &current, const Pose &desired) {
    Eigen::Matrix<double, 6, 1> e;
    const Eigen::AngleAxisd aa(Mat3(desired.linear() * current.linear().transpose()));
    e.head<3>() = aa.angle() * aa.axis();
    e.tail<3>() = desired.translation() - current.translation();
    return e;
}

/// Geodesic rotation angle between two orientations.
inline double rotation_angle(const Mat3 &a, const Mat3 &b) {
    const double c = std::clamp(0.5 * ((a.transpose() * b).trace() - 1.0), -1.0, 1.0);
    return std::acos(c);
}

struct DiffIkOptions {
    double damping = 1e-2;
    double gain = 1.0;
    /// Optional secondary task: pull toward `posture` inside the Jacobian's
    /// null space. Disabled while posture is empty or the gain is zero.
    double posture_gain = 0.0;
    VecX posture;
};

/// Damped-least-squares solve of J qdot = gain * error / dt, plus the
/// optional null-space posture term. The result is scaled uniformly so every
/// joint respects its velocity limit.
inline VecX differential_ik_step(const ArmModel &model, const ArmState &state, const Pose &desired,
                                 double dt, const DiffIkOptions &options = {}) {
    if (!(dt > 0.0)) throw InvalidArgument("differential_ik_step: dt must be positive");
    const ChainFrames f = compute_frames(model, state.q);
    const Mat6X jac = jacobian_from_frames(f);
    const Eigen::Matrix<double, 6, 1> twist = options.gain * pose_error(f.ee, desired) / dt;
    const bool use_posture = options.posture_gain > 0.0 && options.posture.size() > 0;
    if (twist.isZero(0.0) && !use_posture) return VecX::Zero(model.dof());

    const double lambda2 = options.damping * options.damping;
    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    const auto solver = jjt.ldlt();
    VecX qdot = jac.transpose() * solver.solve(twist);
    if (use_posture) {
        check_dimension(model, options.posture);
        const VecX pull = options.posture_gain * (options.posture - state.q);
        qdot += pull - jac.transpose() * solver.solve(jac * pull);
    }

    double scale = 1.0;
    for (int i = 0; i < model.dof(); ++i) {
        const double limit = model.joints[i].velocity_limit;
        if (std::abs(qdot[i]) > limit) scale = std::min(scale, limit / std::abs(qdot[i]));
    }
    return qdot * scale;
}

struct IkResult {
    VecX q;
    bool converged = false;
    bool plateaued = false;
    int iterations = 0;
    double position_error = 0.0;
    double orientation_error = 0.0;
};

struct IkOptions {
    double dt = 1e-2;
    int max_iterations = 5000;
    double position_tolerance = 1e-4;
    double orientation_tolerance = 1e-3;
    int plateau_window = 100;
    double plateau_tolerance = 1e-6;
    DiffIkOptions step;
};

/// Iterates differential IK from `seed`, clamping joints to their position
/// limits, until the pose is reached or the error plateaus (improves by less
/// than plateau_tolerance over plateau_window consecutive steps).
inline IkResult solve_ik(const ArmModel &model, const Pose &target, const VecX &seed,
                         const IkOptions &options = {}) {
    check_dimension(model, seed);
    IkResult result;
    ArmState state{seed, VecX::Zero(model.dof())};
    const VecX lo = model.lower_limits(), hi = model.upper_limits();
    std::vector<double> history;
    for (int it = 0; it <= options.max_iterations; ++it) {
        const Pose current = forward_kinematics(model, state.q);
        result.position_error = (target.translation() - current.translation()).norm();
        result.orientation_error = rotation_angle(current.linear(), target.linear());
        result.iterations = it;
        if (result.position_error < options.position_tolerance &&
            result.orientation_error < options.orientation_tolerance) {
            result.converged = true;
            break;
        }
        const double err = result.position_error + result.orientation_error;
        history.push_back(err);
        const int w = options.plateau_window;
        if (static_cast<int>(history.size()) > w &&
            history[history.size() - 1 - w] - err < options.plateau_tolerance) {
            result.plateaued = true;
            break;
        }
        state.qdot = differential_ik_step(model, state, target, options.dt, options.step);
        state.q = (state.q + options.dt * state.qdot).cwiseMax(lo).cwiseMin(hi);
    }
    result.q = state.q;
    return result;
}

} // namespace skipstone
