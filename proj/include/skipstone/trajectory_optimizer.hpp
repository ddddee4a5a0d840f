// Kinematic trajectory optimization for the throw.
//
// The joint trajectory is a clamped B-spline q(s), s = t / T, with control
// points P (num_control_points x dof) and duration T as decision variables:
//
//   minimize    T + L,   L = sum_i |P_{i+1} - P_i|
//   subject to  FK(q(0)) in a box of half-width eps_p around p0
//               FK(q(1)) in a box of half-width eps_p around pf
//               FK(q(s_r)) within eps_p (x, y) and eps_p / 4 (z) of pr
//               angle(R(q(s_r)), R_r) <= eps_theta
//               |v(s_r) - v_des| <= eps_v
//               joint position and velocity limits everywhere.
//
// FK here is the rock frame (arm end-effector composed with the grasp
// offset). Limits are enforced on the control points and on the derivative
// control points, which bounds the whole curve by the convex-hull property.
#pragma once

#include <skipstone/arm_kinematics.hpp>
#include <skipstone/augmented_lagrangian.hpp>
#include <skipstone/bspline.hpp>
#include <skipstone/scene.hpp>

#include <limits>
#include <optional>
#include <tuple>
#include <string>
#include <vector>

namespace skipstone {

struct ThrowProblem {
    Pose p0_des = Pose::Identity();
    Pose pr_des = Pose::Identity();
    Pose pf_des = Pose::Identity();
    Vec3 pdot_r_des = Vec3::Zero();
    double eps_p = 0.05;
    double eps_theta = 0.05;
    double eps_v = 0.2;
    double release_fraction = 0.8;
    /// Optional bound on the release tumble rate (rad/s), the angular
    /// velocity component perpendicular to the rock normal. Spin about the
    /// normal is left free. <= 0 disables it.
    double max_release_tumble_rate = 0.0;
    /// Rock frame relative to the gripper frame.
    Pose grasp_offset = Pose::Identity();
    VecX lower_limits;
    VecX upper_limits;
    VecX velocity_limits;

    double release_z_half_width() const { return eps_p / 4.0; }

    void validate() const {
        if (!(eps_p > 0.0) || !(eps_theta > 0.0) || !(eps_v > 0.0))
            throw InvalidArgument("throw tolerances must be positive");
        if (!(release_fraction > 0.0 && release_fraction < 1.0))
            throw InvalidArgument("release fraction must lie in (0, 1)");
        if (lower_limits.size() != upper_limits.size() ||
            lower_limits.size() != velocity_limits.size() || lower_limits.size() == 0)
            throw DimensionMismatch("throw problem joint limits are inconsistent");
    }
};

struct ThrowTrajectory {
    MatX control_points; // rows are control points
    int spline_degree = 4;
    double duration = 0.0;
    double path_length = 0.0;
    double release_time = 0.0;

    BSplineBasis basis() const {
        return BSplineBasis(static_cast<int>(control_points.rows()), spline_degree);
    }
};

/// Constraint residuals in problem units. Positive numbers are violations.
struct ConstraintResiduals {
    double start_position = 0.0;   // m, worst box overshoot at p0
    double end_position = 0.0;     // m, at pf
    double release_position = 0.0; // m, at pr (z uses eps_p / 4)
    double release_orientation = 0.0; // rad beyond eps_theta
    double release_velocity = 0.0;    // m/s beyond eps_v
    double release_tumble_rate = 0.0; // rad/s beyond the optional bound
    double joint_position = 0.0;   // rad beyond limits
    double joint_velocity = 0.0;   // rad/s beyond limits

    double max() const {
        return std::max({start_position, end_position, release_position, release_orientation,
                         release_velocity, release_tumble_rate, joint_position, joint_velocity});
    }
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    int inner_iterations = 0;
    double max_constraint_violation = 0.0;
    double objective = 0.0;
    double stationarity = 0.0;
    ConstraintResiduals residuals;
    std::vector<AlIterate> merit_trace;
};

struct OptimizerOptions {
    int num_control_points = 10;
    int degree = 4;
    double min_duration = 0.01;
    /// Fraction by which tolerance boxes and limits are tightened inside the
    /// solver so converged points satisfy the nominal bounds strictly.
    double margin = 0.02;
    double length_smoothing = 1e-4;
    /// When set, q(0) is held at this configuration.
    std::optional<VecX> pinned_start;
    AlOptions solver;
};

/// Evaluate q(t) and qdot(t) of a trajectory.
inline std::pair<VecX, VecX> evaluate(const ThrowTrajectory &traj, double t) {
    if (!(t >= -1e-12 && t <= traj.duration * (1.0 + 1e-12) + 1e-12) || !(traj.duration > 0.0))
        throw OutOfRange("trajectory evaluated outside [0, duration]");
    const BSplineBasis basis = traj.basis();
    const double s = std::clamp(t / traj.duration, 0.0, 1.0);
    const VecX q = traj.control_points.transpose() * basis.values(s);
    const VecX qdot = traj.control_points.transpose() * basis.derivatives(s) / traj.duration;
    return {q, qdot};
}

/// The NLP handed to the augmented-Lagrangian solver. Exposed so that tests
/// can check gradients and constraint values directly.
class ThrowNlp {
public:
    ThrowNlp(ThrowProblem problem, const ArmModel &arm, const OptimizerOptions &options,
             double time_scale)
        : problem_(std::move(problem)), arm_(arm.with_tool(problem_.grasp_offset)),
          options_(options), basis_(options.num_control_points, options.degree),
          time_scale_(time_scale) {
        problem_.validate();
        dof_ = arm_.dof();
        if (problem_.lower_limits.size() != dof_) throw DimensionMismatch("limits do not match arm");
        n_ctrl_ = options.num_control_points;
        release_values_ = basis_.values(problem_.release_fraction);
        release_derivs_ = basis_.derivatives(problem_.release_fraction);
        const double shrink = 1.0 - options.margin;
        box_ = problem_.eps_p * shrink;
        box_z_ = problem_.release_z_half_width() * shrink;
        orient_ = 1.0 - std::cos(problem_.eps_theta * shrink);
        vel_ = problem_.eps_v * shrink;
        lo_ = problem_.lower_limits.array() + 1e-4;
        hi_ = problem_.upper_limits.array() - 1e-4;
        vmax_ = problem_.velocity_limits * shrink;
        use_angular_ = problem_.max_release_tumble_rate > 0.0;
        if (use_angular_) ang_ = problem_.max_release_tumble_rate * shrink;

        num_nonlinear_ = 6 * 3 + 2 + (use_angular_ ? 1 : 0);
        num_constraints_ = num_nonlinear_ + 2 * n_ctrl_ * dof_ + 2 * (n_ctrl_ - 1) * dof_ + 1;
    }

    int num_variables() const { return n_ctrl_ * dof_ + 1; }
    int num_constraints() const { return num_constraints_; }
    int dof() const { return dof_; }
    int num_control_points() const { return n_ctrl_; }
    const ThrowProblem &problem() const { return problem_; }
    const ArmModel &rock_arm() const { return arm_; }
    const BSplineBasis &basis() const { return basis_; }

    MatX control_points(const VecX &x) const {
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            x.data(), n_ctrl_, dof_);
    }
    double duration(const VecX &x) const { return x[n_ctrl_ * dof_]; }

    VecX pack(const MatX &control_points, double duration) const {
        VecX x(num_variables());
        for (int i = 0; i < n_ctrl_; ++i)
            for (int j = 0; j < dof_; ++j) x[i * dof_ + j] = control_points(i, j);
        x[n_ctrl_ * dof_] = duration;
        return x;
    }

    double path_length(const VecX &x) const {
        const MatX p = control_points(x);
        double length = 0.0;
        for (int i = 0; i + 1 < n_ctrl_; ++i) length += (p.row(i + 1) - p.row(i)).norm();
        return length;
    }

    double objective(const VecX &x) const {
        const MatX p = control_points(x);
        const double d = options_.length_smoothing;
        double f = duration(x);
        for (int i = 0; i + 1 < n_ctrl_; ++i)
            f += std::sqrt((p.row(i + 1) - p.row(i)).squaredNorm() + d * d) - d;
        return f;
    }

    void objective_gradient(const VecX &x, VecX &grad) const {
        grad = VecX::Zero(num_variables());
        const MatX p = control_points(x);
        const double d = options_.length_smoothing;
        for (int i = 0; i + 1 < n_ctrl_; ++i) {
            const Eigen::RowVectorXd diff = p.row(i + 1) - p.row(i);
            const Eigen::RowVectorXd g = diff / std::sqrt(diff.squaredNorm() + d * d);
            for (int j = 0; j < dof_; ++j) {
                grad[(i + 1) * dof_ + j] += g[j];
                grad[i * dof_ + j] -= g[j];
            }
        }
        grad[n_ctrl_ * dof_] = 1.0;
    }

    void constraints(const VecX &x, VecX &g) const { evaluate_constraints(x, g, nullptr); }

    void constraint_jacobian(const VecX &x, MatX &jac) const {
        VecX g;
        evaluate_constraints(x, g, &jac);
    }

    /// Residuals against the nominal (unshrunk) bounds, in problem units.
    ConstraintResiduals residuals(const VecX &x) const {
        ConstraintResiduals r;
        const MatX p = control_points(x);
        const double T = duration(x);
        auto box_excess = [](const Vec3 &d, const Vec3 &half) {
            return std::max(0.0, (d.cwiseAbs() - half).maxCoeff());
        };
        const Vec3 half(problem_.eps_p, problem_.eps_p, problem_.eps_p);
        const VecX q0 = p.row(0).transpose();
        const VecX qf = p.row(n_ctrl_ - 1).transpose();
        const VecX qr = p.transpose() * release_values_;
        const VecX dqr = p.transpose() * release_derivs_;
        r.start_position = box_excess(forward_kinematics(arm_, q0).translation() -
                                          problem_.p0_des.translation(), half);
        r.end_position = box_excess(forward_kinematics(arm_, qf).translation() -
                                        problem_.pf_des.translation(), half);
        const ChainFrames fr = compute_frames(arm_, qr);
        r.release_position = box_excess(fr.ee.translation() - problem_.pr_des.translation(),
                                        Vec3(problem_.eps_p, problem_.eps_p,
                                             problem_.release_z_half_width()));
        r.release_orientation = std::max(
            0.0, rotation_angle(fr.ee.linear(), problem_.pr_des.linear()) - problem_.eps_theta);
        const Mat6X jac = jacobian_from_frames(fr);
        const Eigen::Matrix<double, 6, 1> twist = jac * dqr / T;
        r.release_velocity =
            std::max(0.0, (twist.tail<3>() - problem_.pdot_r_des).norm() - problem_.eps_v);
        if (use_angular_) {
            const Vec3 n = fr.ee.linear().col(2);
            const Vec3 w = twist.head<3>();
            r.release_tumble_rate =
                std::max(0.0, (w - w.dot(n) * n).norm() - problem_.max_release_tumble_rate);
        }
        for (int i = 0; i < n_ctrl_; ++i)
            for (int j = 0; j < dof_; ++j)
                r.joint_position = std::max({r.joint_position, p(i, j) - problem_.upper_limits[j],
                                             problem_.lower_limits[j] - p(i, j)});
        for (int i = 0; i + 1 < n_ctrl_; ++i) {
            const double c = basis_.derivative_coefficient(i);
            for (int j = 0; j < dof_; ++j)
                r.joint_velocity = std::max(r.joint_velocity,
                                            std::abs(c * (p(i + 1, j) - p(i, j))) / T -
                                                problem_.velocity_limits[j]);
        }
        return r;
    }

private:
    void evaluate_constraints(const VecX &x, VecX &g, MatX *jac) const {
        const int nv = num_variables();
        const int t_index = n_ctrl_ * dof_;
        g.resize(num_constraints_);
        if (jac) jac->setZero(num_constraints_, nv);
        const MatX p = control_points(x);
        const double T = duration(x);
        int row = 0;

        // Position boxes. coeffs[i] is d q / d P_i for the evaluated config.
        auto position_box = [&](const VecX &q, const VecX &coeffs, const Vec3 &target,
                                const Vec3 &half) {
            const ChainFrames f = compute_frames(arm_, q);
            const Vec3 d = f.ee.translation() - target;
            Mat6X jq;
            if (jac) jq = jacobian_from_frames(f);
            for (int k = 0; k < 3; ++k) {
                for (int sign : {1, -1}) {
                    g[row] = sign * d[k] / half[k] - 1.0;
                    if (jac) {
                        for (int i = 0; i < n_ctrl_; ++i) {
                            if (coeffs[i] == 0.0) continue;
                            for (int j = 0; j < dof_; ++j)
                                (*jac)(row, i * dof_ + j) = sign * coeffs[i] * jq(3 + k, j) / half[k];
                        }
                    }
                    ++row;
                }
            }
        };

        VecX first = VecX::Zero(n_ctrl_), last = VecX::Zero(n_ctrl_);
        first[0] = 1.0;
        last[n_ctrl_ - 1] = 1.0;
        position_box(p.row(0).transpose(), first, problem_.p0_des.translation(), Vec3::Constant(box_));
        position_box(p.row(n_ctrl_ - 1).transpose(), last, problem_.pf_des.translation(),
                     Vec3::Constant(box_));
        const VecX qr = p.transpose() * release_values_;
        const VecX dqr = p.transpose() * release_derivs_;
        position_box(qr, release_values_, problem_.pr_des.translation(), Vec3(box_, box_, box_z_));

        const ChainFrames fr = compute_frames(arm_, qr);
        const Mat6X jr = jacobian_from_frames(fr);

        // Release orientation: 1 - cos(angle) <= 1 - cos(eps_theta).
        {
            const Mat3 rd = problem_.pr_des.linear();
            const Mat3 r = fr.ee.linear();
            const double cos_angle = 0.5 * ((rd.transpose() * r).trace() - 1.0);
            g[row] = (1.0 - cos_angle) / orient_ - 1.0;
            if (jac) {
                for (int k = 0; k < dof_; ++k) {
                    const Vec3 &a = fr.axes[k];
                    Mat3 skew;
                    skew << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
                    const double dtrace = (rd.transpose() * skew * r).trace();
                    const double dq = -0.5 * dtrace / orient_;
                    for (int i = 0; i < n_ctrl_; ++i)
                        (*jac)(row, i * dof_ + k) = release_values_[i] * dq;
                }
            }
            ++row;
        }

        // Release linear velocity: |v - v_des|^2 <= eps_v^2.
        {
            const Vec3 v = jr.bottomRows<3>() * dqr / T;
            const Vec3 err = v - problem_.pdot_r_des;
            g[row] = err.squaredNorm() / (vel_ * vel_) - 1.0;
            if (jac) {
                const MatX dv_dq = linear_velocity_jacobian(arm_, qr, dqr) / T;
                const MatX dv_ddq = jr.bottomRows<3>() / T;
                const Eigen::RowVectorXd w_q = 2.0 * err.transpose() * dv_dq / (vel_ * vel_);
                const Eigen::RowVectorXd w_dq = 2.0 * err.transpose() * dv_ddq / (vel_ * vel_);
                for (int i = 0; i < n_ctrl_; ++i)
                    for (int j = 0; j < dof_; ++j)
                        (*jac)(row, i * dof_ + j) =
                            release_values_[i] * w_q[j] + release_derivs_[i] * w_dq[j];
                (*jac)(row, t_index) = 2.0 * err.dot(-v / T) / (vel_ * vel_);
            }
            ++row;
        }

        // Release tumble rate: the part of omega perpendicular to the rock
        // normal, h = |omega|^2 - (omega . n)^2 <= w_max^2.
        if (use_angular_) {
            const Vec3 w = jr.topRows<3>() * dqr / T;
            const Vec3 n = fr.ee.linear().col(2);
            const double wn = w.dot(n);
            const double h = w.squaredNorm() - wn * wn;
            const double scale = ang_ * ang_;
            g[row] = h / scale - 1.0;
            if (jac) {
                Eigen::RowVectorXd h_q = Eigen::RowVectorXd::Zero(dof_);
                Eigen::RowVectorXd h_dq = Eigen::RowVectorXd::Zero(dof_);
                for (int k = 0; k < dof_; ++k) {
                    Vec3 dw = Vec3::Zero();
                    for (int j = k + 1; j < dof_; ++j) dw += fr.axes[k].cross(fr.axes[j]) * dqr[j] / T;
                    const Vec3 dn = fr.axes[k].cross(n);
                    h_q[k] = 2.0 * w.dot(dw) - 2.0 * wn * (n.dot(dw) + w.dot(dn));
                    h_dq[k] = 2.0 * (w.dot(fr.axes[k]) - wn * n.dot(fr.axes[k])) / T;
                }
                for (int i = 0; i < n_ctrl_; ++i)
                    for (int j = 0; j < dof_; ++j)
                        (*jac)(row, i * dof_ + j) =
                            (release_values_[i] * h_q[j] + release_derivs_[i] * h_dq[j]) / scale;
                (*jac)(row, t_index) = -2.0 * h / T / scale;
            }
            ++row;
        }

        // Joint position limits on every control point. A pinned start may
        // sit on a limit, so it gets no margin.
        for (int i = 0; i < n_ctrl_; ++i) {
            const bool pinned = i == 0 && options_.pinned_start.has_value();
            for (int j = 0; j < dof_; ++j) {
                const int idx = i * dof_ + j;
                g[row] = p(i, j) - (pinned ? problem_.upper_limits[j] : hi_[j]);
                if (jac) (*jac)(row, idx) = 1.0;
                ++row;
                g[row] = (pinned ? problem_.lower_limits[j] : lo_[j]) - p(i, j);
                if (jac) (*jac)(row, idx) = -1.0;
                ++row;
            }
        }

        // Joint velocity limits on the derivative control points:
        // |c_i (P_{i+1} - P_i)| <= vmax * T, scaled by vmax * time_scale.
        for (int i = 0; i + 1 < n_ctrl_; ++i) {
            const double c = basis_.derivative_coefficient(i);
            for (int j = 0; j < dof_; ++j) {
                const double diff = c * (p(i + 1, j) - p(i, j));
                const double scale = vmax_[j] * time_scale_;
                for (int sign : {1, -1}) {
                    g[row] = (sign * diff - vmax_[j] * T) / scale;
                    if (jac) {
                        (*jac)(row, (i + 1) * dof_ + j) = sign * c / scale;
                        (*jac)(row, i * dof_ + j) = -sign * c / scale;
                        (*jac)(row, t_index) = -vmax_[j] / scale;
                    }
                    ++row;
                }
            }
        }

        g[row] = (options_.min_duration - T) / options_.min_duration;
        if (jac) (*jac)(row, t_index) = -1.0 / options_.min_duration;
        ++row;
    }

    ThrowProblem problem_;
    ArmModel arm_;
    OptimizerOptions options_;
    BSplineBasis basis_;
    double time_scale_;
    int dof_ = 0;
    int n_ctrl_ = 0;
    VecX release_values_, release_derivs_;
    double box_ = 0, box_z_ = 0, orient_ = 0, vel_ = 0, ang_ = 0;
    VecX lo_, hi_, vmax_;
    bool use_angular_ = false;
    int num_nonlinear_ = 0;
    int num_constraints_ = 0;
};

/// Joint-space seeds for a rock pose: yaw toward the target bearing with a
/// few shoulder/elbow bends.
inline std::vector<VecX> ik_seeds_for(const Pose &target) {
    const double bearing = std::atan2(target.translation().y(), target.translation().x());
    std::vector<VecX> seeds;
    for (const auto &[shoulder, elbow, wrist] :
         {std::tuple{0.9, 1.1, -0.6}, {1.3, 1.4, -0.8}, {0.5, 1.6, -0.3}, {1.5, 0.6, 0.4}}) {
        VecX q = VecX::Zero(7);
        q << bearing, shoulder, 0.0, elbow, 0.0, wrist, 0.0;
        seeds.push_back(q);
    }
    return seeds;
}

/// Inverse kinematics of the rock frame; throws InfeasibleGeometry when the
/// pose cannot be reached from any seed.
inline VecX solve_rock_ik(const ArmModel &arm, const Pose &grasp, const Pose &target,
                          std::optional<VecX> seed = std::nullopt, const std::string &label = "pose") {
    const ArmModel rock_arm = arm.with_tool(grasp);
    std::vector<VecX> seeds;
    if (seed) seeds.push_back(*seed);
    if (arm.dof() == 7)
        for (auto &s : ik_seeds_for(target)) seeds.push_back(s);
    if (seeds.empty()) seeds.push_back(VecX::Zero(arm.dof()));
    IkOptions opts;
    opts.max_iterations = 4000;
    opts.position_tolerance = 1e-4;
    opts.orientation_tolerance = 1e-3;
    opts.dt = 0.05;
    opts.step.gain = 0.5;
    // IK is a static solve: velocity limits would only slow it down.
    ArmModel unlimited = rock_arm;
    for (auto &j : unlimited.joints) j.velocity_limit = 1e6;
    double best = std::numeric_limits<double>::infinity();
    for (const VecX &q0 : seeds) {
        const IkResult r = solve_ik(unlimited, target, q0, opts);
        if (r.converged) return r.q;
        best = std::min(best, r.position_error);
    }
    throw InfeasibleGeometry(label + " is outside the arm's reach (position error " +
                             std::to_string(best) + " m)");
}

/// Builds the throw problem: load pose p0 (from the planner), release pose at
/// the desired height on the swing circle, follow-through pose beyond it.
inline ThrowProblem build_problem(const TaskScene &scene, const Pose &load_pose, double desired_speed,
                                  double desired_height, const ArmModel &arm,
                                  const ThrowSetup &setup = {}) {
    if (!(desired_speed >= 0.0) || !std::isfinite(desired_speed))
        throw InvalidArgument("desired release speed must be non-negative");
    if (!(desired_height > scene.water_surface_height))
        throw InvalidArgument("release height must be above the water surface");
    ThrowProblem p;
    p.p0_des = load_pose;
    p.pr_des = swing_pose(setup, setup.release_bearing, desired_height);
    p.pf_des = swing_pose(setup, setup.release_bearing - setup.follow_through_angle, desired_height);
    p.pdot_r_des = desired_speed * setup.throw_direction.normalized();
    p.eps_p = setup.eps_p;
    p.eps_theta = setup.eps_theta;
    p.eps_v = setup.eps_v;
    p.release_fraction = setup.release_fraction;
    p.max_release_tumble_rate = setup.max_release_tumble_rate;
    p.grasp_offset = default_grasp_offset();
    p.lower_limits = arm.lower_limits();
    p.upper_limits = arm.upper_limits();
    p.velocity_limits = arm.velocity_limits();
    p.validate();
    solve_rock_ik(arm, p.grasp_offset, p.pr_des, std::nullopt, "release point");
    return p;
}

struct ThrowSolution {
    ThrowTrajectory trajectory;
    SolveReport report;
};

/// Joint-space linear interpolation between IK solutions at p0 and pf, with
/// T from the swing arc length and the desired speed.
inline std::pair<MatX, double> initial_guess(const ThrowProblem &problem, const ArmModel &arm,
                                             const OptimizerOptions &options) {
    const VecX q0 = options.pinned_start
                        ? *options.pinned_start
                        : solve_rock_ik(arm, problem.grasp_offset, problem.p0_des, std::nullopt, "load pose");
    const VecX qf = solve_rock_ik(arm, problem.grasp_offset, problem.pf_des, std::nullopt, "final pose");
    MatX p(options.num_control_points, arm.dof());
    for (int i = 0; i < options.num_control_points; ++i) {
        const double s = static_cast<double>(i) / (options.num_control_points - 1);
        p.row(i) = ((1.0 - s) * q0 + s * qf).transpose();
    }
    const Vec3 a = problem.p0_des.translation(), b = problem.pr_des.translation(),
               c = problem.pf_des.translation();
    const double arc = (b - a).norm() + (c - b).norm();
    const double speed = problem.pdot_r_des.norm();
    double T = speed > 1e-9 ? arc / speed : 1.0;
    // respect velocity limits for the interpolated guess
    const BSplineBasis basis(options.num_control_points, options.degree);
    for (int i = 0; i + 1 < options.num_control_points; ++i)
        for (int j = 0; j < arm.dof(); ++j)
            T = std::max(T, std::abs(basis.derivative_coefficient(i) * (p(i + 1, j) - p(i, j))) /
                                problem.velocity_limits[j]);
    return {p, std::max(T, options.min_duration)};
}

inline ThrowSolution solve(const ThrowProblem &problem, const ArmModel &arm,
                           std::optional<ThrowTrajectory> guess = std::nullopt,
                           const OptimizerOptions &options = {}) {
    arm.validate();
    MatX p0;
    double T0;
    if (guess) {
        if (guess->control_points.rows() != options.num_control_points ||
            guess->control_points.cols() != arm.dof())
            throw DimensionMismatch("initial guess does not match the spline layout");
        p0 = guess->control_points;
        T0 = guess->duration;
    } else {
        std::tie(p0, T0) = initial_guess(problem, arm, options);
    }
    if (options.pinned_start) p0.row(0) = options.pinned_start->transpose();

    const ThrowNlp nlp(problem, arm, options, std::max(T0, options.min_duration));
    AlOptions al = options.solver;
    if (options.pinned_start) {
        al.fixed.assign(nlp.num_variables(), false);
        for (int j = 0; j < arm.dof(); ++j) al.fixed[j] = true;
    }
    const AlResult r = solve_augmented_lagrangian(nlp, nlp.pack(p0, T0), al);

    ThrowSolution out;
    out.trajectory.control_points = nlp.control_points(r.x);
    out.trajectory.spline_degree = options.degree;
    out.trajectory.duration = nlp.duration(r.x);
    out.trajectory.path_length = nlp.path_length(r.x);
    out.trajectory.release_time = problem.release_fraction * out.trajectory.duration;

    out.report.residuals = nlp.residuals(r.x);
    out.report.max_constraint_violation = out.report.residuals.max();
    out.report.converged = r.converged && out.report.max_constraint_violation <= 1e-9;
    out.report.iterations = r.outer_iterations;
    out.report.inner_iterations = r.inner_iterations;
    out.report.objective = r.objective;
    out.report.stationarity = r.stationarity;
    out.report.merit_trace = r.merit_trace;
    return out;
}

/// Rock state at the release instant: pose = FK(q_r) * grasp, velocity of the
/// grasp point = v_ee + omega x (R_ee * grasp translation).
inline RockState release_state(const ThrowTrajectory &traj, const ArmModel &arm, const Pose &grasp) {
    const auto [q, qdot] = evaluate(traj, traj.release_time);
    const ChainFrames f = compute_frames(arm, q);
    const Eigen::Matrix<double, 6, 1> twist = jacobian_from_frames(f) * qdot;
    const Pose rock = f.ee * grasp;
    RockState s;
    s.position = rock.translation();
    s.orientation = Quat(rock.linear()).normalized();
    s.angular_velocity = twist.head<3>();
    s.linear_velocity = twist.tail<3>() + twist.head<3>().cross(f.ee.linear() * grasp.translation());
    return s;
}

} // namespace skipstone
