// Task scene and throw geometry shared by the planner and the optimizer.
//
// World frame: z up, water surface at z = surface height, throws go toward
// +x. The arm base sits at the origin. The table lies on the -y side with its
// near edge facing the arm. The throw swings clockwise (seen from above)
// through the release bearing of +90 degrees, where the tangential velocity
// points along +x.
#pragma once

#include <skipstone/skip_dynamics.hpp>
#include <skipstone/types.hpp>

#include <cmath>

namespace skipstone {

struct TaskScene {
    double table_height = 0.25;
    Vec3 table_center = Vec3(0.0, -0.80, 0.25);
    Vec3 table_size = Vec3(0.60, 0.16, 0.25); // x extent, y extent, height
    /// Point on the near table edge (top surface) the rock is dragged to.
    Vec3 table_edge_position = Vec3(0.0, -0.72, 0.25);
    Vec3 rock_start_position = Vec3(0.0, -0.80, 0.2575);
    double water_surface_height = 0.0;

    void validate(const RockGeometry &rock) const {
        if (!(table_height > 0.0)) throw InvalidArgument("table height must be positive");
        if (std::abs(rock_start_position.z() - (table_height + 0.5 * rock.thickness)) > 1e-6)
            throw InvalidArgument("rock must start resting on the table top");
    }
};

struct ThrowSetup {
    double swing_radius = 0.75;            // rock distance from the base axis
    double release_bearing = kPi / 2.0;     // release point direction
    double load_back_angle = kPi / 3.0;     // load pose, degrees of swing before release
    double follow_through_angle = kPi / 4.0; // final pose, swing after release
    double release_pitch = 0.05;            // nose-up attack angle at release, rad
    double swing_length = 0.8;              // minimum straight distance load -> release
    double eps_p = 0.05;
    double eps_theta = 0.05;
    double eps_v = 0.2;
    double release_fraction = 0.8;
    double max_release_tumble_rate = 0.5;  // rad/s; <= 0 disables the bound
    Vec3 throw_direction = Vec3::UnitX();
};

/// Rock orientation for a flat rock with its leading (+x) edge raised by
/// `pitch`. Body +x points along the throw direction.
inline Mat3 pitched_rock_orientation(double pitch) {
    return Eigen::AngleAxisd(-pitch, Vec3::UnitY()).toRotationMatrix();
}

/// Rock frame expressed in the gripper frame. Fingers close along gripper +y,
/// so the rock's face normal (body z) is gripper +y; the rock center sits
/// 2 cm beyond the fingertip center along the approach axis (gripper +z).
inline Pose default_grasp_offset() {
    Mat3 r;
    r << -1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0,   //
        0.0, 1.0, 0.0;
    Pose p = Pose::Identity();
    p.linear() = r;
    p.translation() = Vec3(0.0, 0.0, 0.02);
    return p;
}

/// Rock pose on the swing circle at `bearing` (angle from +x about +z),
/// height `z`, with the release orientation carried around by the bearing.
inline Pose swing_pose(const ThrowSetup &setup, double bearing, double z) {
    Pose p = Pose::Identity();
    const Mat3 yaw = Eigen::AngleAxisd(bearing - setup.release_bearing, Vec3::UnitZ()).toRotationMatrix();
    p.linear() = yaw * pitched_rock_orientation(setup.release_pitch);
    p.translation() = Vec3(setup.swing_radius * std::cos(bearing),
                           setup.swing_radius * std::sin(bearing), z);
    return p;
}

} // namespace skipstone
