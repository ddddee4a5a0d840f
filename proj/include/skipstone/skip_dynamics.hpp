// Water-impact force model for a flat cylindrical rock.
//
// The rock is a solid cylinder whose body +z axis is the face normal. While
// any part of the bottom face lies at or below the water surface the rock
// receives a planing lift along its normal,
//
//   F_lift = rho * C_D * S_wet * |V|^2 * max(0, sin(beta + alpha)) * n,
//
// plus a linear damping term F_damp = -D * V. Everything here is a pure
// function over value types.
#pragma once

#include <skipstone/types.hpp>

#include <algorithm>
#include <cmath>

namespace skipstone {

struct RockGeometry {
    double radius = 0.035;    // m
    double thickness = 0.015; // m
    double mass = 0.25;       // kg

    void validate() const {
        if (!(radius > 0.0) || !(thickness > 0.0) || !(mass > 0.0))
            throw InvalidArgument("rock radius, thickness and mass must be positive");
    }

    double face_area() const { return kPi * radius * radius; }

    /// Solid-cylinder inertia about the center of mass, body frame (axis = z).
    Mat3 inertia() const {
        const double ixx = mass * (3.0 * radius * radius + thickness * thickness) / 12.0;
        const double izz = 0.5 * mass * radius * radius;
        return Eigen::Vector3d(ixx, ixx, izz).asDiagonal();
    }
};

struct WaterModel {
    double density = 1000.0;        // kg/m^3
    double drag_coefficient = 0.5;  // dimensionless
    double damping_coefficient = 0; // kg/s, normally from calibration
    double surface_height = 0.0;    // m

    void validate() const {
        if (!(density > 0.0)) throw InvalidArgument("water density must be positive");
        if (!(drag_coefficient > 0.0)) throw InvalidArgument("drag coefficient must be positive");
        if (!(damping_coefficient >= 0.0))
            throw InvalidArgument("damping coefficient must be non-negative");
    }
};

struct RockState {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    Vec3 linear_velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero(); // world frame

    /// Face normal: body +z expressed in world.
    Vec3 normal() const { return orientation.normalized() * Vec3::UnitZ(); }
};

struct ImpactState {
    double wetted_area = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    Vec3 normal = Vec3::UnitZ();
    bool in_contact = false;
};

namespace detail {

// Horizontal heading used as the reference axis for the attack angle. Falls
// back to +x when the rock has no horizontal motion.
inline Vec3 horizontal_heading(const Vec3 &velocity) {
    Vec3 h(velocity.x(), velocity.y(), 0.0);
    const double n = h.norm();
    if (n < 1e-12) return Vec3::UnitX();
    return h / n;
}

} // namespace detail

/// Signed angle between the rock face and the water plane. Positive when the
/// leading edge (along the horizontal heading of the velocity) is raised.
inline double compute_alpha(const RockState &state) {
    const Vec3 n = state.normal();
    const Vec3 h = detail::horizontal_heading(state.linear_velocity);
    const double c = std::clamp(n.dot(h), -1.0, 1.0);
    return std::acos(c) - kPi / 2.0;
}

/// Angle between the velocity and the water plane, positive when descending.
inline double compute_beta(const Vec3 &velocity) {
    const double speed = velocity.norm();
    if (!(speed > 0.0) || !std::isfinite(speed))
        throw DegenerateInput("compute_beta: velocity must be non-zero and finite");
    const double c = std::clamp(-velocity.z() / speed, -1.0, 1.0);
    return kPi / 2.0 - std::acos(c);
}

/// Area of the bottom face lying at or below the water surface. The submerged
/// part of a tilted disk is a circular segment cut by the waterline chord.
inline double compute_wetted_area(const RockState &state, const RockGeometry &geom,
                                  const WaterModel &water) {
    const Vec3 n = state.normal();
    const Vec3 bottom_center = state.position - 0.5 * geom.thickness * n;
    const double r = geom.radius;
    const double height = bottom_center.z() - water.surface_height;
    // In-plane slope of the face: |grad z| restricted to the face plane.
    const double slope = std::sqrt(std::max(0.0, 1.0 - n.z() * n.z()));
    if (slope < 1e-12) {
        if (height < 0.0) return geom.face_area();
        if (height > 0.0) return 0.0;
        return 0.5 * geom.face_area();
    }
    const double chord = height / slope; // signed chord distance from center
    if (chord >= r) return 0.0;
    if (chord <= -r) return geom.face_area();
    return r * r * std::acos(chord / r) - chord * std::sqrt(r * r - chord * chord);
}

inline ImpactState compute_impact(const RockState &state, const RockGeometry &geom,
                                  const WaterModel &water) {
    ImpactState impact;
    impact.normal = state.normal();
    impact.wetted_area = compute_wetted_area(state, geom, water);
    impact.in_contact = impact.wetted_area > 0.0;
    impact.alpha = compute_alpha(state);
    impact.beta = state.linear_velocity.norm() > 0.0 ? compute_beta(state.linear_velocity) : 0.0;
    return impact;
}

/// Planing lift along the face normal. Zero when not wetted; the sin(beta +
/// alpha) factor is clamped at zero so the water never pulls on the rock.
inline Vec3 compute_lift_force(const RockState &state, const ImpactState &impact,
                               const WaterModel &water) {
    const double speed2 = state.linear_velocity.squaredNorm();
    if (!impact.in_contact || !(speed2 > 0.0)) return Vec3::Zero();
    const double attack = std::max(0.0, std::sin(impact.beta + impact.alpha));
    return water.density * water.drag_coefficient * impact.wetted_area * speed2 * attack *
           impact.normal;
}

inline Vec3 compute_damping_force(const Vec3 &velocity, const WaterModel &water) {
    return -water.damping_coefficient * velocity;
}

inline Vec3 compute_total_impact_force(const RockState &state, const RockGeometry &geom,
                                       const WaterModel &water) {
    const ImpactState impact = compute_impact(state, geom, water);
    if (!impact.in_contact) return Vec3::Zero();
    return compute_lift_force(state, impact, water) +
           compute_damping_force(state.linear_velocity, water);
}

} // namespace skipstone
