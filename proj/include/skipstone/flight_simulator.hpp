// Event-driven flight simulation of a thrown rock over water.
//
// Ballistic flight is integrated with classical RK4 at dt_flight. As soon as
// a step would wet the bottom face the step is redone at dt_contact, and all
// wetted steps use dt_contact. Each wetted interval is a contact episode; an
// episode that ends with the rock airborne and rising counts as one skip.
#pragma once

#include <skipstone/skip_dynamics.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace skipstone {

struct SimConfig {
    double dt_flight = 1e-3;
    double dt_contact = 1e-4;
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);
    double max_sim_time = 30.0;
    double sink_depth_threshold = 0.02; // center depth below the surface
    double x_extent = 500.0;
    bool record_samples = true;

    void validate() const {
        if (!(dt_contact > 0.0) || !(dt_contact <= dt_flight))
            throw InvalidArgument("require 0 < dt_contact <= dt_flight");
        if (!(sink_depth_threshold > 0.0))
            throw InvalidArgument("sink_depth_threshold must be positive");
        if (!(max_sim_time > 0.0)) throw InvalidArgument("max_sim_time must be positive");
        if (!(x_extent > 0.0)) throw InvalidArgument("x_extent must be positive");
    }
};

struct SkipEvent {
    int index = 0;
    double entry_time = 0.0;
    double exit_time = 0.0;
    Vec3 entry_position = Vec3::Zero();
    Vec3 exit_position = Vec3::Zero();
    double entry_speed = 0.0;
    double exit_speed = 0.0;
};

/// Skipped: the rock came to rest in the water after at least one skip.
/// Sank: it went under without a single skip.
enum class Outcome { Skipped, Sank, FlewOut, TimedOut };

inline std::string to_string(Outcome o) {
    switch (o) {
    case Outcome::Skipped: return "skipped";
    case Outcome::Sank: return "sank";
    case Outcome::FlewOut: return "flew_out";
    case Outcome::TimedOut: return "timed_out";
    }
    return "unknown";
}

inline Outcome outcome_from_string(const std::string &s) {
    if (s == "skipped") return Outcome::Skipped;
    if (s == "sank") return Outcome::Sank;
    if (s == "flew_out") return Outcome::FlewOut;
    if (s == "timed_out") return Outcome::TimedOut;
    throw InvalidArgument("unknown outcome '" + s + "'");
}

struct Sample {
    double t = 0.0;
    RockState state;
    double wetted_area = 0.0;
    bool in_contact = false;
};

struct SimResult {
    std::vector<Sample> samples;
    std::vector<SkipEvent> skip_events;
    Outcome outcome = Outcome::TimedOut;
    double total_range = 0.0; // horizontal distance from release to final position
    double final_time = 0.0;
    RockState final_state;
};

namespace detail {

struct Derivative {
    Vec3 velocity;
    Vec3 acceleration;
};

inline Quat rotate_by(const Quat &q, const Vec3 &omega, double dt) {
    const double angle = omega.norm() * dt;
    if (angle < 1e-15) return q;
    return (Quat(Eigen::AngleAxisd(angle, omega.normalized())) * q).normalized();
}

inline Derivative evaluate(const RockState &s, const RockGeometry &geom, const WaterModel &water,
                           const SimConfig &config) {
    const Vec3 force = compute_total_impact_force(s, geom, water);
    return {s.linear_velocity, config.gravity + force / geom.mass};
}

} // namespace detail

/// One RK4 step of the translational state. Angular velocity is constant (no
/// torque is applied); orientation is advanced by the exact rotation.
inline RockState step(const RockState &state, const RockGeometry &geom, const WaterModel &water,
                      const SimConfig &config, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");

    auto stage = [&](const RockState &base, const detail::Derivative &k, double h) {
        RockState s = base;
        s.position = base.position + h * k.velocity;
        s.linear_velocity = base.linear_velocity + h * k.acceleration;
        s.orientation = detail::rotate_by(base.orientation, base.angular_velocity, h);
        return s;
    };

    const auto k1 = detail::evaluate(state, geom, water, config);
    const auto k2 = detail::evaluate(stage(state, k1, 0.5 * dt), geom, water, config);
    const auto k3 = detail::evaluate(stage(state, k2, 0.5 * dt), geom, water, config);
    const auto k4 = detail::evaluate(stage(state, k3, dt), geom, water, config);

    RockState next = state;
    next.position += dt / 6.0 * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
    next.linear_velocity += dt / 6.0 *
        (k1.acceleration + 2.0 * k2.acceleration + 2.0 * k3.acceleration + k4.acceleration);
    next.orientation = detail::rotate_by(state.orientation, state.angular_velocity, dt);

    if (!next.position.allFinite() || !next.linear_velocity.allFinite() ||
        !next.orientation.coeffs().allFinite())
        throw SimulationDiverged("step produced a non-finite rock state");
    return next;
}

inline SimResult simulate_throw(const RockState &initial, const RockGeometry &geom,
                                const WaterModel &water, const SimConfig &config) {
    geom.validate();
    water.validate();
    config.validate();
    if (!(initial.position.z() > water.surface_height) ||
        compute_wetted_area(initial, geom, water) > 0.0)
        throw InvalidArgument("simulate_throw: initial rock must be above the water surface");

    SimResult result;
    RockState s = initial;
    double t = 0.0;
    if (config.record_samples) result.samples.push_back({t, s, 0.0, false});

    bool in_episode = false;
    SkipEvent episode;
    auto wetted = [&](const RockState &r) { return compute_wetted_area(r, geom, water); };

    while (true) {
        if (t + 0.5 * config.dt_contact > config.max_sim_time) { // tolerate accumulated rounding in t
            result.outcome = Outcome::TimedOut;
            break;
        }
        const bool wet_now = wetted(s) > 0.0;
        double dt = wet_now ? config.dt_contact : config.dt_flight;
        RockState next = step(s, geom, water, config, dt);
        if (!wet_now && dt > config.dt_contact && wetted(next) > 0.0) {
            dt = config.dt_contact;
            next = step(s, geom, water, config, dt);
        }
        t += dt;
        s = next;

        const double area = wetted(s);
        const bool wet = area > 0.0;
        if (config.record_samples) result.samples.push_back({t, s, area, wet});

        if (wet && !in_episode) {
            in_episode = true;
            episode = SkipEvent{};
            episode.entry_time = t;
            episode.entry_position = s.position;
            episode.entry_speed = s.linear_velocity.norm();
        } else if (!wet && in_episode) {
            in_episode = false;
            if (s.linear_velocity.z() > 0.0) {
                episode.index = static_cast<int>(result.skip_events.size()) + 1;
                episode.exit_time = t;
                episode.exit_position = s.position;
                episode.exit_speed = s.linear_velocity.norm();
                result.skip_events.push_back(episode);
            }
        }

        if (water.surface_height - s.position.z() > config.sink_depth_threshold) {
            result.outcome = result.skip_events.empty() ? Outcome::Sank : Outcome::Skipped;
            break;
        }
        if (s.position.x() - initial.position.x() > config.x_extent) {
            result.outcome = Outcome::FlewOut;
            break;
        }
    }

    result.final_time = t;
    result.final_state = s;
    result.total_range = (s.position - initial.position).head<2>().norm();
    return result;
}

inline int count_skips(const SimResult &result) {
    return static_cast<int>(result.skip_events.size());
}

} // namespace skipstone
