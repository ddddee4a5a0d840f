#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace skipstone;

namespace {

constexpr double kCalibratedDamping = 0.225;

WaterModel calibrated() {
    WaterModel w;
    w.damping_coefficient = kCalibratedDamping;
    return w;
}

// Water far below so the rock never touches it.
WaterModel no_water() {
    WaterModel w;
    w.surface_height = -1e6;
    return w;
}

RockState airborne(const Vec3 &p, const Vec3 &v) {
    RockState s;
    s.position = p;
    s.linear_velocity = v;
    return s;
}

SimResult table2_throw(double v, double height = kTable2Height) {
    return simulate_throw(direct_release_state(v, height), RockGeometry{}, calibrated(), SimConfig{});
}

double energy(const RockState &s, const RockGeometry &g, const SimConfig &c) {
    return 0.5 * g.mass * s.linear_velocity.squaredNorm() - g.mass * c.gravity.dot(s.position);
}

} // namespace

TEST(SimConfig, Validation) {
    SimConfig c;
    EXPECT_NO_THROW(c.validate());
    c.dt_contact = 2.0 * c.dt_flight;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.dt_contact = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.sink_depth_threshold = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Outcome, StringRoundTrip) {
    for (Outcome o : {Outcome::Skipped, Outcome::Sank, Outcome::FlewOut, Outcome::TimedOut})
        EXPECT_EQ(outcome_from_string(to_string(o)), o);
    EXPECT_THROW(outcome_from_string("bounced"), InvalidArgument);
}

TEST(Step, FreeFallFromRest) {
    const SimConfig c;
    const double dt = 1e-3;
    const RockState s = step(airborne(Vec3(0, 0, 1), Vec3::Zero()), RockGeometry{}, WaterModel{}, c, dt);
    EXPECT_NEAR(s.position.z() - 1.0, -0.5 * 9.81 * dt * dt, 1e-15);
    EXPECT_NEAR(s.linear_velocity.z(), -9.81 * dt, 1e-15);
}

TEST(Step, ProjectileOverOneSecond) {
    const SimConfig c;
    const Vec3 p0(0, 0, 0.5), v0(10, 0, 0);
    RockState s = airborne(p0, v0);
    for (int i = 0; i < 1000; ++i) s = step(s, RockGeometry{}, no_water(), c, 1e-3);
    EXPECT_LE((s.position - oracle::projectile(p0, v0, c.gravity, 1.0)).norm(), 1e-6);
    EXPECT_LE((s.linear_velocity - (v0 + c.gravity)).norm(), 1e-9);
}

TEST(Step, DampingOnlyContactLosesEnergy) {
    const RockGeometry g;
    WaterModel w;
    w.damping_coefficient = 0.5;
    RockState s = airborne(Vec3(0, 0, 0.5 * g.thickness - 1e-3), Vec3(6, 0, 0)); // flat, sliding: zero lift
    const SimConfig c;
    SimConfig no_gravity = c;
    no_gravity.gravity = Vec3::Zero();
    const RockState next = step(s, g, w, no_gravity, 1e-4);
    EXPECT_LT(next.linear_velocity.squaredNorm(), s.linear_velocity.squaredNorm());
}

TEST(Step, RotatesWithConstantAngularVelocity) {
    RockState s = airborne(Vec3(0, 0, 1), Vec3(1, 0, 0));
    s.angular_velocity = Vec3(0, 0, 2.0);
    const RockState next = step(s, RockGeometry{}, no_water(), SimConfig{}, 0.01);
    EXPECT_NEAR(next.orientation.angularDistance(Quat(Eigen::AngleAxisd(0.02, Vec3::UnitZ()))), 0.0, 1e-12);
    EXPECT_EQ(next.angular_velocity, s.angular_velocity);
}

TEST(Step, NonFiniteStateDiverges) {
    const RockState s = airborne(Vec3(0, 0, 1), Vec3(NAN, 0, 0));
    EXPECT_THROW(step(s, RockGeometry{}, no_water(), SimConfig{}, 1e-3), SimulationDiverged);
    EXPECT_THROW(step(airborne(Vec3(0, 0, 1), Vec3::Zero()), RockGeometry{}, no_water(), SimConfig{}, 0.0),
                 InvalidArgument);
}

TEST(Simulate, EnergyConservedWithoutWater) {
    const RockGeometry g;
    SimConfig c;
    c.max_sim_time = 2.0;
    const RockState s0 = airborne(Vec3(0, 0, 2), Vec3(7, -3, 4));
    const SimResult r = simulate_throw(s0, g, no_water(), c);
    EXPECT_EQ(r.outcome, Outcome::TimedOut);
    EXPECT_NEAR(r.final_time, 2.0, 1e-9);
    const double e0 = energy(s0, g, c);
    for (const auto &sample : r.samples)
        ASSERT_NEAR(energy(sample.state, g, c), e0, 1e-6 * std::abs(e0));
}

TEST(Simulate, HorizontalKineticEnergyNeverGrowsInContact) {
    const SimResult r = table2_throw(14.4);
    for (std::size_t i = 1; i < r.samples.size(); ++i) {
        if (!r.samples[i - 1].in_contact) continue;
        const double before = r.samples[i - 1].state.linear_velocity.head<2>().squaredNorm();
        const double after = r.samples[i].state.linear_velocity.head<2>().squaredNorm();
        ASSERT_LE(after, before * (1.0 + 1e-12)) << "sample " << i;
    }
}

TEST(Simulate, InitialStateMustBeAboveWater) {
    EXPECT_THROW(simulate_throw(airborne(Vec3(0, 0, -0.1), Vec3(5, 0, 0)), RockGeometry{}, calibrated(), SimConfig{}),
                 InvalidArgument);
    EXPECT_THROW(simulate_throw(airborne(Vec3(0, 0, 0.001), Vec3(5, 0, 0)), RockGeometry{}, calibrated(), SimConfig{}),
                 InvalidArgument);
}

TEST(Simulate, Table2SkipCounts) {
    for (const auto &t : table2_targets()) {
        const SimResult r = table2_throw(t.velocity);
        EXPECT_EQ(count_skips(r), t.skips) << t.velocity << " m/s";
    }
}

TEST(Simulate, SlowThrowSinks) {
    const SimResult r = table2_throw(9.9);
    EXPECT_EQ(count_skips(r), 0);
    EXPECT_EQ(r.outcome, Outcome::Sank);
}

TEST(Simulate, SkippedOutcomeMatchesEventCount) {
    const SimResult r = table2_throw(14.4);
    EXPECT_EQ(r.outcome, Outcome::Skipped);
    EXPECT_EQ(count_skips(r), static_cast<int>(r.skip_events.size()));
}

TEST(Simulate, StraightDownNeverSkips) {
    const SimResult r =
        simulate_throw(airborne(Vec3(0, 0, 0.5), Vec3(0, 0, -20)), RockGeometry{}, calibrated(), SimConfig{});
    EXPECT_EQ(count_skips(r), 0);
    EXPECT_EQ(r.outcome, Outcome::Sank);
}

TEST(Simulate, NoContactMeansNoSkips) {
    SimConfig c;
    c.max_sim_time = 0.2;
    const SimResult r = simulate_throw(airborne(Vec3(0, 0, 5), Vec3(3, 0, 0)), RockGeometry{}, calibrated(), c);
    EXPECT_EQ(count_skips(r), 0);
    EXPECT_EQ(r.outcome, Outcome::TimedOut);
}

TEST(Simulate, FlewOutBeyondExtent) {
    SimConfig c;
    c.x_extent = 2.0;
    const SimResult r = simulate_throw(airborne(Vec3(0, 0, 5), Vec3(10, 0, 0)), RockGeometry{}, calibrated(), c);
    EXPECT_EQ(r.outcome, Outcome::FlewOut);
}

TEST(Simulate, SamplesAndEventsAreConsistent) {
    const SimResult r = table2_throw(14.4);
    ASSERT_GT(r.samples.size(), 2u);
    for (std::size_t i = 1; i < r.samples.size(); ++i) ASSERT_GT(r.samples[i].t, r.samples[i - 1].t);
    int index = 0;
    for (const auto &e : r.skip_events) {
        EXPECT_EQ(e.index, ++index);
        EXPECT_GT(e.exit_time, e.entry_time);
        EXPECT_GE(e.exit_position.z(), 0.0);
        EXPECT_LE(e.exit_speed, e.entry_speed);
    }
    for (const auto &s : r.samples) {
        ASSERT_GE(s.wetted_area, 0.0);
        ASSERT_LE(s.wetted_area, RockGeometry{}.face_area());
        ASSERT_EQ(s.in_contact, s.wetted_area > 0.0);
    }
}

TEST(Simulate, Deterministic) {
    const SimResult a = table2_throw(12.6), b = table2_throw(12.6);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    EXPECT_EQ(count_skips(a), count_skips(b));
    EXPECT_EQ(a.total_range, b.total_range);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        ASSERT_EQ(a.samples[i].t, b.samples[i].t);
        ASSERT_EQ(a.samples[i].state.position, b.samples[i].state.position);
    }
}

TEST(Simulate, HalvingStepsChangesRangeLittle) {
    SimConfig fine;
    fine.dt_flight *= 0.5;
    fine.dt_contact *= 0.5;
    fine.record_samples = false;
    for (const auto &t : table2_targets()) {
        const RockState s0 = direct_release_state(t.velocity, kTable2Height);
        const double coarse = table2_throw(t.velocity).total_range;
        const double halved = simulate_throw(s0, RockGeometry{}, calibrated(), fine).total_range;
        EXPECT_LT(std::abs(halved - coarse), 0.01 * coarse) << t.velocity << " m/s";
    }
}

TEST(Simulate, SkipsNonDecreasingWithSpeed) {
    int previous = 0;
    for (double v : default_velocity_grid()) {
        const int n = count_skips(table2_throw(v));
        EXPECT_GE(n, previous) << v << " m/s";
        previous = n;
    }
}

TEST(Simulate, RangeMeasuredFromRelease) {
    const RockState s0 = airborne(Vec3(3, 4, 0.5), Vec3(12, 0, 0));
    RockState pitched = direct_release_state(12, 0.5);
    pitched.position = s0.position;
    const SimResult r = simulate_throw(pitched, RockGeometry{}, calibrated(), SimConfig{});
    EXPECT_NEAR(r.total_range, (r.final_state.position - s0.position).head<2>().norm(), 1e-12);
}
