// Everything: rock-water impact model, flight simulation, arm kinematics,
// throw trajectory optimization, task planner and experiment harness.
#pragma once

#include <skipstone/arm_kinematics.hpp>
#include <skipstone/augmented_lagrangian.hpp>
#include <skipstone/bspline.hpp>
#include <skipstone/config.hpp>
#include <skipstone/experiment.hpp>
#include <skipstone/flight_simulator.hpp>
#include <skipstone/io.hpp>
#include <skipstone/scene.hpp>
#include <skipstone/skip_dynamics.hpp>
#include <skipstone/throw_planner.hpp>
#include <skipstone/trajectory_optimizer.hpp>
#include <skipstone/types.hpp>
