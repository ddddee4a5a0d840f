// Common value types and the error hierarchy used across skipstone.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace skipstone {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Pose = Eigen::Isometry3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Base class for every error raised by the library. `code()` is a stable
/// machine-readable identifier used by the CLI's JSON error output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string &what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string &code() const noexcept { return code_; }

private:
    std::string code_;
};

#define SKIPSTONE_DEFINE_ERROR(Name, code_str)                                  \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string &what) : Error(code_str, what) {}      \
    };

SKIPSTONE_DEFINE_ERROR(DegenerateInput, "degenerate_input")
SKIPSTONE_DEFINE_ERROR(InvalidArgument, "invalid_argument")
SKIPSTONE_DEFINE_ERROR(DimensionMismatch, "dimension_mismatch")
SKIPSTONE_DEFINE_ERROR(SimulationDiverged, "simulation_diverged")
SKIPSTONE_DEFINE_ERROR(InfeasibleGeometry, "infeasible_geometry")
SKIPSTONE_DEFINE_ERROR(OutOfRange, "out_of_range")
SKIPSTONE_DEFINE_ERROR(PlannerStall, "planner_stall")
SKIPSTONE_DEFINE_ERROR(SolverFailure, "solver_failure")
SKIPSTONE_DEFINE_ERROR(CalibrationMissing, "calibration_missing")
SKIPSTONE_DEFINE_ERROR(CalibrationFailed, "calibration_failed")
SKIPSTONE_DEFINE_ERROR(ConfigError, "config_error")
SKIPSTONE_DEFINE_ERROR(IoError, "io_error")

#undef SKIPSTONE_DEFINE_ERROR

inline constexpr double kPi = 3.14159265358979323846;

inline bool all_finite(const Vec3 &v) { return v.allFinite(); }

} // namespace skipstone
