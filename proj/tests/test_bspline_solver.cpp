#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace skipstone;

namespace {

// minimize (x0 - 2)^2 + (x1 - 1)^2  s.t.  x0 + x1 <= 1,  -x0 <= 0
struct SmallQp {
    int num_variables() const { return 2; }
    int num_constraints() const { return 2; }
    double objective(const VecX &x) const { return std::pow(x[0] - 2, 2) + std::pow(x[1] - 1, 2); }
    void objective_gradient(const VecX &x, VecX &g) const {
        g.resize(2);
        g << 2 * (x[0] - 2), 2 * (x[1] - 1);
    }
    void constraints(const VecX &x, VecX &c) const {
        c.resize(2);
        c << x[0] + x[1] - 1, -x[0];
    }
    void constraint_jacobian(const VecX &, MatX &j) const {
        j.resize(2, 2);
        j << 1, 1, -1, 0;
    }
};

// Rosenbrock inside the unit disk
struct DiskRosenbrock {
    int num_variables() const { return 2; }
    int num_constraints() const { return 1; }
    double objective(const VecX &x) const { return std::pow(1 - x[0], 2) + 100 * std::pow(x[1] - x[0] * x[0], 2); }
    void objective_gradient(const VecX &x, VecX &g) const {
        g.resize(2);
        g << -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] * x[0]), 200 * (x[1] - x[0] * x[0]);
    }
    void constraints(const VecX &x, VecX &c) const {
        c.resize(1);
        c << x.squaredNorm() - 1;
    }
    void constraint_jacobian(const VecX &x, MatX &j) const {
        j.resize(1, 2);
        j << 2 * x[0], 2 * x[1];
    }
};

} // namespace

TEST(BSpline, RejectsBadSizes) {
    EXPECT_THROW(BSplineBasis(3, 4), InvalidArgument);
    EXPECT_THROW(BSplineBasis(5, 0), InvalidArgument);
}

TEST(BSpline, ClampedKnots) {
    const BSplineBasis b(10, 4);
    const auto &k = b.knots();
    ASSERT_EQ(k.size(), 15u);
    for (int i = 0; i <= 4; ++i) EXPECT_EQ(k[i], 0.0);
    for (int i = 10; i < 15; ++i) EXPECT_EQ(k[i], 1.0);
    for (std::size_t i = 1; i < k.size(); ++i) EXPECT_GE(k[i], k[i - 1]);
}

TEST(BSpline, PartitionOfUnityAndNonNegativity) {
    for (auto [n, d] : {std::pair{10, 4}, {6, 3}, {5, 1}, {12, 5}}) {
        const BSplineBasis b(n, d);
        for (int k = 0; k <= 1000; ++k) {
            const VecX v = b.values(k / 1000.0);
            ASSERT_NEAR(v.sum(), 1.0, 1e-12);
            ASSERT_GE(v.minCoeff(), 0.0);
            ASSERT_NEAR(b.derivatives(k / 1000.0).sum(), 0.0, 1e-9);
        }
    }
}

TEST(BSpline, InterpolatesEndControlPoints) {
    const BSplineBasis b(10, 4);
    EXPECT_NEAR(b.values(0.0)[0], 1.0, 1e-15);
    EXPECT_NEAR(b.values(1.0)[9], 1.0, 1e-15);
}

TEST(BSpline, MatchesDeBoorEvaluation) {
    const BSplineBasis b(10, 4);
    std::mt19937_64 rng(1);
    const MatX ctrl = MatX::Random(10, 7);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 200; ++k) {
        const double s = k == 0 ? 0.0 : (k == 1 ? 1.0 : u(rng));
        const auto [q, dq] = oracle::spline_eval(ctrl, 4, s);
        ASSERT_LE((ctrl.transpose() * b.values(s) - q).norm(), 1e-12) << s;
        ASSERT_LE((ctrl.transpose() * b.derivatives(s) - dq).norm(), 1e-9) << s;
    }
}

TEST(BSpline, DerivativesMatchFiniteDifferences) {
    const BSplineBasis b(10, 4);
    const double h = 1e-6;
    for (int k = 1; k < 100; ++k) {
        const double s = k / 100.0 + 0.003;
        if (s + h > 1.0) continue;
        const VecX fd = (b.values(s + h) - b.values(s - h)) / (2 * h);
        ASSERT_LE((fd - b.derivatives(s)).norm(), 1e-6) << s;
    }
}

TEST(BSpline, DerivativeCurveInsideDerivativeControlHull) {
    const BSplineBasis b(10, 4);
    const MatX ctrl = MatX::Random(10, 3);
    double max_coef = 0.0;
    for (int i = 0; i + 1 < 10; ++i)
        max_coef = std::max(max_coef, (b.derivative_coefficient(i) * (ctrl.row(i + 1) - ctrl.row(i))).cwiseAbs().maxCoeff());
    for (int k = 0; k <= 500; ++k)
        ASSERT_LE((ctrl.transpose() * b.derivatives(k / 500.0)).cwiseAbs().maxCoeff(), max_coef + 1e-12);
}

TEST(AugmentedLagrangian, SolvesSmallQp) {
    const AlResult r = solve_augmented_lagrangian(SmallQp{}, Eigen::Vector2d(0.2, 0.1));
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 0.0, 1e-5);
    EXPECT_LE(r.max_violation, 1e-6);
    EXPECT_NEAR(r.objective, 2.0, 1e-4);
}

TEST(AugmentedLagrangian, NonlinearConstraint) {
    const AlResult r = solve_augmented_lagrangian(DiskRosenbrock{}, Eigen::Vector2d(-0.5, 0.5));
    ASSERT_TRUE(r.converged);
    // known optimum on the boundary
    EXPECT_NEAR(r.x[0], 0.7864, 1e-3);
    EXPECT_NEAR(r.x[1], 0.6177, 1e-3);
    EXPECT_LE(r.max_violation, 1e-6);
}

TEST(AugmentedLagrangian, MeritNeverIncreasesWithinOuterIteration) {
    const AlResult r = solve_augmented_lagrangian(DiskRosenbrock{}, Eigen::Vector2d(-1.2, 1.0));
    ASSERT_GT(r.merit_trace.size(), 2u);
    for (std::size_t i = 1; i < r.merit_trace.size(); ++i) {
        if (r.merit_trace[i].outer != r.merit_trace[i - 1].outer) continue;
        ASSERT_LE(r.merit_trace[i].merit, r.merit_trace[i - 1].merit);
    }
}

TEST(AugmentedLagrangian, FixedVariablesStayPut) {
    AlOptions o;
    o.fixed = {false, true};
    const AlResult r = solve_augmented_lagrangian(SmallQp{}, Eigen::Vector2d(0.0, 0.25), o);
    EXPECT_EQ(r.x[1], 0.25);
    EXPECT_NEAR(r.x[0], 0.75, 1e-5);
    o.fixed = {true};
    EXPECT_THROW(solve_augmented_lagrangian(SmallQp{}, Eigen::Vector2d(0, 0), o), DimensionMismatch);
    EXPECT_THROW(solve_augmented_lagrangian(SmallQp{}, VecX::Zero(3)), DimensionMismatch);
}
