// Clamped uniform B-spline basis on the normalized interval [0, 1].
#pragma once

#include <skipstone/types.hpp>

#include <algorithm>
#include <vector>

namespace skipstone {

class BSplineBasis {
public:
    BSplineBasis() = default;

    BSplineBasis(int num_control_points, int degree)
        : num_control_points_(num_control_points), degree_(degree) {
        if (degree < 1) throw InvalidArgument("spline degree must be at least 1");
        if (num_control_points < degree + 1)
            throw InvalidArgument("spline needs at least degree + 1 control points");
        const int num_knots = num_control_points + degree + 1;
        knots_.assign(num_knots, 0.0);
        const int interior = num_control_points - degree - 1;
        for (int i = 0; i < num_knots; ++i) {
            if (i <= degree)
                knots_[i] = 0.0;
            else if (i >= num_control_points)
                knots_[i] = 1.0;
            else
                knots_[i] = static_cast<double>(i - degree) / (interior + 1);
        }
    }

    int num_control_points() const { return num_control_points_; }
    int degree() const { return degree_; }
    const std::vector<double> &knots() const { return knots_; }

    /// Basis function values at s (Cox-de Boor), length num_control_points.
    VecX values(double s) const { return values_of_degree(s, degree_); }

    /// d/ds of every basis function at s.
    VecX derivatives(double s) const {
        VecX out = VecX::Zero(num_control_points_);
        const VecX lower = values_of_degree(s, degree_ - 1);
        // lower has num_control_points + 1 entries for the degree - 1 basis
        for (int i = 0; i < num_control_points_; ++i) {
            const double a = knots_[i + degree_] - knots_[i];
            const double b = knots_[i + degree_ + 1] - knots_[i + 1];
            double d = 0.0;
            if (a > 0.0) d += degree_ / a * lower[i];
            if (b > 0.0) d -= degree_ / b * lower[i + 1];
            out[i] = d;
        }
        return out;
    }

    /// Coefficient c_i such that the derivative control points are
    /// c_i * (P_{i+1} - P_i); the derivative curve lies in their convex hull.
    double derivative_coefficient(int i) const {
        return degree_ / (knots_[i + degree_ + 1] - knots_[i + 1]);
    }

private:
    VecX values_of_degree(double s, int degree) const {
        s = std::clamp(s, 0.0, 1.0);
        const int m = static_cast<int>(knots_.size()) - 1;
        // degree-0 functions on every knot span; the last non-empty span is
        // closed on the right so that s = 1 is covered.
        VecX n = VecX::Zero(m);
        int last_span = 0;
        for (int i = 0; i < m; ++i)
            if (knots_[i] < knots_[i + 1]) last_span = i;
        for (int i = 0; i < m; ++i) {
            if (knots_[i] <= s && s < knots_[i + 1]) n[i] = 1.0;
        }
        if (s >= knots_[last_span + 1]) n[last_span] = 1.0;

        for (int p = 1; p <= degree; ++p) {
            VecX next = VecX::Zero(m - p);
            for (int i = 0; i < m - p; ++i) {
                double v = 0.0;
                const double a = knots_[i + p] - knots_[i];
                const double b = knots_[i + p + 1] - knots_[i + 1];
                if (a > 0.0) v += (s - knots_[i]) / a * n[i];
                if (b > 0.0) v += (knots_[i + p + 1] - s) / b * n[i + 1];
                next[i] = v;
            }
            n = next;
        }
        return n;
    }

    int num_control_points_ = 0;
    int degree_ = 0;
    std::vector<double> knots_;
};

} // namespace skipstone
