// Augmented-Lagrangian solver for smooth inequality-constrained problems
//
//   minimize f(x)  subject to  g_i(x) <= 0.
//
// Outer loop: Powell-Hestenes-Rockafellar multiplier updates with a growing
// penalty. Inner loop: L-BFGS with a backtracking Armijo line search on
//
//   phi(x) = f(x) + 1/(2 rho) * sum_i (max(0, lambda_i + rho g_i)^2 - lambda_i^2).
#pragma once

#include <skipstone/types.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <deque>
#include <limits>
#include <vector>

namespace skipstone {

template <class P>
concept ConstrainedProblem = requires(const P &p, const VecX &x, VecX &v, MatX &m) {
    { p.num_variables() } -> std::convertible_to<int>;
    { p.num_constraints() } -> std::convertible_to<int>;
    { p.objective(x) } -> std::convertible_to<double>;
    p.objective_gradient(x, v);
    p.constraints(x, v);
    p.constraint_jacobian(x, m);
};

struct AlOptions {
    int max_outer_iterations = 40;
    int max_inner_iterations = 400;
    int lbfgs_memory = 12;
    double feasibility_tolerance = 1e-6;
    double optimality_tolerance = 1e-5;
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double max_penalty = 1e9;
    /// Variables with fixed[i] == true are never moved.
    std::vector<bool> fixed;
};

struct AlIterate {
    int outer = 0;
    double merit = 0.0;
};

struct AlResult {
    VecX x;
    bool converged = false;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double objective = 0.0;
    double max_violation = 0.0;
    double stationarity = 0.0;
    /// Merit value after every accepted inner step, tagged with its outer
    /// iteration. Within one outer iteration it never increases.
    std::vector<AlIterate> merit_trace;
};

namespace detail {

template <ConstrainedProblem P>
class AlMerit {
public:
    AlMerit(const P &problem, const VecX &lambda, double rho, const std::vector<bool> &fixed)
        : problem_(problem), lambda_(lambda), rho_(rho), fixed_(fixed) {}

    double value(const VecX &x) const {
        VecX g(problem_.num_constraints());
        problem_.constraints(x, g);
        double phi = problem_.objective(x);
        for (int i = 0; i < g.size(); ++i) {
            const double shifted = std::max(0.0, lambda_[i] + rho_ * g[i]);
            phi += (shifted * shifted - lambda_[i] * lambda_[i]) / (2.0 * rho_);
        }
        return phi;
    }

    double value_and_gradient(const VecX &x, VecX &grad) const {
        const int m = problem_.num_constraints();
        VecX g(m);
        MatX jac(m, problem_.num_variables());
        problem_.constraints(x, g);
        problem_.constraint_jacobian(x, jac);
        problem_.objective_gradient(x, grad);
        double phi = problem_.objective(x);
        VecX mult(m);
        for (int i = 0; i < m; ++i) {
            const double shifted = std::max(0.0, lambda_[i] + rho_ * g[i]);
            phi += (shifted * shifted - lambda_[i] * lambda_[i]) / (2.0 * rho_);
            mult[i] = shifted;
        }
        grad += jac.transpose() * mult;
        for (std::size_t i = 0; i < fixed_.size(); ++i)
            if (fixed_[i]) grad[static_cast<int>(i)] = 0.0;
        return phi;
    }

private:
    const P &problem_;
    const VecX &lambda_;
    double rho_;
    const std::vector<bool> &fixed_;
};

inline double max_violation(const VecX &g) {
    return g.size() == 0 ? 0.0 : std::max(0.0, g.maxCoeff());
}

} // namespace detail

template <ConstrainedProblem P>
AlResult solve_augmented_lagrangian(const P &problem, const VecX &x0, const AlOptions &options = {}) {
    const int n = problem.num_variables();
    const int m = problem.num_constraints();
    if (x0.size() != n) throw DimensionMismatch("initial guess has the wrong size");
    if (!options.fixed.empty() && static_cast<int>(options.fixed.size()) != n)
        throw DimensionMismatch("fixed-variable mask has the wrong size");

    AlResult result;
    VecX x = x0;
    VecX lambda = VecX::Zero(m);
    double rho = options.initial_penalty;
    VecX g(m);

    problem.constraints(x, g);
    double prev_violation = detail::max_violation(g);

    bool have_best = false;
    VecX best_x;
    double best_objective = std::numeric_limits<double>::infinity();
    auto consider = [&](const VecX &candidate, double violation) {
        if (violation > options.feasibility_tolerance) return;
        const double f = problem.objective(candidate);
        if (f < best_objective) {
            best_objective = f;
            best_x = candidate;
            have_best = true;
        }
    };
    consider(x, prev_violation);

    for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
        result.outer_iterations = outer + 1;
        const detail::AlMerit<P> merit(problem, lambda, rho, options.fixed);

        // L-BFGS on the merit function
        std::deque<VecX> s_hist, y_hist;
        VecX grad(n), grad_new(n);
        double phi = merit.value_and_gradient(x, grad);
        double stationarity = grad.lpNorm<Eigen::Infinity>();
        for (int k = 0; k < options.max_inner_iterations; ++k) {
            if (stationarity <= options.optimality_tolerance) break;

            VecX d = -grad;
            {
                const int h = static_cast<int>(s_hist.size());
                std::vector<double> alpha(h), rho_h(h);
                VecX q = grad;
                for (int i = h - 1; i >= 0; --i) {
                    rho_h[i] = 1.0 / y_hist[i].dot(s_hist[i]);
                    alpha[i] = rho_h[i] * s_hist[i].dot(q);
                    q -= alpha[i] * y_hist[i];
                }
                if (h > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
                for (int i = 0; i < h; ++i) {
                    const double beta = rho_h[i] * y_hist[i].dot(q);
                    q += (alpha[i] - beta) * s_hist[i];
                }
                d = -q;
            }
            double slope = grad.dot(d);
            if (!(slope < 0.0)) {
                s_hist.clear();
                y_hist.clear();
                d = -grad;
                slope = grad.dot(d);
            }

            double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(1e-12, d.norm())) : 1.0;
            bool accepted = false;
            VecX x_new;
            double phi_new = phi;
            for (int ls = 0; ls < 60; ++ls) {
                x_new = x + step * d;
                phi_new = merit.value(x_new);
                if (std::isfinite(phi_new) && phi_new <= phi + 1e-4 * step * slope) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;

            phi_new = merit.value_and_gradient(x_new, grad_new);
            VecX s = x_new - x;
            VecX y = grad_new - grad;
            if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
                s_hist.push_back(std::move(s));
                y_hist.push_back(std::move(y));
                if (static_cast<int>(s_hist.size()) > options.lbfgs_memory) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                }
            }
            const double decrease = phi - phi_new;
            x = x_new;
            grad = grad_new;
            phi = phi_new;
            stationarity = grad.lpNorm<Eigen::Infinity>();
            ++result.inner_iterations;
            result.merit_trace.push_back({outer, phi});
            if (decrease <= 1e-15 * (1.0 + std::abs(phi))) break;
        }

        problem.constraints(x, g);
        const double violation = detail::max_violation(g);
        result.stationarity = stationarity;
        consider(x, violation);

        if (violation <= options.feasibility_tolerance &&
            stationarity <= std::max(options.optimality_tolerance, 1e-8 * rho)) {
            result.converged = true;
            break;
        }
        for (int i = 0; i < m; ++i) lambda[i] = std::max(0.0, lambda[i] + rho * g[i]);
        if (violation > 0.25 * prev_violation)
            rho = std::min(options.max_penalty, rho * options.penalty_growth);
        prev_violation = violation;
    }

    problem.constraints(x, g);
    if (result.converged && have_best) x = best_x;
    if (!result.converged && detail::max_violation(g) <= options.feasibility_tolerance) {
        // feasible but not stationary to tolerance: still a usable point
        result.converged = true;
        if (have_best) x = best_x;
    }
    problem.constraints(x, g);
    result.x = x;
    result.objective = problem.objective(x);
    result.max_violation = detail::max_violation(g);
    return result;
}

} // namespace skipstone
