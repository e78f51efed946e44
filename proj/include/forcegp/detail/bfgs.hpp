#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>

#include <Eigen/Dense>

namespace forcegp::detail {

/// Result of one quasi-Newton maximization run.
struct BfgsResult {
    Eigen::VectorXd x;
    double value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
    int iterations = 0;
    bool converged = false;        ///< gradient norm reached tolerance
    bool evaluation_failed = false;  ///< objective was undefined at the start point
};

struct BfgsOptions {
    int max_iters = 200;
    double grad_tol = 1e-6;       ///< infinity norm of the gradient
    double armijo_c1 = 1e-4;
    int max_backtracks = 60;
    double max_step_norm = 20.0;  ///< cap on ||alpha * p|| per iteration
    std::function<void(int iter, double value, double grad_norm)> on_iteration;
};

/// Maximizes an objective with BFGS and a backtracking Armijo line search.
///
/// `value_of(x)` returns the objective value or nullopt where it is
/// undefined (e.g. factorization failure); such trial points are simply
/// rejected by the line search. `grad_of(x)` is only called at accepted
/// iterates. Accepted steps never decrease the objective.
template <class ValueFn, class GradFn>
BfgsResult bfgs_maximize(ValueFn&& value_of, GradFn&& grad_of, const Eigen::VectorXd& x0,
                         const BfgsOptions& opts = {}) {
    BfgsResult res;
    res.x = x0;

    const auto v0 = value_of(res.x);
    if (!v0 || !std::isfinite(*v0)) {
        res.evaluation_failed = true;
        return res;
    }
    res.value = *v0;
    res.grad = grad_of(res.x);
    if (!res.grad.allFinite()) {
        res.evaluation_failed = true;
        return res;
    }

    const Eigen::Index n = x0.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool h_is_seeded = false;

    while (res.iterations < opts.max_iters) {
        const double gnorm = res.grad.lpNorm<Eigen::Infinity>();
        if (opts.on_iteration) opts.on_iteration(res.iterations, res.value, gnorm);
        if (gnorm <= opts.grad_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd p = H * res.grad;
        if (!p.allFinite() || p.dot(res.grad) <= 0.0) {
            H.setIdentity();
            h_is_seeded = false;
            p = res.grad;
        }

        const double pnorm = p.norm();
        double alpha = 1.0;
        if (!h_is_seeded) alpha = std::min(1.0, 1.0 / std::max(1.0, pnorm));
        if (alpha * pnorm > opts.max_step_norm) alpha = opts.max_step_norm / pnorm;

        const double slope = res.grad.dot(p);
        bool accepted = false;
        Eigen::VectorXd x_new;
        double v_new = 0.0;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            x_new = res.x + alpha * p;
            const auto v = value_of(x_new);
            if (v && std::isfinite(*v) && *v >= res.value + opts.armijo_c1 * alpha * slope) {
                v_new = *v;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // stalled; return the best point reached

        Eigen::VectorXd g_new = grad_of(x_new);
        if (!g_new.allFinite()) break;

        const Eigen::VectorXd s = x_new - res.x;
        // BFGS update written for the equivalent minimization of -f.
        const Eigen::VectorXd yk = -(g_new - res.grad);
        const double sy = s.dot(yk);
        if (!h_is_seeded && sy > 0.0) {
            H = (sy / yk.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
            h_is_seeded = true;
        }
        if (sy > 1e-10 * s.norm() * yk.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            H = (I - rho * s * yk.transpose()) * H * (I - rho * yk * s.transpose()) +
                rho * s * s.transpose();
        }

        res.x = x_new;
        res.value = v_new;
        res.grad = std::move(g_new);
        ++res.iterations;
    }
    return res;
}

}  // namespace forcegp::detail
