#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>

namespace lonrec {

/// Knobs of the quasi-Newton minimizer. Gradients are central finite
/// differences with step fd_step; convergence fires on a small gradient, a
/// vanishing step, a flat cost over cost_window consecutive iterations, or
/// when the line search can no longer make progress.
struct MinimizeOptions {
    double fd_step = 1e-7;
    double grad_tol = 1e-8;
    double step_tol = 1e-12;
    double cost_rel_tol = 1e-12;
    int cost_window = 5;
    int max_iterations = 10000;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double cost = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    long cost_evaluations = 0;
};

/// Dense BFGS with backtracking Armijo line search. Suited to the smooth,
/// modest-dimension problems in this library (at most a few hundred
/// parameters); the inverse Hessian is kept explicitly.
inline MinimizeResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&)>& f,
                                    Eigen::VectorXd x0, const MinimizeOptions& opt = {}) {
    using Vec = Eigen::VectorXd;
    using Mtx = Eigen::MatrixXd;

    const int n = static_cast<int>(x0.size());
    MinimizeResult res;
    res.x = std::move(x0);
    res.cost = f(res.x);
    res.cost_evaluations = 1;

    auto gradient = [&](const Vec& x, Vec& g) {
        Vec xp = x;
        for (int i = 0; i < n; ++i) {
            const double xi = x(i);
            xp(i) = xi + opt.fd_step;
            const double fp = f(xp);
            xp(i) = xi - opt.fd_step;
            const double fm = f(xp);
            xp(i) = xi;
            g(i) = (fp - fm) / (2.0 * opt.fd_step);
        }
        res.cost_evaluations += 2 * n;
    };

    Vec g(n), g_new(n);
    gradient(res.x, g);
    Mtx h_inv = Mtx::Identity(n, n);
    int flat_count = 0;

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
            res.converged = true;
            return res;
        }

        Vec d = -(h_inv * g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) { // curvature estimate went bad: reset to steepest descent
            h_inv.setIdentity();
            d = -g;
            slope = g.dot(d);
            if (!(slope < 0.0)) {
                res.converged = true;
                return res;
            }
        }

        // backtracking Armijo
        double t = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        bool progress = false;
        for (int ls = 0; ls < 50; ++ls) {
            f_new = f(res.x + t * d);
            ++res.cost_evaluations;
            if (std::isfinite(f_new) && f_new <= res.cost + 1e-4 * t * slope) {
                progress = true;
                break;
            }
            t *= 0.5;
        }
        if (!progress) { // no descent direction helps any more
            res.converged = true;
            return res;
        }

        const Vec step = t * d;
        if (step.lpNorm<Eigen::Infinity>() < opt.step_tol) {
            res.x += step;
            res.cost = f_new;
            res.converged = true;
            return res;
        }

        const Vec x_new = res.x + step;
        gradient(x_new, g_new);

        const Vec y = g_new - g;
        const double sy = step.dot(y);
        if (res.iterations == 0 && sy > 0.0) {
            h_inv *= sy / y.squaredNorm(); // scale the initial inverse Hessian
        }
        if (sy > 1e-12 * step.norm() * y.norm()) {
            const Vec hy = h_inv * y;
            const double yhy = y.dot(hy);
            h_inv += ((sy + yhy) / (sy * sy)) * (step * step.transpose());
            h_inv -= (hy * step.transpose() + step * hy.transpose()) / sy;
        }

        const double drop = std::abs(res.cost - f_new);
        flat_count = (drop <= opt.cost_rel_tol * std::abs(res.cost)) ? flat_count + 1 : 0;

        res.x = x_new;
        res.cost = f_new;
        g.swap(g_new);

        if (flat_count >= opt.cost_window) {
            res.converged = true;
            return res;
        }
    }
    res.converged = false; // iteration cap; the best point so far is returned
    return res;
}

/// Levenberg-Marquardt for sum-of-squares costs: minimizes ‖r(x)‖² with a
/// central finite-difference Jacobian. Each iteration costs the same residual
/// evaluations as one BFGS gradient but converges far faster on the
/// small-residual fitting problems here. Termination mirrors minimize_bfgs:
/// small chi-square gradient, flat cost window, tiny step, or a damping
/// parameter grown past the point of progress.
inline MinimizeResult minimize_levenberg_marquardt(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd x0, int n_residuals, const MinimizeOptions& opt = {}) {
    using Vec = Eigen::VectorXd;
    using Mtx = Eigen::MatrixXd;

    const int n = static_cast<int>(x0.size());
    MinimizeResult res;
    res.x = std::move(x0);

    Vec r(n_residuals), r_trial(n_residuals), rp(n_residuals), rm(n_residuals);
    residuals(res.x, r);
    res.cost = r.squaredNorm();
    res.cost_evaluations = 1;

    Mtx jac(n_residuals, n);
    double mu = -1.0;
    int flat_count = 0;

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        Vec xp = res.x;
        for (int i = 0; i < n; ++i) {
            const double xi = res.x(i);
            xp(i) = xi + opt.fd_step;
            residuals(xp, rp);
            xp(i) = xi - opt.fd_step;
            residuals(xp, rm);
            xp(i) = xi;
            jac.col(i) = (rp - rm) / (2.0 * opt.fd_step);
        }
        res.cost_evaluations += 2 * n;

        const Mtx jtj = jac.transpose() * jac;
        const Vec g = jac.transpose() * r;
        if ((2.0 * g).lpNorm<Eigen::Infinity>() < opt.grad_tol) {
            res.converged = true;
            return res;
        }

        const double diag_max = jtj.diagonal().maxCoeff();
        if (mu < 0.0) mu = 1e-3 * std::max(diag_max, 1e-300);

        bool accepted = false;
        Vec step(n);
        double cost_trial = res.cost;
        for (int inner = 0; inner < 60 && !accepted; ++inner) {
            Mtx a = jtj;
            for (int i = 0; i < n; ++i)
                a(i, i) += mu * std::max(jtj(i, i), 1e-12 * std::max(diag_max, 1e-300));
            step = a.ldlt().solve(-g);
            residuals(res.x + step, r_trial);
            ++res.cost_evaluations;
            cost_trial = r_trial.squaredNorm();
            if (std::isfinite(cost_trial) && cost_trial < res.cost) {
                accepted = true;
                mu = std::max(mu / 3.0, 1e-14);
            } else {
                mu *= 4.0;
                if (mu > 1e14) {
                    res.converged = true; // damping saturated: no descent left
                    return res;
                }
            }
        }
        if (!accepted) {
            res.converged = true;
            return res;
        }

        const double drop = res.cost - cost_trial;
        flat_count = (drop <= opt.cost_rel_tol * std::abs(res.cost)) ? flat_count + 1 : 0;
        const bool tiny_step = step.lpNorm<Eigen::Infinity>() < opt.step_tol;

        res.x += step;
        r.swap(r_trial);
        res.cost = cost_trial;

        if (tiny_step || flat_count >= opt.cost_window) {
            res.converged = true;
            return res;
        }
    }
    res.converged = false;
    return res;
}

} // namespace lonrec
