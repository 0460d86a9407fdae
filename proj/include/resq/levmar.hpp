#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace resq::levmar {

//
// Bounded Levenberg-Marquardt for small dense problems.
//
// Box constraints are handled by projection: trial steps are clamped into the
// box and bound-pegged components are excluded from the convergence test on
// the gradient. Accepted steps strictly decrease the cost, so the cost
// sequence is monotone nonincreasing by construction.
//

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct Options {
    int max_iterations = 500;
    double gradient_tol = 1e-10;  // scaled (cosine) gradient test
    double step_tol = 1e-12;      // relative step-size test
    double lambda0 = 1e-3;
    Eigen::VectorXd lower;  // empty = unbounded
    Eigen::VectorXd upper;
    double fd_rel_step = 1.4901161193847656e-08;  // sqrt(eps), numeric Jacobian
    // optional relative floor on the damping diagonal; keeps weakly-identified
    // directions damped when all parameters share one natural scale (breaks
    // Marquardt scale invariance, so leave 0 for mixed-scale parameterizations)
    double diag_floor_rel = 0.0;
};

enum class Termination { gradient_tol, step_tol, cost_plateau, max_iterations, stalled };

struct FitReport {
    Eigen::VectorXd params;
    Eigen::VectorXd stderrs;     // sqrt(chi2_red * diag((J^T J)^+))
    Eigen::MatrixXd covariance;  // chi2_red * (J^T J)^+
    double chi2 = 0.0;
    double chi2_reduced = 0.0;
    int iterations = 0;
    bool converged = false;
    Termination termination = Termination::max_iterations;
    double covariance_condition = 0.0;  // (sigma_max/sigma_min)^2 of final J
    bool jacobian_singular = false;
    double gradient_norm = 0.0;  // final scaled gradient measure
};

namespace detail {

inline Eigen::VectorXd clamp_to_box(Eigen::VectorXd x, const Options& opt)
{
    if (opt.lower.size()) x = x.cwiseMax(opt.lower);
    if (opt.upper.size()) x = x.cwiseMin(opt.upper);
    return x;
}

inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& f,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& r0,
                                        const Options& opt)
{
    const auto n = x.size();
    const auto m = r0.size();
    Eigen::MatrixXd jac(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double h = opt.fd_rel_step * std::max(std::abs(x[j]), 1.0);
        // step backward if a forward step would leave the box
        if (opt.upper.size() && x[j] + h > opt.upper[j]) h = -h;
        Eigen::VectorXd xp = x;
        xp[j] += h;
        jac.col(j) = (f(xp) - r0) / h;
    }
    return jac;
}

}  // namespace detail

/// Minimize ||residual(x)||^2 over the box [lower, upper], starting at x0.
/// Throws std::invalid_argument if the residual is non-finite at the start;
/// non-finite residuals encountered later simply reject that step.
inline FitReport minimize(const ResidualFn& residual,
                          Eigen::VectorXd x0,
                          const Options& opt = {},
                          const JacobianFn& jacobian = nullptr)
{
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    x0 = detail::clamp_to_box(std::move(x0), opt);
    VectorXd r = residual(x0);
    if (!r.allFinite())
        throw std::invalid_argument("levmar: residual non-finite at initial point");

    const auto n = x0.size();
    const auto m = r.size();
    double cost = r.squaredNorm();
    double lambda = opt.lambda0;

    FitReport rep;
    VectorXd x = x0;
    MatrixXd jac;
    bool jac_fresh = false;

    auto eval_jacobian = [&]() {
        jac = jacobian ? jacobian(x) : detail::numeric_jacobian(residual, x, r, opt);
        jac_fresh = true;
    };
    eval_jacobian();

    // scaled gradient measure: max_j |g_j| / (||J_j|| ||r||), 0 when r == 0
    auto scaled_gradient = [&](const VectorXd& g) {
        const double rn = std::sqrt(cost);
        if (rn == 0.0) return 0.0;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double cn = jac.col(j).norm();
            if (cn == 0.0) continue;
            // skip components pegged at a bound and pushing outward
            if (opt.lower.size() && x[j] <= opt.lower[j] && g[j] > 0.0) continue;
            if (opt.upper.size() && x[j] >= opt.upper[j] && g[j] < 0.0) continue;
            worst = std::max(worst, std::abs(g[j]) / (cn * rn));
        }
        return worst;
    };

    int iter = 0;
    for (; iter < opt.max_iterations; ++iter) {
        const VectorXd g = jac.transpose() * r;  // 1/2 grad of cost
        rep.gradient_norm = scaled_gradient(g);
        if (rep.gradient_norm <= opt.gradient_tol || cost == 0.0) {
            rep.converged = true;
            rep.termination = Termination::gradient_tol;
            break;
        }

        const MatrixXd jtj = jac.transpose() * jac;
        VectorXd diag = jtj.diagonal().cwiseMax(1e-300);
        if (opt.diag_floor_rel > 0.0)
            diag = diag.cwiseMax(opt.diag_floor_rel * diag.maxCoeff());

        bool accepted = false;
        bool plateau = false;
        double nu = 2.0;
        for (int tries = 0; tries < 60; ++tries) {
            MatrixXd a = jtj;
            a.diagonal() += lambda * diag;
            const VectorXd step = a.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= nu;
                nu *= 2.0;
                continue;
            }
            const VectorXd xt = detail::clamp_to_box(x + step, opt);
            const VectorXd actual = xt - x;
            const VectorXd rt = residual(xt);
            const double ct = rt.allFinite()
                                  ? rt.squaredNorm()
                                  : std::numeric_limits<double>::infinity();
            if (ct < cost) {
                const double step_size = actual.norm();
                const double rel_red = (cost - ct) / cost;
                // gain-ratio lambda update (Nielsen): fast decrease on good
                // quadratic agreement, geometric increase on rejection
                const double predicted =
                    actual.dot(lambda * diag.cwiseProduct(actual) - g);
                const double rho = predicted > 0.0 ? (cost - ct) / predicted : 1.0;
                const double shrink = 1.0 - std::pow(2.0 * rho - 1.0, 3);
                lambda = std::max(lambda * std::max(1.0 / 3.0, shrink), 1e-14);
                x = xt;
                r = rt;
                cost = ct;
                accepted = true;
                jac_fresh = false;
                if (step_size <= opt.step_tol * (x.norm() + opt.step_tol)) {
                    rep.converged = true;
                    rep.termination = Termination::step_tol;
                } else if (rel_red < 1e-13) {
                    rep.converged = true;
                    rep.termination = Termination::cost_plateau;
                }
                break;
            }
            // numerically indistinguishable trial: the cost surface has
            // bottomed out at double resolution
            if (ct - cost <= 8.0 * std::numeric_limits<double>::epsilon() * cost) {
                plateau = true;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if (lambda > 1e15) break;
        }

        if (plateau) {
            rep.converged = true;
            rep.termination = Termination::cost_plateau;
            break;
        }
        if (!accepted) {
            // no descent direction at this scale: treat as stalled-converged if
            // the projected gradient is already small-ish, else report stall
            rep.termination = Termination::stalled;
            rep.converged = rep.gradient_norm <= 1e-6;
            break;
        }
        if (rep.converged) break;
        eval_jacobian();
    }
    if (iter >= opt.max_iterations) {
        rep.termination = Termination::max_iterations;
        rep.converged = false;
    }

    if (!jac_fresh) eval_jacobian();
    rep.iterations = iter;
    rep.params = x;
    rep.chi2 = cost;
    rep.chi2_reduced = m > n ? cost / double(m - n) : cost;

    // covariance via SVD pseudo-inverse of J^T J
    Eigen::JacobiSVD<MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    const double cutoff = smax * 1e-14;
    rep.jacobian_singular = sv.size() == 0 || sv[sv.size() - 1] <= cutoff;
    const double smin = std::max(sv.size() ? sv[sv.size() - 1] : 0.0, cutoff);
    rep.covariance_condition =
        smax > 0.0 ? (smax / smin) * (smax / smin)
                   : std::numeric_limits<double>::infinity();
    VectorXd inv_s2(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        inv_s2[i] = sv[i] > cutoff ? 1.0 / (sv[i] * sv[i]) : 0.0;
    rep.covariance = svd.matrixV() * inv_s2.asDiagonal() *
                     svd.matrixV().transpose() * rep.chi2_reduced;
    rep.stderrs = rep.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    return rep;
}

}  // namespace resq::levmar
