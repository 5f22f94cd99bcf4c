#pragma once

/**
 * Bound-constrained augmented-Lagrangian solver for small dense problems
 *
 *     min ||r(x)||^2   s.t.  c(x) = 0,  g(x) >= 0,  lower <= x <= upper.
 *
 * Each iteration minimizes a quadratic model of the objective plus the
 * inequality penalty, with a Gauss-Newton Hessian and a BFGS correction for the
 * remaining curvature, on the null space of the linearized equalities. The
 * step is globalized by Armijo backtracking on the augmented Lagrangian
 *
 *     ||r||^2 + lambda'c + (rho/2)||c||^2 + (1/2mu) sum(max(0, nu - mu g)^2 - nu^2),
 *
 * projected onto the bounds. Equality multipliers are least-squares
 * estimates; inequality multipliers get first-order updates whenever the
 * current subproblem is approximately stationary.
 *
 * Derivatives are forward finite differences unless the problem supplies its
 * own evaluator.
 */

#include "morphwing/common.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace morphwing {

/// Values (and optionally Jacobians restricted to free columns) at a point.
struct NlpPoint {
    VecX r, c, g;
    MatX Jr, Jc, Jg; // full column count; fixed columns are zero
};

/// `free[i] != 0` marks columns whose Jacobian entries are required.
using NlpEvaluator = std::function<NlpPoint(const VecX& x, const std::vector<char>& free, bool jacobian)>;

struct NlpProblem {
    VecX lower;
    VecX upper;
    NlpEvaluator evaluate;

    int size() const { return static_cast<int>(lower.size()); }
};

using VectorFunction = std::function<VecX(const VecX&)>;

/// Forward-difference step for a variable at `xi`; it points backward when a
/// forward step would leave the box.
inline double fd_step(double relative, double xi, double upper = std::numeric_limits<double>::infinity()) {
    const double h = relative * std::max(1.0, std::abs(xi));
    return xi + h > upper ? -h : h;
}

/// Builds an evaluator from plain vector functions using forward differences.
/// Empty functions mean "no such block".
inline NlpProblem make_nlp(VecX lower, VecX upper, VectorFunction residuals, VectorFunction equalities = {},
                           VectorFunction inequalities = {}, double relative_step = 1e-6) {
    NlpProblem p;
    p.lower = std::move(lower);
    p.upper = std::move(upper);
    const VecX hi = p.upper;
    p.evaluate = [=](const VecX& x, const std::vector<char>& free, bool jac) {
        auto eval = [&](const VecX& xx, NlpPoint& pt) {
            pt.r = residuals ? residuals(xx) : VecX();
            pt.c = equalities ? equalities(xx) : VecX();
            pt.g = inequalities ? inequalities(xx) : VecX();
        };
        NlpPoint pt;
        eval(x, pt);
        if (!jac) return pt;
        const auto n = x.size();
        pt.Jr = MatX::Zero(pt.r.size(), n);
        pt.Jc = MatX::Zero(pt.c.size(), n);
        pt.Jg = MatX::Zero(pt.g.size(), n);
        VecX xp = x;
        NlpPoint q;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!free[static_cast<std::size_t>(i)]) continue;
            const double h = fd_step(relative_step, x[i], hi[i]);
            xp[i] = x[i] + h;
            eval(xp, q);
            pt.Jr.col(i) = (q.r - pt.r) / h;
            pt.Jc.col(i) = (q.c - pt.c) / h;
            pt.Jg.col(i) = (q.g - pt.g) / h;
            xp[i] = x[i];
        }
        return pt;
    };
    return p;
}

struct NlpOptions {
    double eq_tol = 1e-6;
    double ineq_tol = 1e-8;
    double stationarity_tol = 1e-5;
    int max_iterations = 100;
    double mu_initial = 10.0;  // inequality penalty
    double mu_growth = 10.0;
    double mu_max = 1e12;
    double rho_initial = 10.0; // equality penalty in the merit function
    double rho_max = 1e14;
    int max_backtracks = 30;
    bool bfgs = true;
    double damping_initial = 1e-3;
    double damping_min = 1e-10;
    double damping_max = 1e10;
    std::function<void(const std::string&)> log; // per-iteration trace when set
};

enum class NlpStatus { Converged, MaxIterations, Infeasible, LineSearchFailure, NonFinite };

inline std::string to_string(NlpStatus s) {
    switch (s) {
    case NlpStatus::Converged: return "converged";
    case NlpStatus::MaxIterations: return "max-iterations";
    case NlpStatus::Infeasible: return "infeasible";
    case NlpStatus::LineSearchFailure: return "line-search-failure";
    case NlpStatus::NonFinite: return "non-finite";
    }
    return "unknown";
}

struct NlpResult {
    VecX x;
    NlpStatus status = NlpStatus::MaxIterations;
    int iterations = 0;
    double objective = 0;
    double eq_violation = 0;
    double ineq_violation = 0;
    double stationarity = 0;
    VecX lambda; // equality multipliers
    VecX nu;     // inequality multipliers (>= 0)
    std::string message;

    bool converged() const { return status == NlpStatus::Converged; }
};

namespace detail {

inline VecX project(const VecX& x, const VecX& lo, const VecX& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

inline double merit_value(const NlpPoint& p, const VecX& lambda, double rho, const VecX& nu, double mu) {
    double v = p.r.squaredNorm();
    if (p.c.size()) v += lambda.dot(p.c) + 0.5 * rho * p.c.squaredNorm();
    for (Eigen::Index j = 0; j < p.g.size(); ++j) {
        const double t = std::max(0.0, nu[j] - mu * p.g[j]);
        v += (t * t - nu[j] * nu[j]) / (2 * mu);
    }
    return v;
}

/// Gradient of ||r||^2 plus the inequality penalty.
inline VecX objective_gradient(const NlpPoint& p, const VecX& nu, double mu) {
    VecX g = 2.0 * p.Jr.transpose() * p.r;
    if (p.g.size()) g.noalias() -= p.Jg.transpose() * (nu - mu * p.g).cwiseMax(0.0);
    return g;
}

/// Gauss-Newton Hessian of ||r||^2 plus the inequality penalty on columns `idx`.
inline MatX gauss_newton(const NlpPoint& p, const VecX& nu, double mu, const std::vector<int>& idx) {
    const int nf = static_cast<int>(idx.size());
    auto cols = [&](const MatX& J) {
        MatX out(J.rows(), nf);
        for (int k = 0; k < nf; ++k) out.col(k) = J.col(idx[static_cast<std::size_t>(k)]);
        return out;
    };
    MatX H = MatX::Zero(nf, nf);
    if (p.r.size()) {
        const MatX Jr = cols(p.Jr);
        H.selfadjointView<Eigen::Lower>().rankUpdate(Jr.transpose(), 2.0);
    }
    if (p.g.size()) {
        std::vector<int> act;
        for (Eigen::Index j = 0; j < p.g.size(); ++j)
            if (nu[j] - mu * p.g[j] > 0) act.push_back(static_cast<int>(j));
        if (!act.empty()) {
            MatX Jg(act.size(), nf);
            for (std::size_t a = 0; a < act.size(); ++a)
                for (int k = 0; k < nf; ++k) Jg(static_cast<Eigen::Index>(a), k) = p.Jg(act[a], idx[static_cast<std::size_t>(k)]);
            H.selfadjointView<Eigen::Lower>().rankUpdate(Jg.transpose(), mu);
        }
    }
    H.triangularView<Eigen::StrictlyUpper>() = H.transpose();
    return H;
}

inline double projected_gradient_norm(const VecX& x, const VecX& grad, const VecX& lo, const VecX& hi) {
    return (project(x - grad, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

inline MatX select_cols(const MatX& J, const std::vector<int>& idx) {
    MatX out(J.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = J.col(idx[k]);
    return out;
}

inline VecX select(const VecX& v, const std::vector<int>& idx) {
    VecX out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[idx[k]];
    return out;
}

/// Orthogonal split of the free space into range(Jc^T) and its complement.
struct NullSpace {
    MatX Y, Z;
    MatX R1;                              // r x r upper triangular
    Eigen::PermutationMatrix<Eigen::Dynamic> P;
    Eigen::Index rank = 0;

    NullSpace(const MatX& Jc, Eigen::Index nf) {
        if (Jc.rows() == 0) {
            Y = MatX(nf, 0);
            Z = MatX::Identity(nf, nf);
            return;
        }
        Eigen::ColPivHouseholderQR<MatX> qr(Jc.transpose());
        rank = qr.rank();
        const MatX Q = qr.householderQ();
        Y = Q.leftCols(rank);
        Z = Q.rightCols(nf - rank);
        R1 = qr.matrixR().topLeftCorner(rank, rank).template triangularView<Eigen::Upper>();
        P = qr.colsPermutation();
    }

    /// Range-space component p with Jc Y p = -c (least squares when rank deficient).
    VecX range_step(const VecX& c) const {
        if (rank == 0) return VecX::Zero(0);
        const VecX pc = P.transpose() * c;
        return -R1.transpose().template triangularView<Eigen::Lower>().solve(pc.head(rank));
    }

    /// Multipliers with Jc^T lambda = -v on the range space.
    VecX multipliers(const VecX& v, Eigen::Index mc) const {
        VecX w = VecX::Zero(mc);
        if (rank == 0) return w;
        w.head(rank) = R1.template triangularView<Eigen::Upper>().solve(-(Y.transpose() * v));
        return P * w;
    }
};

inline bool finite(const NlpPoint& p) { return p.r.allFinite() && p.c.allFinite() && p.g.allFinite(); }

} // namespace detail

/// Solves `problem` from `x0`. Never throws for numerical trouble; the status
/// and message describe the failure.
inline NlpResult solve_augmented_lagrangian(const NlpProblem& problem, const VecX& x0, const NlpOptions& opt = {}) {
    using namespace detail;
    const int n = problem.size();
    if (x0.size() != n || problem.upper.size() != n) throw DomainError("solve_augmented_lagrangian: dimension mismatch");
    if ((problem.lower.array() > problem.upper.array()).any())
        throw DomainError("solve_augmented_lagrangian: lower bound exceeds upper bound");

    const VecX& lo = problem.lower;
    const VecX& hi = problem.upper;
    std::vector<char> free(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) free[static_cast<std::size_t>(i)] = lo[i] < hi[i];

    NlpResult res;
    VecX x = project(x0, lo, hi);
    NlpPoint pt = problem.evaluate(x, free, true);
    if (!finite(pt)) {
        res.x = x;
        res.status = NlpStatus::NonFinite;
        res.message = "non-finite values at the starting point";
        return res;
    }
    const Eigen::Index mc = pt.c.size();
    VecX lambda = VecX::Zero(mc);
    VecX nu = VecX::Zero(pt.g.size());
    double mu = opt.mu_initial;
    double rho = opt.rho_initial;
    double inner_tol = std::max(opt.stationarity_tol, 1e-2);
    double prev_ineq = std::numeric_limits<double>::infinity();
    MatX B = MatX::Zero(n, n);
    double damping = opt.damping_initial; // Levenberg-Marquardt term on the reduced model

    auto log = [&](const std::string& s) {
        if (opt.log) opt.log(s);
    };

    int iters = 0;
    for (;;) {
        const VecX t = (nu - mu * pt.g).cwiseMax(0.0); // candidate inequality multipliers
        const VecX g0 = objective_gradient(pt, nu, mu);

        // free set: drop variables held at a bound by the Lagrangian gradient
        VecX grad_l = g0;
        if (mc) grad_l.noalias() += pt.Jc.transpose() * lambda;
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            if (!free[static_cast<std::size_t>(i)]) continue;
            if (x[i] <= lo[i] && grad_l[i] > 0) continue;
            if (x[i] >= hi[i] && grad_l[i] < 0) continue;
            idx.push_back(i);
        }
        const NullSpace ns(select_cols(pt.Jc, idx), static_cast<Eigen::Index>(idx.size()));
        const VecX g0F = select(g0, idx);

        // least-squares multipliers at the current point
        const VecX lambda_ls = ns.multipliers(g0F, mc);
        grad_l = g0;
        if (mc) grad_l.noalias() += pt.Jc.transpose() * lambda_ls;
        const double eq = mc ? pt.c.lpNorm<Eigen::Infinity>() : 0.0;
        const double ineq = pt.g.size() ? std::max(0.0, (-pt.g).maxCoeff()) : 0.0;
        // complementarity: constraints carrying a multiplier must be active
        double comp = 0;
        for (Eigen::Index j = 0; j < pt.g.size(); ++j)
            if (t[j] > 0) comp = std::max(comp, std::abs(pt.g[j]));
        const double stat = projected_gradient_norm(x, grad_l, lo, hi);
        res.eq_violation = eq;
        res.ineq_violation = ineq;
        res.stationarity = stat;
        lambda = lambda_ls;

        if (stat <= opt.stationarity_tol && eq <= opt.eq_tol && ineq <= opt.ineq_tol && comp <= opt.ineq_tol) {
            nu = t;
            res.status = NlpStatus::Converged;
            break;
        }
        if (pt.g.size() && stat <= inner_tol && eq <= opt.eq_tol) {
            // subproblem solved well enough: first-order inequality update
            nu = t;
            const double gap = std::max(ineq, comp);
            if (gap > 0.25 * prev_ineq) {
                if (mu >= opt.mu_max) {
                    res.status = NlpStatus::Infeasible;
                    res.message = "inequality penalty limit reached";
                    break;
                }
                mu = std::min(opt.mu_max, mu * opt.mu_growth);
            }
            prev_ineq = gap;
            inner_tol = std::max(opt.stationarity_tol, 0.1 * inner_tol);
            log("multiplier update: mu " + std::to_string(mu) + " ineq " + std::to_string(ineq) + " comp " + std::to_string(comp));
            continue;
        }
        if (iters >= opt.max_iterations) {
            res.status = NlpStatus::MaxIterations;
            res.message = "iteration limit reached";
            break;
        }
        ++iters;

        // quadratic model on the null space of the linearized equalities;
        // variables at a bound that the step would push outward are held
        VecX d, lambda_qp;
        double dHd = 0;
        std::optional<NullSpace> step_space;
        std::vector<int> step_idx;
        for (int pass = 0; pass <= n; ++pass) {
            const auto nfree = static_cast<Eigen::Index>(idx.size());
            MatX H = gauss_newton(pt, nu, mu, idx);
            if (opt.bfgs) H += B(idx, idx);
            std::optional<NullSpace> fresh;
            if (pass > 0) fresh.emplace(select_cols(pt.Jc, idx), nfree);
            const NullSpace& nsc = fresh ? *fresh : ns;
            const VecX gF = select(g0, idx);
            VecX dF = nsc.Y * nsc.range_step(pt.c);
            if (nsc.Z.cols() > 0) {
                MatX M = nsc.Z.transpose() * H * nsc.Z;
                M.diagonal().array() += damping * std::max(1.0, M.diagonal().mean());
                const VecX rhs = -(nsc.Z.transpose() * (gF + H * dF));
                const double scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
                double delta = 1e-14 * scale;
                VecX pz;
                for (int attempt = 0; attempt < 20; ++attempt) {
                    MatX Md = M;
                    Md.diagonal().array() += delta;
                    Eigen::LDLT<MatX> ldlt(Md);
                    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                        pz = ldlt.solve(rhs);
                        if (pz.allFinite()) break;
                    }
                    pz.resize(0);
                    delta *= 100;
                }
                if (pz.size() == 0) pz = rhs / scale;
                dF.noalias() += nsc.Z * pz;
            }
            lambda_qp = nsc.multipliers(gF + H * dF, mc);
            step_space = nsc;
            step_idx = idx;
            dHd = dF.dot(H * dF);
            d = VecX::Zero(n);
            std::vector<int> keep;
            for (Eigen::Index k = 0; k < nfree; ++k) {
                const int i = idx[static_cast<std::size_t>(k)];
                d[i] = dF[k];
                if ((x[i] <= lo[i] && d[i] < 0) || (x[i] >= hi[i] && d[i] > 0)) continue;
                keep.push_back(i);
            }
            if (keep.size() == idx.size()) break;
            idx = std::move(keep);
        }
        // ratio test: the step stops at the first bound it meets
        double alpha_max = 1.0;
        for (int i = 0; i < n; ++i) {
            if (d[i] > 0 && x[i] + d[i] > hi[i]) alpha_max = std::min(alpha_max, (hi[i] - x[i]) / d[i]);
            if (d[i] < 0 && x[i] + d[i] < lo[i]) alpha_max = std::min(alpha_max, (lo[i] - x[i]) / d[i]);
        }

        // merit penalty large enough for descent
        const VecX Jcd = pt.Jc * d;
        double slope = g0.dot(d) + lambda_qp.dot(Jcd) + rho * pt.c.dot(Jcd);
        if (mc && slope > -0.5 * dHd) {
            const double cc = -pt.c.dot(Jcd);
            if (cc > 0) {
                const double needed = (g0.dot(d) + lambda_qp.dot(Jcd) + 0.5 * dHd) / cc;
                rho = std::min(opt.rho_max, std::max(2 * rho, needed * 1.1));
                slope = g0.dot(d) + lambda_qp.dot(Jcd) + rho * pt.c.dot(Jcd);
            }
        }
        const double phi = merit_value(pt, lambda_qp, rho, nu, mu);
        double alpha = alpha_max;
        VecX x_new;
        NlpPoint trial;
        bool accepted = false;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            x_new = project(x + alpha * d, lo, hi);
            trial = problem.evaluate(x_new, free, false);
            if (finite(trial)) {
                if (merit_value(trial, lambda_qp, rho, nu, mu) <= phi + 1e-4 * alpha * slope) {
                    accepted = true;
                    break;
                }
                if (bt == 0 && mc) {
                    // second-order correction against constraint curvature
                    const VecX corr = step_space->Y * step_space->range_step(trial.c);
                    VecX x_soc = x_new;
                    for (std::size_t k = 0; k < step_idx.size(); ++k) x_soc[step_idx[k]] += corr[static_cast<Eigen::Index>(k)];
                    x_soc = project(x_soc, lo, hi);
                    NlpPoint soc = problem.evaluate(x_soc, free, false);
                    if (finite(soc) && merit_value(soc, lambda_qp, rho, nu, mu) <= phi + 1e-4 * alpha * slope) {
                        x_new = std::move(x_soc);
                        trial = std::move(soc);
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        log("it " + std::to_string(iters) + " phi " + std::to_string(phi) + " |c| " + std::to_string(eq) + " stat " +
            std::to_string(stat) + " alpha " + std::to_string(alpha) + " rho " + std::to_string(rho) + " damp " +
            std::to_string(damping) + " |d| " + std::to_string(d.lpNorm<Eigen::Infinity>()));
        if (accepted && alpha == alpha_max) damping = std::max(opt.damping_min, damping / 4);
        else if (alpha < 0.25 * alpha_max) damping = std::min(opt.damping_max, damping * 10);
        if (!accepted) {
            res.status = NlpStatus::LineSearchFailure;
            res.message = "line search failed to decrease the merit function";
            break;
        }
        NlpPoint next = problem.evaluate(x_new, free, true);
        if (!finite(next)) {
            res.status = NlpStatus::NonFinite;
            res.message = "non-finite values after an accepted step";
            break;
        }

        if (opt.bfgs) {
            // curvature of the Lagrangian not captured by the Gauss-Newton model
            const VecX s = x_new - x;
            std::vector<int> all;
            for (int i = 0; i < n; ++i)
                if (free[static_cast<std::size_t>(i)]) all.push_back(i);
            VecX y = objective_gradient(next, nu, mu) - g0;
            if (mc) y.noalias() += (next.Jc - pt.Jc).transpose() * lambda_qp;
            const VecX Hs = gauss_newton(next, nu, mu, all) * select(s, all);
            for (std::size_t k = 0; k < all.size(); ++k) y[all[k]] -= Hs[static_cast<Eigen::Index>(k)];
            const double sy = s.dot(y);
            if (sy > 1e-8 * s.norm() * y.norm()) {
                const VecX Bs = B * s;
                const double sBs = s.dot(Bs);
                B += (y * y.transpose()) / sy;
                if (sBs > 0) B -= (Bs * Bs.transpose()) / sBs;
            }
        }
        x = x_new;
        pt = std::move(next);
        lambda = lambda_qp;
    }
    res.x = x;
    res.iterations = iters;
    res.objective = pt.r.squaredNorm();
    res.lambda = lambda;
    res.nu = nu;
    return res;
}

} // namespace morphwing
