#pragma once

/**
 * Hermite-Simpson direct collocation and the receding-horizon regulator.
 *
 * The state between knots is the cubic that matches the knot values and the
 * dynamics at both ends; the defect is the mismatch between its slope and the
 * dynamics at the interval midpoint. Controls are linear between knots.
 *
 * Decision vector layout: [Y_1 .. Y_n, U_1 .. U_n, t_f].
 */

#include "morphwing/common.hpp"
#include "morphwing/dynamics.hpp"
#include "morphwing/nlp.hpp"
#include "morphwing/rk4.hpp"
#include "morphwing/rotation.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace morphwing {

/// F(Y, U, t)
using DynamicsFn = std::function<VecX(const VecX& y, const VecX& u, double t)>;
/// Tracked output z(Y)
using OutputFn = std::function<VecX(const VecX& y)>;

/// Linear control between knots: requires t_i <= t < t_{i+1}.
inline VecX interp_control(const VecX& u_i, const VecX& u_next, double t_i, double t_next, double t) {
    if (!(t_next > t_i)) throw DomainError("interp_control: interval length must be positive");
    if (t < t_i || t >= t_next) throw DomainError("interp_control: t outside [t_i, t_next)");
    const double s = (t - t_i) / (t_next - t_i);
    return (1 - s) * u_i + s * u_next;
}

struct HermiteCubic {
    VecX c0, c1, c2, c3;
    double t0, h;

    static HermiteCubic fit(const VecX& y0, const VecX& y1, const VecX& f0, const VecX& f1, double t0, double t1) {
        const double h = t1 - t0;
        if (!(h > 0)) throw DomainError("interp_state_cubic: interval length must be positive");
        return {y0, h * f0, -3 * y0 - 2 * h * f0 + 3 * y1 - h * f1, 2 * y0 + h * f0 - 2 * y1 + h * f1, t0, h};
    }

    double tau(double t) const {
        const double s = (t - t0) / h;
        if (s < 0 || s > 1) throw DomainError("interp_state_cubic: t outside the interval");
        return s;
    }
    VecX value(double t) const {
        const double s = tau(t);
        return c0 + s * (c1 + s * (c2 + s * c3));
    }
    VecX derivative(double t) const {
        const double s = tau(t);
        return (c1 + s * (2 * c2 + 3 * s * c3)) / h;
    }
};

/// Cubic state interpolant on [t_j, t_{j+1}]; the right end is accepted as a limit.
inline VecX interp_state_cubic(const VecX& y_j, const VecX& y_next, const VecX& f_j, const VecX& f_next, double t_j,
                               double t_next, double t) {
    return HermiteCubic::fit(y_j, y_next, f_j, f_next, t_j, t_next).value(t);
}

/// Midpoint defect with the end-point dynamics already evaluated.
inline VecX defect_from_rates(const VecX& y_j, const VecX& y_next, const VecX& f_j, const VecX& f_next,
                              const VecX& u_j, const VecX& u_next, double t_j, double t_next, const DynamicsFn& f) {
    const double h = t_next - t_j;
    if (!(h > 0)) throw DomainError("defect_residual: interval length must be positive");
    const VecX y_mid = 0.5 * (y_j + y_next) + (h / 8) * (f_j - f_next);
    const VecX dy_mid = (-1.5 / h) * (y_j - y_next) - 0.25 * (f_j + f_next);
    const VecX u_mid = 0.5 * (u_j + u_next);
    return dy_mid - f(y_mid, u_mid, t_j + 0.5 * h);
}

inline VecX defect_residual(const VecX& y_j, const VecX& y_next, const VecX& u_j, const VecX& u_next, double t_j,
                            double t_next, const DynamicsFn& f) {
    if (!(t_next > t_j)) throw DomainError("defect_residual: interval length must be positive");
    return defect_from_rates(y_j, y_next, f(y_j, u_j, t_j), f(y_next, u_next, t_next), u_j, u_next, t_j, t_next, f);
}

/// Diagonal quadratic weights on the tracked output.
struct TrackingCost {
    VecX weights;

    void validate() const {
        if (weights.size() == 0) throw ConfigError("controller.weights", "must not be empty");
        if (!weights.allFinite() || (weights.array() < 0).any())
            throw ConfigError("controller.weights", "must be finite and non-negative");
    }
};

/// Boundary residual r(Y(t_0), Y(t_f), t_f) = 0.
using BoundaryFn = std::function<VecX(const VecX& y_first, const VecX& y_last, double t_f)>;

struct CollocationProblem {
    int knots = 5;
    int state_dim = 0;
    int control_dim = 0;
    double t0 = 0;        // absolute time of the first knot
    double min_interval = 1e-9;
    DynamicsFn dynamics;
    OutputFn output;
    TrackingCost cost;
    std::vector<VecX> reference; // one per knot
    VecX stroke;                 // |U_j| <= stroke componentwise; empty means none
    BoundaryFn boundary;         // optional
    VecX lower, upper;           // decision bounds

    int decision_size() const { return knots * (state_dim + control_dim) + 1; }
    int y_offset(int j) const { return j * state_dim; }
    int u_offset(int j) const { return knots * state_dim + j * control_dim; }
    int tf_index() const { return knots * (state_dim + control_dim); }

    VecX y(const VecX& d, int j) const { return d.segment(y_offset(j), state_dim); }
    VecX u(const VecX& d, int j) const { return d.segment(u_offset(j), control_dim); }

    /// Uniform knots from t0 to t0 + t_f.
    std::vector<double> knot_times(const VecX& d) const {
        const double tf = d[tf_index()];
        std::vector<double> t(static_cast<std::size_t>(knots));
        for (int j = 0; j < knots; ++j) t[static_cast<std::size_t>(j)] = t0 + tf * j / (knots - 1);
        return t;
    }

    /// Default bounds: everything free except those fixed by the caller.
    void init_bounds() {
        lower = VecX::Constant(decision_size(), -std::numeric_limits<double>::infinity());
        upper = VecX::Constant(decision_size(), std::numeric_limits<double>::infinity());
    }
    void pin_initial_state(const VecX& y0) {
        lower.segment(0, state_dim) = y0;
        upper.segment(0, state_dim) = y0;
    }
    void fix_final_time(double tf) {
        lower[tf_index()] = tf;
        upper[tf_index()] = tf;
    }

    void validate() const {
        if (knots < 2) throw ConfigError("controller.knots", "at least two knots are required");
        if (state_dim < 1 || control_dim < 0) throw ConfigError("controller", "invalid state or control dimension");
        if (!dynamics) throw ConfigError("controller.dynamics", "dynamics function is required");
        if (!output) throw ConfigError("controller.output", "output function is required");
        cost.validate();
        if (static_cast<int>(reference.size()) != knots)
            throw ConfigError("controller.reference", "one reference per knot is required");
        for (const auto& r : reference)
            if (r.size() != cost.weights.size()) throw ConfigError("controller.reference", "size must match the weights");
        if (stroke.size() != 0 && stroke.size() != control_dim)
            throw ConfigError("controller.stroke_limit", "one limit per regulator channel is required");
        if (lower.size() != decision_size() || upper.size() != decision_size())
            throw ConfigError("controller", "bounds have the wrong size");
        if (!(lower[tf_index()] > 0) && !(upper[tf_index()] > 0))
            throw ConfigError("controller.horizon", "final time must be positive");
    }

    void check_intervals(const VecX& d) const {
        const double tf = d[tf_index()];
        if (!(tf / (knots - 1) >= min_interval))
            throw DomainError("collocation: interval length below " + std::to_string(min_interval) + " s");
    }
};

/// Independently evaluated constraint values at a decision vector.
struct ConstraintValues {
    VecX boundary;
    VecX defects;     // stacked per interval
    VecX inequality;  // >= 0 when satisfied
    double max_defect() const { return defects.size() ? defects.lpNorm<Eigen::Infinity>() : 0.0; }
    double max_boundary() const { return boundary.size() ? boundary.lpNorm<Eigen::Infinity>() : 0.0; }
    double max_inequality_violation() const {
        return inequality.size() ? std::max(0.0, (-inequality).maxCoeff()) : 0.0;
    }
};

inline VecX stroke_inequalities(const CollocationProblem& p, const VecX& d) {
    if (p.stroke.size() == 0) return VecX();
    VecX g(2 * p.knots * p.control_dim);
    for (int j = 0; j < p.knots; ++j) {
        const VecX u = p.u(d, j);
        for (int c = 0; c < p.control_dim; ++c) {
            g[2 * (j * p.control_dim + c)] = p.stroke[c] - u[c];
            g[2 * (j * p.control_dim + c) + 1] = p.stroke[c] + u[c];
        }
    }
    return g;
}

inline ConstraintValues evaluate_constraints(const CollocationProblem& p, const VecX& d) {
    p.check_intervals(d);
    const auto t = p.knot_times(d);
    ConstraintValues cv;
    std::vector<VecX> f(static_cast<std::size_t>(p.knots));
    for (int j = 0; j < p.knots; ++j) f[static_cast<std::size_t>(j)] = p.dynamics(p.y(d, j), p.u(d, j), t[static_cast<std::size_t>(j)]);
    cv.defects.resize((p.knots - 1) * p.state_dim);
    for (int j = 0; j + 1 < p.knots; ++j) {
        const auto J = static_cast<std::size_t>(j);
        cv.defects.segment(j * p.state_dim, p.state_dim) =
            defect_from_rates(p.y(d, j), p.y(d, j + 1), f[J], f[J + 1], p.u(d, j), p.u(d, j + 1), t[J], t[J + 1], p.dynamics);
    }
    if (p.boundary) cv.boundary = p.boundary(p.y(d, 0), p.y(d, p.knots - 1), d[p.tf_index()]);
    cv.inequality = stroke_inequalities(p, d);
    return cv;
}

/// Sum over knots of (z - z_ref)^T C (z - z_ref).
inline double evaluate_cost(const VecX& d, const CollocationProblem& p) {
    double j = 0;
    for (int k = 0; k < p.knots; ++k) {
        const VecX e = p.output(p.y(d, k)) - p.reference[static_cast<std::size_t>(k)];
        j += e.dot(p.cost.weights.cwiseProduct(e));
    }
    return j;
}

struct CollocationSolution {
    VecX decision;
    NlpStatus status = NlpStatus::MaxIterations;
    int iterations = 0;
    double objective = 0;
    double max_defect = 0;
    double max_boundary = 0;
    double max_inequality_violation = 0;
    double stationarity = 0;
    std::string message;

    bool converged() const { return status == NlpStatus::Converged; }
};

namespace detail {

/// Evaluator exploiting the banded structure: a knot variable only touches
/// its own output, its own rate and the two adjacent defects.
class CollocationEvaluator {
public:
    CollocationEvaluator(const CollocationProblem& p, double rel_step) : p_(p), rel_(rel_step) {}

    NlpPoint operator()(const VecX& d, const std::vector<char>& free, bool jac) const {
        Cache base = compute(d);
        NlpPoint pt = assemble(d, base);
        if (!jac) return pt;
        const int n = p_.decision_size();
        pt.Jr = MatX::Zero(pt.r.size(), n);
        pt.Jc = MatX::Zero(pt.c.size(), n);
        pt.Jg = MatX::Zero(pt.g.size(), n);
        const int ny = p_.state_dim, nu = p_.control_dim, N = p_.knots;
        const int nb = static_cast<int>(base.boundary.size());
        const int nz = static_cast<int>(p_.cost.weights.size());
        const VecX sqrt_w = p_.cost.weights.cwiseSqrt();
        VecX dp = d;
        for (int i = 0; i < n; ++i) {
            if (!free[static_cast<std::size_t>(i)]) continue;
            const double h = fd_step(rel_, d[i], p_.upper[i]);
            dp[i] = d[i] + h;
            if (i == p_.tf_index()) {
                const NlpPoint q = assemble(dp, compute(dp));
                pt.Jr.col(i) = (q.r - pt.r) / h;
                pt.Jc.col(i) = (q.c - pt.c) / h;
                pt.Jg.col(i) = (q.g - pt.g) / h;
            } else {
                const bool is_state = i < N * ny;
                const int j = is_state ? i / ny : (i - N * ny) / nu;
                const auto J = static_cast<std::size_t>(j);
                const VecX yj = p_.y(dp, j), uj = p_.u(dp, j);
                const VecX fj = p_.dynamics(yj, uj, base.t[J]);
                if (is_state) {
                    const VecX e = p_.output(yj) - p_.reference[J];
                    pt.Jr.block(j * nz, i, nz, 1) = (sqrt_w.cwiseProduct(e) - pt.r.segment(j * nz, nz)) / h;
                }
                for (int k : {j - 1, j}) {
                    if (k < 0 || k + 1 >= N) continue;
                    const auto K = static_cast<std::size_t>(k);
                    const VecX& fa = (k == j) ? fj : base.f[K];
                    const VecX& fb = (k + 1 == j) ? fj : base.f[K + 1];
                    const VecX dk = defect_from_rates(p_.y(dp, k), p_.y(dp, k + 1), fa, fb, p_.u(dp, k), p_.u(dp, k + 1),
                                                      base.t[K], base.t[K + 1], p_.dynamics);
                    pt.Jc.block(nb + k * ny, i, ny, 1) = (dk - base.defects.segment(k * ny, ny)) / h;
                }
                if (nb && p_.boundary && is_state && (j == 0 || j == N - 1)) {
                    const VecX b = p_.boundary(p_.y(dp, 0), p_.y(dp, N - 1), dp[p_.tf_index()]);
                    pt.Jc.block(0, i, nb, 1) = (b - base.boundary) / h;
                }
                if (!is_state && pt.g.size()) {
                    const int c = (i - N * ny) % nu;
                    pt.Jg(2 * (j * nu + c), i) = -1.0;
                    pt.Jg(2 * (j * nu + c) + 1, i) = 1.0;
                }
            }
            dp[i] = d[i];
        }
        return pt;
    }

private:
    struct Cache {
        std::vector<double> t;
        std::vector<VecX> f;
        VecX defects;
        VecX boundary;
    };

    Cache compute(const VecX& d) const {
        p_.check_intervals(d);
        Cache c;
        c.t = p_.knot_times(d);
        c.f.resize(static_cast<std::size_t>(p_.knots));
        for (int j = 0; j < p_.knots; ++j)
            c.f[static_cast<std::size_t>(j)] = p_.dynamics(p_.y(d, j), p_.u(d, j), c.t[static_cast<std::size_t>(j)]);
        const int ny = p_.state_dim;
        c.defects.resize((p_.knots - 1) * ny);
        for (int j = 0; j + 1 < p_.knots; ++j) {
            const auto J = static_cast<std::size_t>(j);
            c.defects.segment(j * ny, ny) = defect_from_rates(p_.y(d, j), p_.y(d, j + 1), c.f[J], c.f[J + 1], p_.u(d, j),
                                                              p_.u(d, j + 1), c.t[J], c.t[J + 1], p_.dynamics);
        }
        if (p_.boundary) c.boundary = p_.boundary(p_.y(d, 0), p_.y(d, p_.knots - 1), d[p_.tf_index()]);
        return c;
    }

    NlpPoint assemble(const VecX& d, const Cache& c) const {
        NlpPoint pt;
        const int nz = static_cast<int>(p_.cost.weights.size());
        const VecX sqrt_w = p_.cost.weights.cwiseSqrt();
        pt.r.resize(p_.knots * nz);
        for (int j = 0; j < p_.knots; ++j)
            pt.r.segment(j * nz, nz) =
                sqrt_w.cwiseProduct(p_.output(p_.y(d, j)) - p_.reference[static_cast<std::size_t>(j)]);
        pt.c.resize(c.boundary.size() + c.defects.size());
        pt.c << c.boundary, c.defects;
        pt.g = stroke_inequalities(p_, d);
        return pt;
    }

    const CollocationProblem& p_;
    double rel_;
};

} // namespace detail

/// Solves the collocation NLP from `initial` (projected onto the bounds).
/// Domain errors from the problem definition propagate; numerical trouble is
/// reported through the status.
inline CollocationSolution solve_nlp(const CollocationProblem& problem, const VecX& initial, const NlpOptions& options = {},
                                     double fd_relative_step = 1e-6) {
    problem.validate();
    if (initial.size() != problem.decision_size()) throw DomainError("solve_nlp: initial guess has the wrong size");
    problem.check_intervals(initial.cwiseMax(problem.lower).cwiseMin(problem.upper));

    NlpProblem nlp;
    nlp.lower = problem.lower;
    nlp.upper = problem.upper;
    // the interval floor is enforced through the bound on t_f
    nlp.lower[problem.tf_index()] = std::max(nlp.lower[problem.tf_index()], problem.min_interval * (problem.knots - 1));
    detail::CollocationEvaluator eval(problem, fd_relative_step);
    nlp.evaluate = [&eval](const VecX& x, const std::vector<char>& free, bool jac) { return eval(x, free, jac); };

    CollocationSolution sol;
    NlpResult r;
    try {
        r = solve_augmented_lagrangian(nlp, initial, options);
    } catch (const NumericalError& e) {
        sol.decision = initial;
        sol.status = NlpStatus::NonFinite;
        sol.message = e.what();
        return sol;
    }
    sol.decision = r.x;
    sol.status = r.status;
    sol.iterations = r.iterations;
    sol.stationarity = r.stationarity;
    sol.message = r.message;
    sol.objective = evaluate_cost(r.x, problem);
    const ConstraintValues cv = evaluate_constraints(problem, r.x);
    sol.max_defect = cv.max_defect();
    sol.max_boundary = cv.max_boundary();
    sol.max_inequality_violation = cv.max_inequality_violation();
    return sol;
}

/// Reduced linear prediction model dY/dt = A Y + B U.
struct LinearModel {
    MatX A;
    MatX B;

    void validate(int state_dim, int control_dim) const {
        if (A.rows() != state_dim || A.cols() != state_dim)
            throw ConfigError("controller.linear_model.A", "must be " + std::to_string(state_dim) + " square");
        if (B.rows() != state_dim || B.cols() != control_dim)
            throw ConfigError("controller.linear_model.B", "must be " + std::to_string(state_dim) + " x " +
                                                               std::to_string(control_dim));
    }
    VecX operator()(const VecX& y, const VecX& u, double) const { return A * y + B * u; }
};

/// Tracked output of the vehicle prediction state: roll, pitch, body rates.
inline VecX attitude_output(const VecX& y) {
    const Quat q(y[3], y[4], y[5], y[6]);
    const EulerAngles e = euler_angles(q.normalized());
    VecX z(5);
    z << e.roll, e.pitch, y[10], y[11], y[12];
    return z;
}

struct ControllerConfig {
    int knots = 5;
    double horizon = 0.025;      // t_f [s]
    double control_period = 0.005;
    bool free_final_time = false;
    double min_horizon = 0.005;  // bounds on t_f when it is free
    double max_horizon = 0.1;
    VecX weights = (VecX(5) << 10, 10, 1, 1, 1).finished();
    NlpOptions solver;
    double fd_relative_step = 1e-6;
    int max_consecutive_failures = 3;
    std::optional<LinearModel> linear_model;

    void validate() const {
        if (knots < 2) throw ConfigError("controller.knots", "at least two knots are required");
        if (!(horizon > 0)) throw ConfigError("controller.horizon", "must be positive");
        if (!(horizon / (knots - 1) >= 1e-9)) throw ConfigError("controller.horizon", "knot interval below 1e-9 s");
        if (!(control_period > 0)) throw ConfigError("controller.control_period", "must be positive");
        if (free_final_time && !(min_horizon > 0 && max_horizon >= min_horizon))
            throw ConfigError("controller.min_horizon", "free final time needs 0 < min_horizon <= max_horizon");
        TrackingCost{weights}.validate();
        if (weights.size() != 5) throw ConfigError("controller.weights", "five weights (roll, pitch, p, q, r) required");
        if (max_consecutive_failures < 0) throw ConfigError("controller.max_consecutive_failures", "must be >= 0");
    }
};

using ReferenceFn = std::function<VecX(double t)>;

enum class ControllerStatus { Ok, SolverFailure, Fault };

inline std::string to_string(ControllerStatus s) {
    switch (s) {
    case ControllerStatus::Ok: return "ok";
    case ControllerStatus::SolverFailure: return "solver-failure";
    case ControllerStatus::Fault: return "fault";
    }
    return "unknown";
}

struct ControllerOutput {
    VecX inputs;
    ControllerStatus status = ControllerStatus::Ok;
    NlpStatus solver_status = NlpStatus::Converged;
    int iterations = 0;
    double objective = 0;
    double max_defect = 0;
    double max_inequality_violation = 0;
};

/// Re-solves the collocation problem every control period from the measured
/// state and applies the first knot's regulator input.
class RecedingHorizonController {
public:
    RecedingHorizonController(const Vehicle& vehicle, ControllerConfig config) : vehicle_(vehicle), config_(std::move(config)) {
        config_.validate();
        const int ny = vehicle_.layout().prediction_size();
        const int nu = vehicle_.regulator_count();
        if (config_.linear_model) config_.linear_model->validate(ny, nu);
        previous_ = VecX::Zero(nu);
        stroke_ = vehicle_.config().gait.stroke_limit;
    }

    const ControllerConfig& config() const { return config_; }
    int consecutive_failures() const { return failures_; }
    bool faulted() const { return failures_ > config_.max_consecutive_failures; }
    const VecX& previous_inputs() const { return previous_; }
    const std::optional<VecX>& last_decision() const { return warm_; }

    void reset() {
        previous_.setZero();
        warm_.reset();
        failures_ = 0;
    }

    CollocationProblem build_problem(const FullState& current, const ReferenceFn& reference) const {
        const int ny = vehicle_.layout().prediction_size();
        const int nu = vehicle_.regulator_count();
        CollocationProblem p;
        p.knots = config_.knots;
        p.state_dim = ny;
        p.control_dim = nu;
        p.t0 = current.t;
        if (config_.linear_model) {
            const LinearModel lm = *config_.linear_model;
            p.dynamics = lm;
        } else {
            const Vehicle* v = &vehicle_;
            p.dynamics = [v](const VecX& y, const VecX& u, double t) { return v->rhs(t, y, u); };
        }
        p.output = attitude_output;
        p.cost.weights = config_.weights;
        for (int j = 0; j < p.knots; ++j) p.reference.push_back(reference(current.t + config_.horizon * j / (p.knots - 1)));
        p.init_bounds();
        // stroke limits are simple bounds on the regulator inputs
        for (int j = 0; j < p.knots; ++j) {
            p.lower.segment(p.u_offset(j), nu) = -stroke_;
            p.upper.segment(p.u_offset(j), nu) = stroke_;
        }
        p.pin_initial_state(pack_state(current).head(ny));
        if (config_.free_final_time) {
            p.lower[p.tf_index()] = config_.min_horizon;
            p.upper[p.tf_index()] = config_.max_horizon;
        } else {
            p.fix_final_time(config_.horizon);
        }
        return p;
    }

    /// Initial guess: controls from the previous solution shifted by one knot
    /// (or held), states integrated through them from the pinned first knot so
    /// the guess is nearly feasible.
    VecX initial_guess(const CollocationProblem& p, const VecX& y0) const {
        VecX d(p.decision_size());
        const bool warm = warm_ && warm_->size() == d.size();
        d[p.tf_index()] = warm ? (*warm_)[p.tf_index()] : config_.horizon;
        const auto t = p.knot_times(d);
        for (int j = 0; j < p.knots; ++j) {
            VecX u = previous_;
            if (warm) {
                // previous control profile re-sampled at the new knot times, held past its end
                const double tf_old = (*warm_)[p.tf_index()];
                const double s = (t[static_cast<std::size_t>(j)] - warm_t0_) / tf_old * (p.knots - 1);
                const int k = std::clamp(static_cast<int>(std::floor(s)), 0, p.knots - 2);
                const double w = std::clamp(s - k, 0.0, 1.0);
                u = (1 - w) * p.u(*warm_, k) + w * p.u(*warm_, k + 1);
            }
            d.segment(p.u_offset(j), p.control_dim) = u;
        }
        VecX y = y0;
        d.segment(0, p.state_dim) = y;
        constexpr int kSub = 4;
        for (int j = 0; j + 1 < p.knots; ++j) {
            const auto J = static_cast<std::size_t>(j);
            const VecX ua = p.u(d, j), ub = p.u(d, j + 1);
            const double h = (t[J + 1] - t[J]) / kSub;
            for (int k = 0; k < kSub; ++k) {
                const double ta = t[J] + k * h;
                auto f = [&](double tt, const VecX& yy) {
                    const double s = (tt - t[J]) / (t[J + 1] - t[J]);
                    return p.dynamics(yy, (1 - s) * ua + s * ub, tt);
                };
                y = rk4(f, ta, y, h);
            }
            if (!y.allFinite()) {
                // fall back to holding the state
                for (int k = j + 1; k < p.knots; ++k) d.segment(p.y_offset(k), p.state_dim) = y0;
                break;
            }
            d.segment(p.y_offset(j + 1), p.state_dim) = y;
        }
        return d;
    }

    ControllerOutput step(const FullState& current, const ReferenceFn& reference) {
        const CollocationProblem p = build_problem(current, reference);
        const VecX guess = initial_guess(p, p.lower.segment(0, p.state_dim));
        const CollocationSolution sol = solve_nlp(p, guess, config_.solver, config_.fd_relative_step);

        ControllerOutput out;
        out.solver_status = sol.status;
        out.iterations = sol.iterations;
        out.objective = sol.objective;
        out.max_defect = sol.max_defect;
        out.max_inequality_violation = sol.max_inequality_violation;
        if (sol.converged()) {
            failures_ = 0;
            warm_ = sol.decision;
            warm_t0_ = p.t0;
            previous_ = p.u(sol.decision, 0).cwiseMax(-stroke_).cwiseMin(stroke_);
            out.status = ControllerStatus::Ok;
        } else {
            ++failures_;
            // a non-converged iterate is still a useful warm start
            if (sol.decision.allFinite()) {
                warm_ = sol.decision;
                warm_t0_ = p.t0;
            }
            out.status = faulted() ? ControllerStatus::Fault : ControllerStatus::SolverFailure;
        }
        out.inputs = previous_;
        return out;
    }

private:
    const Vehicle& vehicle_;
    ControllerConfig config_;
    VecX stroke_;
    VecX previous_;
    std::optional<VecX> warm_;
    double warm_t0_ = 0;
    int failures_ = 0;
};

} // namespace morphwing
