#include "morphwing/checks.hpp"
#include "morphwing/collocation.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace morphwing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VecX vec(std::initializer_list<double> v) {
    VecX x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

VecX initial_guess(const CollocationProblem& p, double tf) {
    VecX x = VecX::Zero(p.decision_size());
    x[p.tf_index()] = tf;
    return x;
}

} // namespace

TEST(Interpolation, LinearControlHitsTheKnots) {
    const VecX a = vec({1, -2}), b = vec({3, 4});
    EXPECT_EQ(interp_control(a, b, 0.5, 1.5, 0.5), a);
    EXPECT_LT((interp_control(a, b, 0.5, 1.5, 1.0) - vec({2, 1})).norm(), 1e-15);
    EXPECT_THROW(interp_control(a, b, 0.5, 1.5, 1.5), DomainError);
    EXPECT_THROW(interp_control(a, b, 0.5, 1.5, 0.4), DomainError);
    EXPECT_THROW(interp_control(a, b, 1.0, 1.0, 1.0), DomainError);
}

TEST(Interpolation, CubicReproducesCubics) {
    // y = 1 + 2t - t^2 + 0.5 t^3
    auto y = [](double t) { return vec({1 + 2 * t - t * t + 0.5 * t * t * t}); };
    auto dy = [](double t) { return vec({2 - 2 * t + 1.5 * t * t}); };
    const double t0 = 0.3, t1 = 1.1;
    for (double t : {0.3, 0.5, 0.77, 1.1}) {
        EXPECT_NEAR(interp_state_cubic(y(t0), y(t1), dy(t0), dy(t1), t0, t1, t)[0], y(t)[0], 1e-13);
        EXPECT_NEAR(HermiteCubic::fit(y(t0), y(t1), dy(t0), dy(t1), t0, t1).derivative(t)[0], dy(t)[0], 1e-13);
    }
    EXPECT_THROW(interp_state_cubic(y(t0), y(t1), dy(t0), dy(t1), t0, t1, 1.2), DomainError);
    EXPECT_THROW(interp_state_cubic(y(t0), y(t1), dy(t0), dy(t1), t1, t0, 0.5), DomainError);
}

TEST(Defect, ConstantDynamicsHasZeroDefect) {
    const VecX c = vec({0.7, -1.3});
    const DynamicsFn f = [&](const VecX&, const VecX&, double) { return c; };
    const VecX y0 = vec({1, 2});
    const VecX u = VecX::Zero(1);
    EXPECT_LT(defect_residual(y0, y0 + 0.25 * c, u, u, 1.0, 1.25, f).norm(), 1e-14);
    EXPECT_GT(defect_residual(y0, y0 + 0.3 * c, u, u, 1.0, 1.25, f).norm(), 0.1);
    EXPECT_THROW(defect_residual(y0, y0, u, u, 1.0, 1.0, f), DomainError);
}

TEST(Defect, ExactForCubicSolutions) {
    // dy/dt = 3 t^2 has cubic solutions; the Simpson midpoint reproduces them
    const DynamicsFn f = [](const VecX&, const VecX&, double t) { return vec({3 * t * t}); };
    const VecX u = VecX::Zero(1);
    EXPECT_LT(defect_residual(vec({0.125}), vec({0.729}), u, u, 0.5, 0.9, f).norm(), 1e-13);
}

TEST(Cost, ScalesWithTheWeightsAndIgnoresPermutation) {
    auto p = checks::double_integrator_problem(1.0, {2.0, 0.5}, {1.0, -0.3});
    std::mt19937 rng(7);
    std::normal_distribution<double> n(0, 1);
    VecX d = initial_guess(p, 1.0);
    for (int i = 0; i < p.tf_index(); ++i) d[i] = n(rng);
    const double J = evaluate_cost(d, p);
    EXPECT_GT(J, 0.0);

    auto scaled = p;
    scaled.cost.weights *= 3.0;
    EXPECT_NEAR(evaluate_cost(d, scaled), 3.0 * J, 1e-12 * J);

    auto swapped = p;
    swapped.output = [](const VecX& y) { return vec({y[1], y[0]}); };
    swapped.cost.weights = vec({0.5, 2.0});
    for (auto& r : swapped.reference) r = vec({r[1], r[0]});
    EXPECT_NEAR(evaluate_cost(d, swapped), J, 1e-12 * J);
}

TEST(Problem, ValidationNamesTheField) {
    auto p = checks::double_integrator_problem(1.0, {1, 1}, {0, 0});
    p.reference.pop_back();
    try {
        p.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "controller.reference");
    }
    p = checks::double_integrator_problem(1.0, {1, 1}, {0, 0});
    p.cost.weights[0] = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = checks::double_integrator_problem(1e-12, {1, 1}, {0, 0});
    EXPECT_THROW(solve_nlp(p, initial_guess(p, 1e-12)), DomainError);
}

TEST(Solver, ZeroCostPointConvergesImmediately) {
    const auto p = checks::double_integrator_problem(1.0, {1.0, 0.1}, {0.0, 0.0});
    const auto sol = solve_nlp(p, initial_guess(p, 1.0));
    ASSERT_TRUE(sol.converged()) << sol.message;
    EXPECT_LE(sol.iterations, 3);
    EXPECT_LT(sol.objective, 1e-12);
}

TEST(Solver, WarmStartReproducesTheColdSolution) {
    const auto p = checks::double_integrator_problem(1.0, {1.0, 0.1}, {1.0, 0.0});
    const auto cold = solve_nlp(p, initial_guess(p, 1.0));
    ASSERT_TRUE(cold.converged());
    const auto warm = solve_nlp(p, cold.decision);
    ASSERT_TRUE(warm.converged());
    EXPECT_LE(warm.iterations, 2);
    EXPECT_LT(warm.iterations, cold.iterations);
    EXPECT_NEAR(warm.objective, cold.objective, 1e-9);
    EXPECT_LT(warm.max_defect, 1e-6);
}

TEST(Solver, StrokeBoundsAreRespected) {
    auto p = checks::double_integrator_problem(1.0, {1.0, 0.1}, {1.0, 0.0});
    p.stroke = vec({0.5});
    const auto sol = solve_nlp(p, initial_guess(p, 1.0));
    ASSERT_TRUE(sol.converged()) << sol.message;
    for (int j = 0; j < p.knots; ++j) EXPECT_LE(std::abs(p.u(sol.decision, j)[0]), 0.5 + 1e-8);
    EXPECT_LE(sol.max_inequality_violation, 1e-8);
}

TEST(Solver, FreeFinalTimeStaysInsideItsBounds) {
    auto p = checks::double_integrator_problem(1.0, {1.0, 0.1}, {1.0, 0.0});
    p.lower[p.tf_index()] = 0.5;
    p.upper[p.tf_index()] = 2.0;
    const auto sol = solve_nlp(p, initial_guess(p, 1.0));
    const double tf = sol.decision[p.tf_index()];
    EXPECT_GE(tf, 0.5);
    EXPECT_LE(tf, 2.0);
    EXPECT_LT(sol.max_defect, 1e-5);
}

TEST(Nlp, EqualityConstrainedQuadratic) {
    // min x^2 + y^2 subject to x + y = 1
    const auto p = make_nlp(VecX::Constant(2, -kInf), VecX::Constant(2, kInf), [](const VecX& x) { return x; },
                            [](const VecX& x) { return vec({x[0] + x[1] - 1}); });
    const auto r = solve_augmented_lagrangian(p, vec({3, -1}));
    ASSERT_TRUE(r.converged()) << r.message;
    EXPECT_NEAR(r.x[0], 0.5, 1e-6);
    EXPECT_NEAR(r.x[1], 0.5, 1e-6);
}

TEST(Nlp, InequalityAndBoundsAreActive) {
    // min (x-2)^2 + (y-2)^2 subject to x + y <= 1, y >= 0.8 (bound)
    const auto p = make_nlp(vec({-kInf, 0.8}), VecX::Constant(2, kInf),
                            [](const VecX& x) { return vec({x[0] - 2, x[1] - 2}); }, {},
                            [](const VecX& x) { return vec({1 - x[0] - x[1]}); });
    const auto r = solve_augmented_lagrangian(p, vec({0, 1}));
    ASSERT_TRUE(r.converged()) << r.message;
    EXPECT_NEAR(r.x[0], 0.2, 1e-6);
    EXPECT_NEAR(r.x[1], 0.8, 1e-6);
}

TEST(Nlp, Rosenbrock) {
    const auto p = make_nlp(VecX::Constant(2, -kInf), VecX::Constant(2, kInf),
                            [](const VecX& x) { return vec({10 * (x[1] - x[0] * x[0]), 1 - x[0]}); });
    const auto r = solve_augmented_lagrangian(p, vec({-1.2, 1}));
    ASSERT_TRUE(r.converged()) << r.message;
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}

TEST(Nlp, BackwardStepAtTheUpperBound) {
    EXPECT_LT(fd_step(1e-6, 1.0, 1.0), 0.0);
    EXPECT_GT(fd_step(1e-6, 1.0), 0.0);
    EXPECT_NEAR(fd_step(1e-6, 100.0), 1e-4, 1e-18);
}

TEST(Oracles, HermiteIdentities) {
    const auto r = checks::hermite_identities();
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Oracles, DefectOrder) {
    const auto r = checks::defect_convergence();
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Oracles, DiscreteLq) {
    const auto r = checks::lq_oracle();
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Oracles, ClampedControl) {
    const auto r = checks::clamped_control();
    EXPECT_TRUE(r.passed) << r.detail;
}

namespace {

// Linear surrogate on the vehicle prediction state: u0 drives the roll rate,
// which feeds the quaternion x component (small angles).
ControllerConfig linear_controller(int ny) {
    ControllerConfig c;
    LinearModel lm{MatX::Zero(ny, ny), MatX::Zero(ny, 2)};
    lm.A(4, 10) = 0.5;
    lm.B(10, 0) = 20.0;
    c.linear_model = lm;
    c.weights = vec({100, 100, 1, 1, 1});
    return c;
}

} // namespace

TEST(Controller, TrimmedReferenceNeedsNoInput) {
    VehicleConfig vc;
    vc.aero.m = 4;
    const Vehicle veh(vc);
    RecedingHorizonController ctl(veh, linear_controller(veh.layout().prediction_size()));
    BodyState b;
    b.q = quaternion_from_euler(0, deg2rad(-15), 0);
    const FullState s = make_initial_state(b, 4);
    const auto out = ctl.step(s, [](double) { return vec({0, deg2rad(-15), 0, 0, 0}); });
    EXPECT_EQ(out.status, ControllerStatus::Ok);
    EXPECT_LT(out.inputs.norm(), 1e-8);
    EXPECT_LT(out.objective, 1e-12);
}

TEST(Controller, RollStepCommandsPositiveRollRate) {
    VehicleConfig vc;
    vc.aero.m = 4;
    const Vehicle veh(vc);
    RecedingHorizonController ctl(veh, linear_controller(veh.layout().prediction_size()));
    const FullState s = make_initial_state(BodyState{}, 4);
    const auto up = ctl.step(s, [](double) { return vec({deg2rad(15), 0, 0, 0, 0}); });
    EXPECT_EQ(up.status, ControllerStatus::Ok);
    EXPECT_GT(up.inputs[0], 1e-3);
    EXPECT_LE(up.inputs[0], vc.gait.stroke_limit[0] + 1e-12);
    ctl.reset();
    const auto down = ctl.step(s, [](double) { return vec({deg2rad(-15), 0, 0, 0, 0}); });
    EXPECT_LT(down.inputs[0], -1e-3);
}

TEST(Controller, RepeatedFailuresBecomeAFaultAndHoldTheInput) {
    VehicleConfig vc;
    vc.aero.m = 4;
    const Vehicle veh(vc);
    auto cc = linear_controller(veh.layout().prediction_size());
    cc.solver.max_iterations = 1;
    cc.max_consecutive_failures = 1;
    RecedingHorizonController ctl(veh, cc);
    const FullState s = make_initial_state(BodyState{}, 4);
    const auto ref = [](double) { return vec({deg2rad(15), 0, 0, 0, 0}); };
    const auto first = ctl.step(s, ref);
    EXPECT_EQ(first.status, ControllerStatus::SolverFailure);
    EXPECT_EQ(first.inputs, VecX::Zero(2));
    const auto second = ctl.step(s, ref);
    EXPECT_EQ(second.status, ControllerStatus::Fault);
    EXPECT_EQ(second.inputs, VecX::Zero(2));
}

TEST(Controller, VehicleModelRollsTowardTheReference) {
    // one solve on the full nonlinear model: holding the first input must roll
    // the vehicle faster toward the reference than dropping its roll channel
    VehicleConfig vc;
    vc.aero.m = 4;
    vc.span.planform = Planform::rectangular();
    vc.span.incidence = deg2rad(25);
    const Vehicle veh(vc);
    ControllerConfig cc;
    cc.weights = vec({2000, 2000, 0.3, 0.3, 0.3});
    RecedingHorizonController ctl(veh, cc);
    BodyState b;
    b.q = quaternion_from_euler(0, deg2rad(-15), 0);
    b.v = Vec3(4, 0, 0);
    FullState s = make_initial_state(b, 4);
    // let the circulation build up first; the bare start is a poor operating point
    for (int k = 0; k < 500; ++k) s = rk4_step(s, VecX::Zero(2), 1e-4, veh);
    const auto out = ctl.step(s, [](double) { return vec({deg2rad(15), deg2rad(-15), 0, 0, 0}); });
    ASSERT_TRUE(out.inputs.allFinite());
    const auto roll_rate_after = [&](const VecX& u) {
        FullState x = s;
        for (int k = 0; k < 250; ++k) x = rk4_step(x, u, 1e-4, veh);
        return x.body.omega.x();
    };
    VecX zero_roll = out.inputs;
    zero_roll[0] = 0;
    EXPECT_GT(roll_rate_after(out.inputs) - roll_rate_after(zero_roll), 0.0) << "u = " << out.inputs.transpose();
}
