#include <gtest/gtest.h>

#include "daestab/reduction.hpp"
#include "daestab/rng.hpp"

namespace {

using namespace daestab;

TEST(Linearize, Example2JacobiansByHand) {
    const LinearizationData lin = linearize(builtin("example2"));
    EXPECT_NEAR(lin.A1(0, 0), -0.5, 1e-9);
    EXPECT_NEAR(lin.A2(0, 0), -1.0, 1e-9);
    EXPECT_NEAR(lin.A3(0, 0), -1.0, 1e-9);
    EXPECT_NEAR(lin.A4(0, 0), 2.0, 1e-9);
    ASSERT_TRUE(lin.a4_invertible);
    EXPECT_NEAR(lin.M(0, 0), -1.0, 1e-9);
    EXPECT_NEAR(lin.norm_A_inv, 1.0, 1e-12);
    EXPECT_TRUE(lin.warnings.empty());
}

TEST(Linearize, Example1ReducedOperatorIsMinusIdentity) {
    const LinearizationData lin = linearize(builtin("example1", {{"N", 64}}));
    ASSERT_TRUE(lin.a4_invertible);
    const Matrix diff = lin.M + Matrix::identity(64);
    EXPECT_LE(diff.max_abs(), 1e-8);
    // A3 = 0 for this model
    EXPECT_LE(lin.A3.max_abs(), 1e-9);
    // the finite-difference A4 must reproduce I + K built independently
    const Expr kernel = parse_with_symbols("z*s", SymbolTable::kernel_vars());
    const Matrix k = discretize_integro(kernel, QuadratureScheme::gauss_legendre(64));
    EXPECT_LE((lin.A4 - (Matrix::identity(64) + k)).max_abs(), 1e-6);
}

TEST(Linearize, Example3ConstraintJacobianSingular) {
    const LinearizationData lin =
        linearize(builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}}));
    EXPECT_NEAR(lin.A4(0, 0), 0.0, 1e-9);
    EXPECT_FALSE(lin.a4_invertible);
}

TEST(Linearize, SuppliedJacobiansUsedAndChecked) {
    DAEProblem p = builtin("example2");
    p.A1 = Matrix(1, 1, {-0.5});
    p.finalize(1e-12);
    const LinearizationData ok = linearize(p);
    EXPECT_TRUE(ok.warnings.empty());
    EXPECT_DOUBLE_EQ(ok.A1(0, 0), -0.5);

    p.A1 = Matrix(1, 1, {-0.3}); // deliberately wrong
    p.finalize(1e-12);
    const LinearizationData warned = linearize(p);
    ASSERT_EQ(warned.warnings.size(), 1u);
    EXPECT_NE(warned.warnings[0].find("A1"), std::string::npos);
    EXPECT_DOUBLE_EQ(warned.A1(0, 0), -0.3); // supplied value still wins
}

TEST(Linearize, FiniteDifferenceMatchesAnalyticOnFile) {
    // example2.json supplies all four analytic Jacobians; the finite
    // difference cross-check must stay silent.
    const char* dir = std::getenv("DAESTAB_PROBLEM_DIR");
    const std::string path = std::string(dir ? dir : "problems") + "/example2.json";
    const LinearizationData lin = linearize(load_problem(path));
    EXPECT_TRUE(lin.warnings.empty());
}

TEST(ImplicitU, Example2SolvesHalfRelation) {
    const LinearizationData lin = linearize(builtin("example2"));
    const Vector u = implicit_u(lin, {0.1});
    EXPECT_NEAR(u[0], 0.05, 1e-12);
    const Vector residual = lin.problem.eval_G({0.1}, u);
    EXPECT_LE(norm_inf(residual), 1e-12);
}

TEST(ImplicitU, RestPointMapsToRestPoint) {
    const LinearizationData lin = linearize(builtin("example2"));
    const Vector u = implicit_u(lin, {0.0});
    EXPECT_DOUBLE_EQ(u[0], 0.0);
}

TEST(ImplicitU, Example1ResidualBelowTolerance) {
    const LinearizationData lin = linearize(builtin("example1", {{"N", 64}}));
    Vector x(64, 0.01);
    const Vector u = implicit_u(lin, x);
    EXPECT_LE(norm_inf(lin.problem.eval_G(x, u)), 1e-12);
    // u = -A4^-1 (x^2 + u^2) is O(||x||^2), so each entry is near -1e-4
    EXPECT_LT(norm_inf(u), 5e-4);
}

TEST(ImplicitU, TrustRadiusRefusal) {
    const LinearizationData lin = linearize(builtin("example2"));
    EXPECT_THROW(implicit_u(lin, {1.5}), PreconditionError);
    ImplicitOptions wide;
    wide.trust_radius = 10.0;
    EXPECT_NO_THROW(implicit_u(lin, {1.5}, 0.0, wide));
}

TEST(ImplicitU, SingularA4Refused) {
    const LinearizationData lin =
        linearize(builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}}));
    EXPECT_THROW(implicit_u(lin, {0.1}), PreconditionError);
}

TEST(ImplicitU, DivergenceDetected) {
    // constraint u - 2 sin(u) - x = 0: A4 = -1 at the origin, but the chord
    // iteration with A4 = -1 repels from the solution for moderate x
    DAEProblem p;
    p.name = "repeller";
    p.n = 1;
    p.m = 1;
    p.A = Matrix::identity(1);
    p.F = {parse("-x1", 1, 1)};
    p.G = {parse("u1 - 2*sin(u1) - x1", 1, 1)};
    p.x0 = {0.0};
    p.u0 = {0.0};
    p.finalize(1e-12);
    const LinearizationData lin = linearize(p);
    ASSERT_TRUE(lin.a4_invertible);
    EXPECT_THROW(implicit_u(lin, {0.9}), DivergenceError);
}

TEST(ReducedField, Example2MatchesClosedForm) {
    const LinearizationData lin = linearize(builtin("example2"));
    for (double x : {-0.5, -0.1, 0.0, 0.1, 0.3, 0.8}) {
        const Vector f = reduced_field(lin, {x});
        EXPECT_NEAR(f[0], -x + x * x, 1e-10) << "x = " << x;
    }
    EXPECT_NEAR(reduced_field(lin, {0.1})[0], -0.09, 1e-10);
}

TEST(ReducedField, RestPointIsEquilibrium) {
    const LinearizationData lin = linearize(builtin("example1", {{"N", 16}}));
    const Vector f = reduced_field(lin, Vector(16, 0.0));
    EXPECT_LE(norm_inf(f), 1e-12);
}

TEST(RecoverFirstOrder, Example2HalfSlope) {
    const LinearizationData lin = linearize(builtin("example2"));
    EXPECT_NEAR(recover_u_first_order(lin, {0.1})[0], 0.05, 1e-9);
    EXPECT_DOUBLE_EQ(recover_u_first_order(lin, {0.0})[0], 0.0);
}

TEST(RecoverFirstOrder, Example1ZeroSlope) {
    const LinearizationData lin = linearize(builtin("example1", {{"N", 16}}));
    Vector x(16);
    for (int i = 0; i < 16; ++i) x[i] = CounterRng::gauss(5, 1, i) * 0.1;
    EXPECT_LE(norm_inf(recover_u_first_order(lin, x)), 1e-9);
}

// ||u(x) - first_order(x)|| must vanish faster than ||x - x0||
TEST(Properties, FirstOrderDefectIsSuperlinear) {
    const LinearizationData lin = linearize(builtin("example2"));
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (double r : {0.4, 0.2, 0.1, 0.05, 0.025, 0.0125}) {
        const Vector exact = implicit_u(lin, {r});
        const Vector approx = recover_u_first_order(lin, {r});
        const double ratio = norm_inf(vsub(exact, approx)) / r;
        EXPECT_LE(ratio, prev_ratio * 1.0001);
        prev_ratio = ratio;
    }
    EXPECT_LE(prev_ratio, 1e-3);
}

// the remainder is superlinear: ||L(x)|| / ||x - x0|| -> 0 at the rest point
TEST(Properties, RemainderIsLittleO) {
    const LinearizationData lin = linearize(builtin("example2"));
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (double r : {0.4, 0.2, 0.1, 0.05, 0.025}) {
        const double ratio = norm_inf(remainder_L(lin, {r})) / r;
        EXPECT_LT(ratio, prev_ratio);
        prev_ratio = ratio;
    }
    EXPECT_LE(prev_ratio, 0.03);
}

TEST(Properties, RemaindersVanishAtRest) {
    const LinearizationData lin = linearize(builtin("example2"));
    EXPECT_LE(norm_inf(lin.remainder_R({0.0}, {0.0})), 1e-12);
    EXPECT_LE(norm_inf(lin.remainder_r({0.0}, {0.0})), 1e-12);
    // and to second order nearby: R(x,u) = x^2 for this model
    EXPECT_NEAR(lin.remainder_R({0.2}, {0.07})[0], 0.04, 1e-8);
}

TEST(Properties, ReducedFieldDecomposition) {
    // A^-1 F(x, u(x)) = M (x - x0) + A^-1 L(x)
    const LinearizationData lin = linearize(builtin("example2"));
    for (double x : {-0.3, 0.05, 0.45}) {
        const Vector lhs = reduced_field(lin, {x});
        const Vector rhs =
            vadd(lin.M * Vector{x}, lin.A_lu->solve(remainder_L(lin, {x})));
        EXPECT_NEAR(lhs[0], rhs[0], 1e-12);
    }
}

} // namespace

namespace {

using namespace daestab;

// A != identity: the reduced field and M must carry the A^-1 factor
TEST(NonIdentityA, ReducedOperatorScales) {
    DAEProblem p;
    p.name = "scaled";
    p.n = 1;
    p.m = 1;
    p.A = Matrix(1, 1, {2.0});
    p.F = {parse("-2*x1 + 2*x1^2", 1, 1)};
    p.G = {parse("u1 - x1/2", 1, 1)};
    p.x0 = {0.0};
    p.u0 = {0.0};
    p.finalize(1e-12);
    const LinearizationData lin = linearize(p);
    EXPECT_NEAR(lin.M(0, 0), -1.0, 1e-9);
    EXPECT_NEAR(lin.norm_A_inv, 0.5, 1e-12);
    EXPECT_NEAR(reduced_field(lin, {0.1})[0], -0.09, 1e-10);
}

// m = 0: plain ODE, the constraint layer degenerates gracefully
TEST(PureOde, WorksWithoutConstraints) {
    DAEProblem p;
    p.name = "ode";
    p.n = 1;
    p.m = 0;
    p.A = Matrix::identity(1);
    p.F = {parse("-x1 + x1^2", 1, 0)};
    p.G = {};
    p.x0 = {0.0};
    p.u0 = {};
    p.finalize(1e-12);
    const LinearizationData lin = linearize(p);
    EXPECT_TRUE(lin.a4_invertible);
    EXPECT_NEAR(lin.M(0, 0), -1.0, 1e-9);
    EXPECT_TRUE(implicit_u(lin, {0.1}).empty());
    EXPECT_NEAR(reduced_field(lin, {0.1})[0], -0.09, 1e-10);
}

} // namespace

namespace {

using namespace daestab;

TEST(ImplicitU, IterationBudgetExhaustion) {
    // cubic term bends u(x) away from the first-order start, so one chord
    // step cannot reach tolerance
    DAEProblem p;
    p.name = "slow";
    p.n = 1;
    p.m = 1;
    p.A = Matrix::identity(1);
    p.F = {parse("-x1", 1, 1)};
    p.G = {parse("u1 - x1 + 0.4*u1^3", 1, 1)};
    p.x0 = {0.0};
    p.u0 = {0.0};
    p.finalize(1e-12);
    const LinearizationData lin = linearize(p);
    ImplicitOptions opts;
    opts.tol = 1e-15;
    opts.max_iter = 1;
    try {
        implicit_u(lin, {0.9}, 0.0, opts);
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.iterations(), 1);
        EXPECT_GT(e.last_residual(), 0.0);
    }
    // with a real budget the same solve succeeds
    opts.max_iter = 200;
    const Vector u = implicit_u(lin, {0.9}, 0.0, opts);
    EXPECT_LE(std::abs(0.4 * u[0] * u[0] * u[0] + u[0] - 0.9), 1e-15);
}

} // namespace
