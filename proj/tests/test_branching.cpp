#include <gtest/gtest.h>

#include <cmath>

#include "daestab/branching.hpp"

namespace {

using namespace daestab;

BranchingSpec example3_spec(double alpha, double beta, double a, double b) {
    const DAEProblem p = builtin("example3",
                                 {{"alpha", alpha}, {"beta", beta}, {"a", a}, {"b", b}});
    return make_branching_spec(p, linearize(p));
}

TEST(BranchRoots, Example3Quadratic) {
    const BranchingSpec spec = example3_spec(-1, 1, 3, 2);
    const auto roots = branch_roots(spec, 0);
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(roots[0].value, -3.0, 1e-12);
    EXPECT_NEAR(roots[1].value, -1.0, 1e-12);
    EXPECT_TRUE(roots[0].simple);
    EXPECT_TRUE(roots[1].simple);
}

TEST(BranchRoots, DiscriminantZeroGivesNonSimpleDoubleRoot) {
    // a = b^2 is the boundary where the two branch slopes coalesce
    const BranchingSpec spec = example3_spec(-1, 1, 4, 2);
    const auto roots = branch_roots(spec, 0);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_NEAR(roots[0].value, -2.0, 1e-6);
    EXPECT_FALSE(roots[0].simple);
    EXPECT_THROW(enumerate_branches(spec), NoBranchError);
}

TEST(BranchRoots, NoRealRoots) {
    BranchingSpec spec;
    spec.n = 1;
    spec.m = 1;
    spec.a = Matrix(1, 1, {-1.0});
    spec.b = Matrix(1, 1, {1.0});
    spec.constraints = {{2, {1.0, 0.0, 1.0}}}; // w^2 + 1
    EXPECT_TRUE(branch_roots(spec, 0).empty());
    EXPECT_THROW(enumerate_branches(spec), NoBranchError);
}

TEST(BranchRoots, ZeroPolynomialIsNoBranch) {
    BranchingSpec spec;
    spec.n = 1;
    spec.m = 1;
    spec.a = Matrix(1, 1, {-1.0});
    spec.b = Matrix(1, 1, {1.0});
    spec.constraints = {{2, {0.0, 0.0, 0.0}}};
    try {
        branch_roots(spec, 0);
        FAIL() << "expected NoBranchError";
    } catch (const NoBranchError& e) {
        EXPECT_EQ(e.constraint_index(), 0);
    }
}

TEST(Enumerate, Example3BothBranchesStable) {
    const BranchSet set = enumerate_branches(example3_spec(-1, 1, 3, 2));
    ASSERT_EQ(set.branches.size(), 2u);
    // lexicographic: roots ascending, so w = -3 first
    EXPECT_NEAR(set.branches[0].roots[0], -3.0, 1e-12);
    EXPECT_NEAR(set.branches[0].M(0, 0), -4.0, 1e-10);
    EXPECT_EQ(set.branches[0].verdict, Branch::Verdict::Stable);
    EXPECT_NEAR(set.branches[1].roots[0], -1.0, 1e-12);
    EXPECT_NEAR(set.branches[1].M(0, 0), -2.0, 1e-10);
    EXPECT_EQ(set.branches[1].verdict, Branch::Verdict::Stable);
}

TEST(Enumerate, Example3WithPositiveAlphaSplitsVerdicts) {
    const BranchSet set = enumerate_branches(example3_spec(2, 1, 3, 2));
    ASSERT_EQ(set.branches.size(), 2u);
    EXPECT_NEAR(set.branches[0].abscissa, -1.0, 1e-10); // alpha + beta*(-3)
    EXPECT_EQ(set.branches[0].verdict, Branch::Verdict::Stable);
    EXPECT_NEAR(set.branches[1].abscissa, 1.0, 1e-10); // alpha + beta*(-1)
    EXPECT_EQ(set.branches[1].verdict, Branch::Verdict::Unstable);
    int unstable = 0;
    for (const Branch& b : set.branches)
        if (b.verdict == Branch::Verdict::Unstable) ++unstable;
    EXPECT_EQ(unstable, 1);
}

// branch-matrix eigenvalues equal alpha + beta(-b +- sqrt(b^2 - a)) exactly
TEST(Enumerate, BranchEigenvaluesMatchFormula) {
    const double alpha = -1, beta = 1, a = 3, b = 2;
    const BranchSet set = enumerate_branches(example3_spec(alpha, beta, a, b));
    const double disc = std::sqrt(b * b - a);
    EXPECT_NEAR(set.branches[0].abscissa, alpha + beta * (-b - disc), 1e-10);
    EXPECT_NEAR(set.branches[1].abscissa, alpha + beta * (-b + disc), 1e-10);
}

TEST(Enumerate, SingleRootSingleBranch) {
    BranchingSpec spec;
    spec.n = 1;
    spec.m = 1;
    spec.a = Matrix(1, 1, {-2.0});
    spec.b = Matrix(1, 1, {1.0});
    spec.constraints = {{2, {-1.0, 0.0, 0.0, 1.0}}}; // w^3 - 1, single real root 1
    const BranchSet set = enumerate_branches(spec);
    ASSERT_EQ(set.branches.size(), 1u);
    EXPECT_NEAR(set.branches[0].roots[0], 1.0, 1e-10);
    EXPECT_NEAR(set.branches[0].abscissa, -1.0, 1e-10);
}

TEST(Enumerate, ColumnsBeyondMKeepTheLinearPart) {
    // n = 2, m = 1: column 2 of every branch matrix is column 2 of a
    BranchingSpec spec;
    spec.n = 2;
    spec.m = 1;
    spec.a = Matrix(2, 2, {-1.0, 0.3, 0.2, -2.0});
    spec.b = Matrix(2, 1, {0.5, -0.4});
    spec.constraints = {{2, {-1.0, 0.0, 1.0}}}; // w^2 - 1 -> roots -1, 1
    const BranchSet set = enumerate_branches(spec);
    ASSERT_EQ(set.branches.size(), 2u);
    for (const Branch& br : set.branches) {
        EXPECT_DOUBLE_EQ(br.M(0, 1), spec.a(0, 1));
        EXPECT_DOUBLE_EQ(br.M(1, 1), spec.a(1, 1));
    }
    EXPECT_DOUBLE_EQ(set.branches[0].M(0, 0), -1.0 + 0.5 * -1.0);
    EXPECT_DOUBLE_EQ(set.branches[1].M(0, 0), -1.0 + 0.5 * 1.0);
}

TEST(Enumerate, BranchCountIsProductOfSimpleRootCounts) {
    BranchingSpec spec;
    spec.n = 2;
    spec.m = 2;
    spec.a = Matrix(2, 2, {-1.0, 0.0, 0.0, -1.0});
    spec.b = Matrix(2, 2, {0.1, 0.0, 0.0, 0.1});
    spec.constraints = {{2, {-1.0, 0.0, 1.0}},  // w^2 - 1: two simple roots
                        {2, {-4.0, 0.0, 1.0}}}; // w^2 - 4: two simple roots
    const BranchSet set = enumerate_branches(spec);
    EXPECT_EQ(set.branches.size(), 4u);
}

TEST(Enumerate, MixedZeroRootFlaggedAllZeroExcluded) {
    BranchingSpec spec;
    spec.n = 2;
    spec.m = 2;
    spec.a = Matrix(2, 2, {-1.0, 0.0, 0.0, -1.0});
    spec.b = Matrix(2, 2, {0.1, 0.0, 0.0, 0.1});
    spec.constraints = {{2, {0.0, -1.0, 1.0}},  // w^2 - w: roots 0, 1
                        {2, {0.0, -1.0, 1.0}}};
    const BranchSet set = enumerate_branches(spec);
    // 2x2 combinations minus the all-zero one
    EXPECT_EQ(set.branches.size(), 3u);
    int flagged = 0;
    for (const Branch& br : set.branches)
        if (br.contains_zero_root) ++flagged;
    EXPECT_EQ(flagged, 2);
    bool noted_excluded = false;
    for (const auto& note : set.notes)
        if (note.find("all-zero") != std::string::npos) noted_excluded = true;
    EXPECT_TRUE(noted_excluded);
}

TEST(Enumerate, CoefficientScaleInvariance) {
    BranchingSpec spec = example3_spec(-1, 1, 3, 2);
    const BranchSet base = enumerate_branches(spec);
    for (double& c : spec.constraints[0].coeffs) c *= 417.0;
    const BranchSet scaled = enumerate_branches(spec);
    ASSERT_EQ(base.branches.size(), scaled.branches.size());
    for (std::size_t i = 0; i < base.branches.size(); ++i) {
        EXPECT_DOUBLE_EQ(base.branches[i].roots[0], scaled.branches[i].roots[0]);
        EXPECT_EQ(base.branches[i].verdict, scaled.branches[i].verdict);
    }
}

TEST(SimulateBranch, StableBranchStabilizesWithInitialRate) {
    const DAEProblem p = builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}});
    const BranchSet set = enumerate_branches(make_branching_spec(p, linearize(p)));
    const Branch& fast = set.branches[0]; // w = -3, abscissa -4
    const Trajectory traj = simulate_branch(p, fast, {0.05}, 12.0);
    EXPECT_EQ(traj.outcome.kind, Outcome::Kind::Stabilized);
    // early decay rate ~ exp(-4t): fit the log slope over [0, 0.25]
    double x_a = 0, x_b = 0, t_a = 0, t_b = 0;
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        if (traj.times[j] <= 0.01) { t_a = traj.times[j]; x_a = traj.x_values[j][0]; }
        if (traj.times[j] <= 0.25) { t_b = traj.times[j]; x_b = traj.x_values[j][0]; }
    }
    const double slope = std::log(x_b / x_a) / (t_b - t_a);
    EXPECT_NEAR(slope, -4.0, 0.5);
    // u follows the branch relation u = -3x
    for (std::size_t j = 0; j < traj.times.size(); ++j)
        EXPECT_NEAR(traj.u_values[j][0], -3.0 * traj.x_values[j][0], 1e-12);
}

TEST(SimulateBranch, RestPointStaysPut) {
    const DAEProblem p = builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}});
    const BranchSet set = enumerate_branches(make_branching_spec(p, linearize(p)));
    const Trajectory traj = simulate_branch(p, set.branches[0], {0.0}, 3.0);
    for (const Vector& x : traj.x_values) EXPECT_EQ(x[0], 0.0);
    EXPECT_EQ(traj.outcome.kind, Outcome::Kind::Stabilized);
}

TEST(SimulateBranch, UnstableBranchEscapes) {
    const DAEProblem p = builtin("example3", {{"alpha", 2}, {"beta", 1}, {"a", 3}, {"b", 2}});
    const BranchSet set = enumerate_branches(make_branching_spec(p, linearize(p)));
    const Branch& unstable = set.branches[1]; // w = -1, abscissa +1
    EXPECT_THROW(simulate_branch(p, unstable, {0.05}, 10.0), PreconditionError);
    SimulateBranchOptions opts;
    opts.force = true;
    const Trajectory traj = simulate_branch(p, unstable, {0.05}, 10.0, opts);
    EXPECT_NE(traj.outcome.kind, Outcome::Kind::Stabilized);
    EXPECT_EQ(traj.outcome.kind, Outcome::Kind::BlowUp); // the cubic term takes over
}

TEST(SimulateBranch, MissingBranchingBlockRejected) {
    const DAEProblem p = builtin("example2");
    EXPECT_THROW(make_branching_spec(p, linearize(p)), ValidationError);
}

} // namespace
