// Acceptance suite: each test is one acceptance criterion and prints a
// single [ACCEPT] pass/fail line, tolerances pinned in code.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "daestab/daestab.hpp"

namespace {

using namespace daestab;

class Acceptance : public ::testing::Test {
protected:
    void TearDown() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::printf("[ACCEPT] %s: %s\n", info->name(), HasFailure() ? "FAIL" : "PASS");
        std::fflush(stdout);
    }
};

double exact_example2(double delta, double t) {
    return delta / (std::exp(t) * (1.0 - delta) + delta);
}

const LinearizationData& example2_lin() {
    static const LinearizationData lin = linearize(builtin("example2"));
    return lin;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Criteria 5 and 6 share the certified trajectory ensembles.
struct CertifiedEnsemble {
    StabilityAnalysis analysis;
    std::vector<Vector> deltas;
    std::vector<Trajectory> trajectories;
    std::vector<std::string> errors;
};

const CertifiedEnsemble& certified_ensemble(const std::string& which) {
    static std::map<std::string, CertifiedEnsemble> cache;
    auto it = cache.find(which);
    if (it != cache.end()) return it->second;

    CertifiedEnsemble ens;
    const DAEProblem p = which == "example1" ? builtin("example1", {{"N", 64}})
                                             : builtin(which);
    AnalyzeOptions aopts;
    aopts.threads = 2;
    ens.analysis = run_stability_analysis(p, aopts);
    const double delta_max = ens.analysis.basin ? ens.analysis.basin->delta_max : 0.0;

    const int count = 100;
    ens.deltas.resize(count);
    ens.trajectories.resize(count);
    ens.errors.resize(count);
    for (int i = 0; i < count; ++i)
        ens.deltas[i] = CounterRng::ball(20250811, 404, i, p.n, delta_max);

    IntegrateOptions iopts;
    iopts.recover_u = false;
    iopts.output_points = 200;
    const LinearizationData& lin = ens.analysis.lin;
    detail::parallel_for(count, 2, [&](int i) {
        try {
            ens.trajectories[i] = integrate_reduced(lin, vadd(p.x0, ens.deltas[i]), 40.0, iopts);
        } catch (const Error& e) {
            ens.errors[i] = e.what();
        }
    });
    return cache.emplace(which, std::move(ens)).first->second;
}

TEST_F(Acceptance, Criterion01_ExactSolutionReproduction) {
    for (double delta : {0.5, -1.0, 0.9}) {
        const auto t0 = std::chrono::steady_clock::now();
        const Trajectory traj = integrate_reduced(example2_lin(), {delta}, 10.0);
        const double elapsed = seconds_since(t0);
        double sup = 0.0;
        for (std::size_t j = 0; j < traj.times.size(); ++j)
            sup = std::max(sup,
                           std::abs(traj.x_values[j][0] - exact_example2(delta, traj.times[j])));
        EXPECT_LE(sup, 1e-6) << "delta = " << delta;
        EXPECT_LT(elapsed, 1.0) << "delta = " << delta;
    }
}

TEST_F(Acceptance, Criterion02_BlowUpTimeBrackets) {
    for (double delta : {1.5, 2.0, 3.0, 10.0}) {
        const auto t0 = std::chrono::steady_clock::now();
        const Trajectory traj = integrate_reduced(example2_lin(), {delta}, 10.0);
        const double elapsed = seconds_since(t0);
        const double t_star = std::log(delta / (delta - 1.0));
        ASSERT_EQ(traj.outcome.kind, Outcome::Kind::BlowUp) << "delta = " << delta;
        EXPECT_LE(traj.outcome.t_star_low, t_star) << "delta = " << delta;
        EXPECT_GE(traj.outcome.t_star_high, t_star) << "delta = " << delta;
        EXPECT_LE(traj.outcome.t_star_high - traj.outcome.t_star_low, 1e-2);
        EXPECT_LT(elapsed, 2.0) << "delta = " << delta;
    }
}

TEST_F(Acceptance, Criterion03_StationarySolutions) {
    IntegrateOptions iopts;
    iopts.early_stop_on_settle = false; // drift is judged over the full horizon
    for (double delta : {0.0, 1.0}) {
        const Trajectory traj = integrate_reduced(example2_lin(), {delta}, 10.0, iopts);
        EXPECT_GE(traj.times.back(), 10.0 * (1.0 - 1e-12));
        for (std::size_t j = 0; j < traj.times.size(); ++j)
            EXPECT_LE(std::abs(traj.x_values[j][0] - delta), 1e-9) << "delta = " << delta;
    }
}

TEST_F(Acceptance, Criterion04_Example1SpectralStructure) {
    const DAEProblem p = builtin("example1", {{"N", 64}});
    const LinearizationData lin = linearize(p);

    const Spectrum sp = eigenvalues(lin.M);
    ASSERT_EQ(sp.values.size(), 64u);
    for (const auto& z : sp.values) {
        EXPECT_NEAR(z.real(), -1.0, 1e-8);
        EXPECT_NEAR(z.imag(), 0.0, 1e-8);
    }

    const Expr kernel = parse_with_symbols("z*s", SymbolTable::kernel_vars());
    const Matrix k = discretize_integro(kernel, QuadratureScheme::gauss_legendre(64));
    const Matrix a4 = Matrix::identity(64) + k;
    LuFactor f(a4);
    for (int trial = 0; trial < 20; ++trial) {
        Vector v(64);
        for (int i = 0; i < 64; ++i) v[i] = CounterRng::gauss(11, trial, i);
        EXPECT_LE(norm_inf(vsub(f.solve(a4 * v), v)), 1e-8 * std::max(1.0, norm_inf(v)));
    }

    // the rank-one identity K^2 = (1/3)K forces the fitted inverse coefficient to 3/4
    const Matrix diff = Matrix::identity(64) - f.inverse();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            num += diff(i, j) * k(i, j);
            den += k(i, j) * k(i, j);
        }
    EXPECT_NEAR(num / den, 0.75, 1e-8);
}

TEST_F(Acceptance, Criterion05_BasinCertificateSoundness) {
    for (const std::string which : {"example2", "example1"}) {
        const CertifiedEnsemble& ens = certified_ensemble(which);
        ASSERT_TRUE(ens.analysis.basin.has_value()) << which;
        ASSERT_GT(ens.analysis.basin->delta_max, 0.0) << which;
        int stabilized = 0;
        for (int i = 0; i < static_cast<int>(ens.trajectories.size()); ++i) {
            ASSERT_TRUE(ens.errors[i].empty()) << which << " sample " << i << ": " << ens.errors[i];
            if (ens.trajectories[i].outcome.kind == Outcome::Kind::Stabilized) ++stabilized;
        }
        EXPECT_EQ(stabilized, 100) << which;
    }
}

TEST_F(Acceptance, Criterion06_DecayEnvelope) {
    for (const std::string which : {"example2", "example1"}) {
        const CertifiedEnsemble& ens = certified_ensemble(which);
        ASSERT_TRUE(ens.analysis.decay.has_value());
        const double l = ens.analysis.decay->l;
        const double C = ens.analysis.decay->C;
        const Vector& x0 = ens.analysis.lin.problem.x0;
        for (std::size_t i = 0; i < ens.trajectories.size(); ++i) {
            const double dn = norm2(ens.deltas[i]);
            const Trajectory& traj = ens.trajectories[i];
            for (std::size_t j = 0; j < traj.times.size(); ++j) {
                const double bound =
                    C * dn * std::exp((l / 2.0 - l) * traj.times[j]) * (1.0 + 1e-9) + 1e-300;
                EXPECT_LE(norm2(vsub(traj.x_values[j], x0)), bound)
                    << which << " sample " << i << " t = " << traj.times[j];
            }
        }
    }
}

TEST_F(Acceptance, Criterion07_MethodCrossValidation) {
    const DAEProblem p = builtin("example2");

    IntegrateOptions iopts;
    iopts.output_points = 501;
    iopts.early_stop_on_settle = false;
    const Trajectory rk = integrate_reduced(example2_lin(), {0.3}, 5.0, iopts);

    VolterraOptions vopts;
    vopts.grid = 500;
    vopts.sweeps = 30;
    const Trajectory vp = volterra_picard(example2_lin(), {0.3}, 5.0, vopts);

    SuccessiveOptions sopts;
    sopts.grid_points = 501;
    const SuccessiveResult sa = successive_approximations(p, {0.3}, 12, 5.0, sopts);
    const Trajectory& sx = sa.iterates.back();

    ASSERT_EQ(rk.times.size(), 501u);
    ASSERT_EQ(vp.times.size(), 501u);
    ASSERT_EQ(sx.times.size(), 501u);
    double rk_vp = 0.0, rk_sa = 0.0, vp_sa = 0.0;
    for (std::size_t j = 0; j < rk.times.size(); ++j) {
        rk_vp = std::max(rk_vp, std::abs(rk.x_values[j][0] - vp.x_values[j][0]));
        rk_sa = std::max(rk_sa, std::abs(rk.x_values[j][0] - sx.x_values[j][0]));
        vp_sa = std::max(vp_sa, std::abs(vp.x_values[j][0] - sx.x_values[j][0]));
    }
    EXPECT_LE(rk_vp, 1e-4);
    EXPECT_LE(rk_sa, 1e-4);
    EXPECT_LE(vp_sa, 1e-4);

    ASSERT_GE(sa.x_sup_gaps.size(), 3u);
    for (std::size_t i = 1; i < sa.x_sup_gaps.size(); ++i)
        EXPECT_LE(sa.x_sup_gaps[i], sa.x_sup_gaps[i - 1] * (1.0 + 1e-9)) << "gap " << i;
}

TEST_F(Acceptance, Criterion08_BranchingExample3) {
    // roots of w^2 + 4w + 3 for a = 3, b = 2
    const DAEProblem stable_case =
        builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}});
    const BranchSet s1 =
        enumerate_branches(make_branching_spec(stable_case, linearize(stable_case)));
    ASSERT_EQ(s1.branches.size(), 2u);
    EXPECT_NEAR(s1.branches[0].roots[0], -3.0, 1e-10);
    EXPECT_NEAR(s1.branches[1].roots[0], -1.0, 1e-10);
    EXPECT_EQ(s1.branches[0].verdict, Branch::Verdict::Stable);
    EXPECT_EQ(s1.branches[1].verdict, Branch::Verdict::Stable);

    const DAEProblem mixed_case =
        builtin("example3", {{"alpha", 2}, {"beta", 1}, {"a", 3}, {"b", 2}});
    const BranchSet s2 = enumerate_branches(make_branching_spec(mixed_case, linearize(mixed_case)));
    int unstable = 0;
    const Branch* stable_branch = nullptr;
    for (const Branch& b : s2.branches) {
        if (b.verdict == Branch::Verdict::Unstable) ++unstable;
        if (b.verdict == Branch::Verdict::Stable) stable_branch = &b;
    }
    EXPECT_EQ(unstable, 1);
    ASSERT_NE(stable_branch, nullptr);

    const Trajectory traj = simulate_branch(mixed_case, *stable_branch, {0.05}, 14.0);
    EXPECT_EQ(traj.outcome.kind, Outcome::Kind::Stabilized);
}

TEST_F(Acceptance, Criterion09_NonAutonomousExtension) {
    const char* dir = std::getenv("DAESTAB_PROBLEM_DIR");
    const DAEProblem p =
        load_problem(std::string(dir ? dir : "problems") + "/example2_perturbed.json");
    AnalyzeOptions aopts;
    aopts.threads = 2;
    const StabilityAnalysis a = run_stability_analysis(p, aopts);
    ASSERT_TRUE(a.decay.has_value());

    const Trajectory traj = integrate_reduced(a.lin, {0.3}, 20.0);
    EXPECT_EQ(traj.outcome.kind, Outcome::Kind::Stabilized);
    // decay envelope with the constant relaxed by a factor 2
    const double l = a.decay->l;
    const double C = 2.0 * a.decay->C;
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        EXPECT_LE(std::abs(traj.x_values[j][0]),
                  C * 0.3 * std::exp((l / 2.0 - l) * traj.times[j]) * (1.0 + 1e-9))
            << "t = " << traj.times[j];
    }
}

TEST_F(Acceptance, Criterion10_VerifyDeterminism) {
    const char* cli = std::getenv("DAESTAB_CLI");
    ASSERT_NE(cli, nullptr) << "DAESTAB_CLI not set";
    const std::string d1 = std::string(::testing::TempDir()) + "accept_v1";
    const std::string d2 = std::string(::testing::TempDir()) + "accept_v2";
    auto run = [&](const std::string& dir) {
        const std::string cmd =
            std::string(cli) + " verify --seed 20250811 --out " + dir + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    ASSERT_EQ(run(d1), 0);
    ASSERT_EQ(run(d2), 0);
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = slurp(d1 + "/verify_report.json");
    const std::string b = slurp(d2 + "/verify_report.json");
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b);
}

} // namespace
