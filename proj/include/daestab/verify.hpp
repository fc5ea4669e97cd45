#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "daestab/branching.hpp"
#include "daestab/dynamics.hpp"
#include "daestab/polyroots.hpp"
#include "daestab/report.hpp"
#include "daestab/stability.hpp"

namespace daestab {

// Self-check suite behind the `verify` CLI command: every check re-derives a
// value with an independent route (hand-factored polynomials, closed-form
// solutions, rank-one identities) and compares the library against it.
struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    std::uint64_t seed = 0;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

namespace detail {

inline void run_check(VerifyReport& report, const std::string& name,
                      const std::function<std::string()>& body) {
    VerifyCheck check;
    check.name = name;
    try {
        check.detail = body();
        check.passed = true;
    } catch (const std::exception& e) {
        check.passed = false;
        check.detail = e.what();
    }
    report.checks.push_back(std::move(check));
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

inline std::string fmt(double v) {
    std::ostringstream out;
    out.precision(12);
    out << v;
    return out.str();
}

} // namespace detail

inline VerifyReport run_verification(std::uint64_t seed = 20250811) {
    using detail::fmt;
    using detail::require;
    VerifyReport report;
    report.seed = seed;
    auto check = [&](const std::string& name, const std::function<std::string()>& body) {
        detail::run_check(report, name, body);
    };

    check("linalg/eigenvalues-factored-quadratic", [&] {
        const Spectrum sp = eigenvalues(Matrix(2, 2, {0.0, 1.0, -2.0, -3.0}));
        require(std::abs(sp.values[0].real() + 2.0) < 1e-10 &&
                    std::abs(sp.values[1].real() + 1.0) < 1e-10,
                "companion eigenvalues differ from hand factorization");
        return "lambda^2+3lambda+2 -> {-2, -1}";
    });

    check("linalg/expm-nilpotent", [&] {
        const double t = 3.25;
        const Matrix e = matrix_exponential(Matrix(2, 2, {0.0, 1.0, 0.0, 0.0}), t);
        require(std::abs(e(0, 0) - 1.0) < 1e-13 && std::abs(e(0, 1) - t) < 1e-12 &&
                    std::abs(e(1, 0)) < 1e-13 && std::abs(e(1, 1) - 1.0) < 1e-13,
                "nilpotent exponential differs from the truncated series");
        return "exp([[0,1],[0,0]] t) = [[1,t],[0,1]]";
    });

    check("linalg/solve-recovers-integro-rhs", [&] {
        const Expr kernel = parse_with_symbols("z*s", SymbolTable::kernel_vars());
        const auto scheme = QuadratureScheme::gauss_legendre(64);
        const Matrix a4 = Matrix::identity(64) +
                          discretize_integro(kernel, scheme);
        Vector u(64);
        for (int i = 0; i < 64; ++i) u[i] = std::sin(3.0 * scheme.nodes[i]) + 0.25;
        const Vector rec = LuFactor(a4).solve(a4 * u);
        require(norm_inf(vsub(rec, u)) <= 1e-8, "solve-then-apply round trip above 1e-8");
        return "forward-apply then solve recovers u, error " + fmt(norm_inf(vsub(rec, u)));
    });

    check("linalg/operator-norm-shear", [&] {
        const double n = operator_norm(Matrix(2, 2, {0.0, 2.0, 0.0, 0.0}));
        require(std::abs(n - 2.0) < 1e-12, "singular values of the shear are {2, 0}");
        return "||[[0,2],[0,0]]|| = " + fmt(n);
    });

    check("linalg/polynomial-roots-example", [&] {
        const auto roots = polynomial_real_roots({3.0, 4.0, 1.0});
        require(roots.size() == 2 && std::abs(roots[0].value + 3.0) < 1e-12 &&
                    std::abs(roots[1].value + 1.0) < 1e-12 && roots[0].simple && roots[1].simple,
                "w^2+4w+3 must have simple roots {-3,-1}");
        return "w^2+4w+3 -> {-3, -1}, both simple";
    });

    check("exprparse/constraint-at-rest", [&] {
        const Expr g = parse("2*u1 - x1 + 2*u1*sin(u1) - x1*sin(u1)", 1, 1);
        const Vector x{0.0}, u{0.0};
        require(std::abs(g.evaluate(EvalContext{x, u, 0.0})) == 0.0, "G(0,0) must vanish");
        const Vector x2{0.4}, u2{0.2};
        require(std::abs(g.evaluate(EvalContext{x2, u2, 0.0})) < 1e-15,
                "u = x/2 must solve the constraint");
        return "constraint vanishes at the rest point and along u = x/2";
    });

    check("exprparse/error-offset", [&] {
        try {
            parse("x3 + ", 3, 0);
            throw std::runtime_error("malformed input was accepted");
        } catch (const ParseError& e) {
            require(e.offset() == 5, "syntax error offset must be 5");
        }
        return "syntax error reported at byte 5";
    });

    check("model/example1-rank-one-inverse", [&] {
        const Expr kernel = parse_with_symbols("z*s", SymbolTable::kernel_vars());
        const Matrix k = discretize_integro(kernel, QuadratureScheme::gauss_legendre(64));
        const Matrix inv = LuFactor(Matrix::identity(64) + k).inverse();
        const Matrix diff = Matrix::identity(64) - inv;
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 64; ++j) {
                num += diff(i, j) * k(i, j);
                den += k(i, j) * k(i, j);
            }
        const double c = num / den;
        require(std::abs(c - 0.75) < 1e-10, "fitted inverse coefficient is " + fmt(c));
        return "(I+K)^-1 = I - cK with fitted c = " + fmt(c) + " (identity forces 3/4)";
    });

    check("model/example1-kernel-spectrum", [&] {
        const Expr kernel = parse_with_symbols("z*s", SymbolTable::kernel_vars());
        const Matrix k = discretize_integro(kernel, QuadratureScheme::gauss_legendre(64));
        const Spectrum sp = eigenvalues(k);
        int nonzero = 0;
        double lead = 0.0;
        for (const auto& z : sp.values)
            if (std::abs(z) > 1e-10) {
                ++nonzero;
                lead = z.real();
            }
        require(nonzero == 1 && std::abs(lead - 1.0 / 3.0) < 1e-10,
                "rank-one kernel spectrum must be {1/3, 0...}");
        return "K spectrum {1/3, 0 x63}";
    });

    check("model/builtin-rest-residuals", [&] {
        for (const auto& p :
             {builtin("example1", {{"N", 32}}), builtin("example2"),
              builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}})}) {
            require(norm_inf(p.eval_F(p.x0, p.u0, 0.0)) <= 1e-12 &&
                        (p.m == 0 || norm_inf(p.eval_G(p.x0, p.u0, 0.0)) <= 1e-12),
                    p.name + " rest-point residual above 1e-12");
        }
        return "all builtin rest points vanish to 1e-12";
    });

    check("reduction/example2-jacobians", [&] {
        const LinearizationData lin = linearize(builtin("example2"));
        require(std::abs(lin.A1(0, 0) + 0.5) < 1e-9 && std::abs(lin.A2(0, 0) + 1.0) < 1e-9 &&
                    std::abs(lin.A3(0, 0) + 1.0) < 1e-9 && std::abs(lin.A4(0, 0) - 2.0) < 1e-9,
                "Jacobians differ from the hand derivatives");
        require(std::abs(lin.M(0, 0) + 1.0) < 1e-9, "M must be -1");
        return "A1..A4 = (-1/2, -1, -1, 2), M = -1";
    });

    check("reduction/example1-reduced-operator", [&] {
        const LinearizationData lin = linearize(builtin("example1", {{"N", 64}}));
        require((lin.M + Matrix::identity(64)).max_abs() <= 1e-8, "M must equal -I");
        return "M = -I for the discretized model (64 nodes)";
    });

    check("reduction/implicit-u-and-field", [&] {
        const LinearizationData lin = linearize(builtin("example2"));
        require(std::abs(implicit_u(lin, {0.1})[0] - 0.05) < 1e-12, "u(0.1) must be 0.05");
        require(std::abs(reduced_field(lin, {0.1})[0] + 0.09) < 1e-10,
                "reduced field at 0.1 must be -0.09");
        return "u(0.1) = 0.05, f(0.1) = -0.09";
    });

    check("stability/decay-constants-scalar", [&] {
        const DecayEstimate d = estimate_decay(Matrix(1, 1, {-1.0}), 0.1);
        require(std::abs(d.l - 0.9) < 1e-12 && d.C >= 1.0 && d.C <= 1.1,
                "scalar decay constants out of range");
        for (double t : {0.0, 0.5, 3.0, 20.0})
            require(std::exp(-t) <= d.C * std::exp(-d.l * t) * (1 + 1e-12),
                    "envelope violated at t = " + fmt(t));
        return "l = 0.9, C = " + fmt(d.C) + ", envelope holds";
    });

    check("stability/q-profile-example2", [&] {
        const LinearizationData lin = linearize(builtin("example2"));
        const LipschitzProfile prof = estimate_q(lin, {0.1}, 2000, seed);
        require(std::abs(prof.points[0].q - 0.2) < 0.015,
                "q(0.1) must approximate sup |x1+x2| = 0.2, got " + fmt(prof.points[0].q));
        return "q(0.1) = " + fmt(prof.points[0].q) + " (analytic sup 0.2)";
    });

    check("stability/basin-example2", [&] {
        AnalyzeOptions opts;
        opts.seed = seed;
        const StabilityAnalysis a = run_stability_analysis(builtin("example2"), opts);
        require(a.basin && a.basin->r_star >= 0.12 && a.basin->r_star <= 0.30,
                "certified radius out of the expected range");
        const double expected = (1.0 - a.basin->q_star) * a.basin->r_star / a.decay->C;
        require(std::abs(a.basin->delta_max - expected) < 1e-15, "delta_max relation violated");
        return "r* = " + fmt(a.basin->r_star) + ", delta_max = " + fmt(a.basin->delta_max);
    });

    check("dynamics/exact-solution", [&] {
        const LinearizationData lin = linearize(builtin("example2"));
        const Trajectory traj = integrate_reduced(lin, {0.5}, 10.0);
        double sup = 0.0;
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            const double exact =
                0.5 / (std::exp(traj.times[j]) * 0.5 + 0.5);
            sup = std::max(sup, std::abs(traj.x_values[j][0] - exact));
        }
        require(sup <= 1e-6, "sup-norm error vs closed form is " + fmt(sup));
        return "matches x(t) = D/(e^t(1-D)+D) to " + fmt(sup);
    });

    check("dynamics/blow-up-bracket", [&] {
        const LinearizationData lin = linearize(builtin("example2"));
        const Trajectory traj = integrate_reduced(lin, {2.0}, 10.0);
        const double t_star = std::log(2.0);
        require(traj.outcome.kind == Outcome::Kind::BlowUp, "delta = 2 must blow up");
        require(traj.outcome.t_star_low <= t_star && t_star <= traj.outcome.t_star_high,
                "bracket misses ln 2");
        require(traj.outcome.t_star_high - traj.outcome.t_star_low <= 1e-2,
                "bracket wider than 1e-2");
        return "t* in [" + fmt(traj.outcome.t_star_low) + ", " + fmt(traj.outcome.t_star_high) +
               "], ln 2 = " + fmt(t_star);
    });

    check("dynamics/volterra-picard-agreement", [&] {
        const LinearizationData lin = linearize(builtin("example2"));
        VolterraOptions opts;
        opts.grid = 500;
        opts.sweeps = 30;
        const Trajectory traj = volterra_picard(lin, {0.3}, 5.0, opts);
        double sup = 0.0;
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            const double exact = 0.3 / (std::exp(traj.times[j]) * 0.7 + 0.3);
            sup = std::max(sup, std::abs(traj.x_values[j][0] - exact));
        }
        require(sup <= 1e-4, "Picard sup-norm error is " + fmt(sup));
        return "Volterra-Picard matches the closed form to " + fmt(sup);
    });

    check("dynamics/successive-approximations", [&] {
        const DAEProblem p = builtin("example2");
        SuccessiveOptions opts;
        opts.grid_points = 512;
        const SuccessiveResult res = successive_approximations(p, {0.3}, 12, 5.0, opts);
        const Trajectory& last = res.iterates.back();
        double sup = 0.0;
        for (std::size_t j = 0; j < last.times.size(); ++j) {
            const double exact = 0.3 / (std::exp(last.times[j]) * 0.7 + 0.3);
            sup = std::max(sup, std::abs(last.x_values[j][0] - exact));
        }
        require(sup <= 1e-4, "iterate 12 error vs closed form is " + fmt(sup));
        for (std::size_t i = 1; i < res.x_sup_gaps.size(); ++i)
            require(res.x_sup_gaps[i] <= res.x_sup_gaps[i - 1] * (1 + 1e-9),
                    "consecutive gaps must decrease");
        return "iterate 12 within " + fmt(sup) + "; gaps decrease monotonically";
    });

    check("branching/example3-verdicts", [&] {
        const DAEProblem stable_case =
            builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}});
        const BranchSet s1 =
            enumerate_branches(make_branching_spec(stable_case, linearize(stable_case)));
        require(s1.branches.size() == 2 && std::abs(s1.branches[0].abscissa + 4.0) < 1e-10 &&
                    std::abs(s1.branches[1].abscissa + 2.0) < 1e-10,
                "alpha = -1 must give stable abscissae {-4, -2}");
        const DAEProblem mixed_case =
            builtin("example3", {{"alpha", 2}, {"beta", 1}, {"a", 3}, {"b", 2}});
        const BranchSet s2 =
            enumerate_branches(make_branching_spec(mixed_case, linearize(mixed_case)));
        int unstable = 0;
        for (const auto& b : s2.branches)
            if (b.verdict == Branch::Verdict::Unstable) ++unstable;
        require(unstable == 1, "alpha = 2 must make exactly one branch unstable");
        return "roots {-3, -1}; verdicts match alpha + beta*c";
    });

    check("branching/stable-branch-simulation", [&] {
        const DAEProblem p = builtin("example3", {{"alpha", -1}, {"beta", 1}, {"a", 3}, {"b", 2}});
        const BranchSet set = enumerate_branches(make_branching_spec(p, linearize(p)));
        const Trajectory traj = simulate_branch(p, set.branches[0], {0.05}, 12.0);
        require(traj.outcome.kind == Outcome::Kind::Stabilized,
                "stable branch must stabilize from 0.05");
        return "branch w = -3 stabilizes from delta = 0.05";
    });

    return report;
}

inline nlohmann::json verify_report_json(const VerifyReport& report) {
    nlohmann::json j;
    j["seed"] = report.seed;
    j["all_passed"] = report.all_passed();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : report.checks)
        rows.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["checks"] = rows;
    return j;
}

} // namespace daestab
