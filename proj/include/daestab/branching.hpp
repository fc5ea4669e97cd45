#pragma once

#include <string>
#include <vector>

#include "daestab/dynamics.hpp"
#include "daestab/polyroots.hpp"
#include "daestab/reduction.hpp"
#include "daestab/stability.hpp"

namespace daestab {

// Degenerate-constraint data: the linear part of the differential equations
// (premultiplied by A^-1, so the system reads dx/dt = a x + b u + ...) and
// the leading polynomial coefficients of each constraint.
struct BranchingSpec {
    int n = 0;
    int m = 0;
    Matrix a; // n x n
    Matrix b; // n x m
    std::vector<BranchConstraint> constraints;
};

// One small-solution branch u_k = w_k* x_k with its first-approximation
// stability verdict.
struct Branch {
    Vector roots;               // w_k*, k = 1..m
    bool contains_zero_root = false;
    Matrix M;                   // c_ik = a_ik + b_ik w_k* (k <= m), a_ik otherwise
    double abscissa = 0.0;
    enum class Verdict { Stable, Unstable, Marginal } verdict = Verdict::Marginal;

    std::string verdict_tag() const {
        switch (verdict) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Marginal: return "marginal";
        }
        return "?";
    }
};

struct BranchSet {
    std::vector<std::vector<PolyRoot>> constraint_roots; // all real roots, per constraint
    std::vector<Branch> branches; // lexicographic in the root combinations
    std::vector<std::string> notes;
};

// Assembles the branching data for a problem whose file/builtin declared the
// constraint coefficients. a and b come from the linearization; A^-1
// premultiplies the linear parts so the system reads dx/dt = a x + b u + R.
inline BranchingSpec make_branching_spec(const DAEProblem& p, const LinearizationData& lin) {
    if (!p.branching)
        throw ValidationError("branching", "problem carries no branching block");
    BranchingSpec spec;
    spec.n = p.n;
    spec.m = p.m;
    spec.a = lin.A_lu->solve(lin.A1);
    spec.b = lin.A_lu->solve(lin.A2);
    spec.constraints = p.branching->constraints;
    return spec;
}

// Real roots of the k-th branch polynomial sum_s m_ks w^s. Non-simple roots
// are retained but flagged: the implicit function theorem behind the branch
// construction needs simplicity.
inline std::vector<PolyRoot> branch_roots(const BranchingSpec& spec, int k) {
    if (k < 0 || k >= spec.m) throw DimensionError("branch_roots: constraint index out of range");
    try {
        return polynomial_real_roots(spec.constraints[k].coeffs);
    } catch (const DomainError&) {
        throw NoBranchError("constraint " + std::to_string(k + 1) +
                                " has an identically zero branch polynomial",
                            k);
    }
}

// Cartesian product of the simple real roots across constraints; each
// combination gets a branch matrix and a spectral verdict. Marginal spectra
// (|abscissa| <= 1e-9) are reported as inconclusive, never stable. The
// all-zero root combination is excluded; combinations containing some zero
// roots are enumerated but flagged.
inline BranchSet enumerate_branches(const BranchingSpec& spec) {
    BranchSet out;
    std::vector<std::vector<double>> simple_roots(spec.m);
    for (int k = 0; k < spec.m; ++k) {
        out.constraint_roots.push_back(branch_roots(spec, k));
        for (const PolyRoot& r : out.constraint_roots.back())
            if (r.simple) simple_roots[k].push_back(r.value);
        if (simple_roots[k].empty())
            throw NoBranchError("constraint " + std::to_string(k + 1) +
                                    " has no simple real root",
                                k);
    }

    std::vector<std::size_t> idx(spec.m, 0);
    bool carried = false;
    while (!carried) {
        Vector roots(spec.m);
        double scale = 1.0;
        for (int k = 0; k < spec.m; ++k) {
            roots[k] = simple_roots[k][idx[k]];
            scale = std::max(scale, std::abs(roots[k]));
        }
        int zeros = 0;
        for (int k = 0; k < spec.m; ++k)
            if (std::abs(roots[k]) <= 1e-9 * scale) ++zeros;

        if (zeros == spec.m && spec.m > 0) {
            out.notes.push_back("all-zero root combination excluded (sum |w_i| = 0)");
        } else {
            Branch br;
            br.roots = roots;
            br.contains_zero_root = zeros > 0;
            br.M = spec.a;
            for (int i = 0; i < spec.n; ++i)
                for (int k = 0; k < spec.m; ++k) br.M(i, k) += spec.b(i, k) * roots[k];
            br.abscissa = spectral_test(br.M).abscissa;
            if (std::abs(br.abscissa) <= 1e-9)
                br.verdict = Branch::Verdict::Marginal;
            else
                br.verdict = br.abscissa < 0.0 ? Branch::Verdict::Stable
                                               : Branch::Verdict::Unstable;
            if (br.contains_zero_root)
                out.notes.push_back("a combination contains a zero root; admissibility of "
                                    "mixed-zero combinations is not settled");
            out.branches.push_back(std::move(br));
        }

        // lexicographic advance
        carried = true;
        for (int k = spec.m - 1; k >= 0; --k) {
            if (++idx[k] < simple_roots[k].size()) {
                carried = false;
                break;
            }
            idx[k] = 0;
        }
        if (spec.m == 0) break;
    }
    return out;
}

struct SimulateBranchOptions {
    IntegrateOptions integrate;
    bool force = false; // integrate an unstable/marginal branch anyway
};

// Substitutes the first-order branch u_k = u0_k + w_k* (x_k - x0_k) into the
// problem's full right-hand side (the exact remainders ride along inside F)
// and integrates dx/dt = A^-1 F(x, u(x), t) from the absolute state x_init.
inline Trajectory simulate_branch(const DAEProblem& p, const Branch& branch,
                                  const Vector& x_init, double T,
                                  const SimulateBranchOptions& opts = {}) {
    if (branch.verdict != Branch::Verdict::Stable && !opts.force)
        throw PreconditionError("simulate_branch: branch is " + branch.verdict_tag() +
                                "; pass force to integrate it anyway");
    if (static_cast<int>(branch.roots.size()) != p.m)
        throw DimensionError("simulate_branch: root vector does not match the problem");
    const LuFactor a_lu(p.A);

    auto rhs = [&](double t, const Vector& x) {
        Vector u = p.u0;
        for (int k = 0; k < p.m; ++k) u[k] += branch.roots[k] * (x[k] - p.x0[k]);
        Vector f = p.eval_F(x, u, t);
        if (p.has_perturbations()) {
            const Vector dx = vsub(x, p.x0);
            const Vector du = vsub(u, p.u0);
            if (!p.A1_tilde.empty()) f = vadd(f, p.eval_A1_tilde(t) * dx);
            if (!p.A2_tilde.empty()) f = vadd(f, p.eval_A2_tilde(t) * du);
        }
        return a_lu.solve(f);
    };

    Trajectory traj = detail::dopri5(rhs, x_init, T, p.x0, opts.integrate);
    if (norm2(vsub(x_init, p.x0)) > 0.5)
        traj.notes.push_back("initial deviation is large for a first-order branch substitution");
    // u along the branch at the stored points
    traj.u_values.clear();
    traj.u_values.reserve(traj.times.size());
    for (const Vector& x : traj.x_values) {
        Vector u = p.u0;
        for (int k = 0; k < p.m; ++k) u[k] += branch.roots[k] * (x[k] - p.x0[k]);
        traj.u_values.push_back(std::move(u));
    }
    return traj;
}

} // namespace daestab
