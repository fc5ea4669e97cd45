#pragma once

#include <optional>
#include <string>
#include <vector>

#include "daestab/eigen.hpp"
#include "daestab/matrix.hpp"
#include "daestab/problem.hpp"

namespace daestab {

// Everything the constraint-elimination layer derives at the rest point:
// the four Jacobians, the reduced operator M = A^-1 (A1 - A2 A4^-1 A3),
// and prefactored solvers. Self-contained and immutable after linearize();
// all queries on it are pure and thread-safe.
struct LinearizationData {
    DAEProblem problem;

    Matrix A1, A2, A3, A4;
    bool a4_invertible = false;

    Matrix B; // A1 - A2 A4^-1 A3 (valid iff a4_invertible)
    Matrix M; // A^-1 B             (valid iff a4_invertible)
    Matrix S; // -A4^-1 A3, the first-order slope of u(x)

    double norm_A_inv = 0.0; // ||A^-1|| in the induced 2-norm

    std::vector<std::string> warnings;

    std::optional<LuFactor> A_lu;
    std::optional<LuFactor> A4_lu;

    const Vector& x_rest() const noexcept { return problem.x0; }
    const Vector& u_rest() const noexcept { return problem.u0; }

    // Nonlinear remainder of F: R(x,u) = F(x,u) - A1 (x-x0) - A2 (u-u0).
    Vector remainder_R(const Vector& x, const Vector& u, double t = 0.0) const {
        Vector r = problem.eval_F(x, u, t);
        const Vector dx = vsub(x, problem.x0);
        const Vector du = vsub(u, problem.u0);
        const Vector lin = vadd(A1 * dx, A2 * du);
        return vsub(r, lin);
    }

    // Nonlinear remainder of G: r(x,u) = G(x,u) - A3 (x-x0) - A4 (u-u0).
    Vector remainder_r(const Vector& x, const Vector& u, double t = 0.0) const {
        Vector r = problem.eval_G(x, u, t);
        const Vector dx = vsub(x, problem.x0);
        const Vector du = vsub(u, problem.u0);
        const Vector lin = vadd(A3 * dx, A4 * du);
        return vsub(r, lin);
    }
};

struct ImplicitOptions {
    double tol = 1e-12;
    int max_iter = 100;
    // The contraction is only guaranteed near the rest point; outside this
    // ball the solve refuses instead of risking a different solution branch.
    double trust_radius = 1.0;
};

namespace detail {

// central difference of a vector map, one column per perturbed coordinate
template <typename EvalFn>
Matrix fd_jacobian(EvalFn&& eval, const Vector& base, int out_dim, double h) {
    Matrix j(out_dim, static_cast<int>(base.size()));
    Vector p = base;
    for (std::size_t c = 0; c < base.size(); ++c) {
        p[c] = base[c] + h;
        const Vector hi = eval(p);
        p[c] = base[c] - h;
        const Vector lo = eval(p);
        p[c] = base[c];
        for (int r = 0; r < out_dim; ++r) j(r, static_cast<int>(c)) = (hi[r] - lo[r]) / (2.0 * h);
    }
    return j;
}

inline bool jacobians_disagree(const Matrix& supplied, const Matrix& fd) {
    const double scale = std::max(1.0, supplied.max_abs());
    return (supplied - fd).max_abs() > 1e-3 * scale;
}

} // namespace detail

// Jacobians at the rest point: user-supplied matrices when present, central
// finite differences with step 1e-6 * max(1, ||rest point||) otherwise.
// Supplied matrices that disagree with finite differences beyond 1e-3
// produce a warning on the result rather than an error.
inline LinearizationData linearize(const DAEProblem& p) {
    LinearizationData lin;
    lin.problem = p;
    const DAEProblem& q = lin.problem;

    double point_norm = 0.0;
    for (double v : q.x0) point_norm += v * v;
    for (double v : q.u0) point_norm += v * v;
    const double h = 1e-6 * std::max(1.0, std::sqrt(point_norm));

    const Matrix fd_a1 = detail::fd_jacobian(
        [&](const Vector& x) { return q.eval_F(x, q.u0); }, q.x0, q.n, h);
    const Matrix fd_a2 = detail::fd_jacobian(
        [&](const Vector& u) { return q.eval_F(q.x0, u); }, q.u0, q.n, h);
    const Matrix fd_a3 = detail::fd_jacobian(
        [&](const Vector& x) { return q.eval_G(x, q.u0); }, q.x0, q.m, h);
    const Matrix fd_a4 = detail::fd_jacobian(
        [&](const Vector& u) { return q.eval_G(q.x0, u); }, q.u0, q.m, h);

    auto pick = [&lin](const std::optional<Matrix>& supplied, const Matrix& fd,
                       const char* which) {
        if (!supplied) return fd;
        if (detail::jacobians_disagree(*supplied, fd))
            lin.warnings.push_back(std::string("supplied ") + which +
                                   " disagrees with finite differences beyond 1e-3");
        return *supplied;
    };
    lin.A1 = pick(q.A1, fd_a1, "A1");
    lin.A2 = pick(q.A2, fd_a2, "A2");
    lin.A3 = pick(q.A3, fd_a3, "A3");
    lin.A4 = pick(q.A4, fd_a4, "A4");

    lin.A_lu.emplace(q.A);
    lin.norm_A_inv = q.n > 0 ? operator_norm(lin.A_lu->inverse()) : 0.0;

    try {
        lin.A4_lu.emplace(lin.A4);
        lin.a4_invertible = true;
    } catch (const SingularMatrixError&) {
        lin.a4_invertible = false;
    }

    if (lin.a4_invertible) {
        lin.S = lin.A4_lu->solve(lin.A3) * -1.0;
        lin.B = lin.A1 + lin.A2 * lin.S;
        lin.M = lin.A_lu->solve(lin.B);
    }
    return lin;
}

// Solves G(x, u) = 0 for u near the rest point by the chord iteration
// u <- u - A4^-1 G(x, u), started from the first-order asymptotic
// u0 + S (x - x0). Divergence is declared after three consecutive residual
// increases; success guarantees ||G(x, u)||_inf <= tol.
inline Vector implicit_u(const LinearizationData& lin, const Vector& x, double t = 0.0,
                         const ImplicitOptions& opts = {}) {
    if (!lin.a4_invertible)
        throw PreconditionError("implicit_u: constraint Jacobian A4 is singular");
    const DAEProblem& p = lin.problem;
    if (static_cast<int>(x.size()) != p.n) throw DimensionError("implicit_u: x has wrong length");
    const Vector dx = vsub(x, p.x0);
    const double dist = norm2(dx);
    if (dist > opts.trust_radius)
        throw PreconditionError("implicit_u: ||x - x0|| = " + std::to_string(dist) +
                                " outside trust radius " + std::to_string(opts.trust_radius));

    Vector u = vadd(p.u0, lin.S * dx);
    Vector g = p.eval_G(x, u, t);
    double res = norm_inf(g);
    double prev = res;
    int rising = 0;
    for (int it = 0; it <= opts.max_iter; ++it) {
        if (res <= opts.tol) return u;
        if (!std::isfinite(res))
            throw DivergenceError("implicit_u: residual became non-finite");
        const Vector step = lin.A4_lu->solve(g);
        for (int i = 0; i < p.m; ++i) u[i] -= step[i];
        g = p.eval_G(x, u, t);
        res = norm_inf(g);
        if (res > prev) {
            if (++rising >= 3)
                throw DivergenceError("implicit_u: residual increased 3 consecutive iterations "
                                      "(non-contraction at ||x - x0|| = " +
                                      std::to_string(dist) + ")");
        } else {
            rising = 0;
        }
        prev = res;
    }
    throw NonConvergenceError("implicit_u: tolerance not met", res, opts.max_iter);
}

// First-order recovery u ~ u0 - A4^-1 A3 (x - x0); cheap but only accurate
// to o(||x - x0||).
inline Vector recover_u_first_order(const LinearizationData& lin, const Vector& x) {
    if (!lin.a4_invertible)
        throw PreconditionError("recover_u_first_order: A4 is singular");
    return vadd(lin.problem.u0, lin.S * vsub(x, lin.problem.x0));
}

// Right-hand side of the reduced equation: A^-1 F(x, u(x), t), with the
// non-autonomous perturbation terms included when the problem carries them.
inline Vector reduced_field(const LinearizationData& lin, const Vector& x, double t = 0.0,
                            const ImplicitOptions& opts = {}) {
    const DAEProblem& p = lin.problem;
    const Vector u = implicit_u(lin, x, t, opts);
    Vector f = p.eval_F(x, u, t);
    if (p.has_perturbations()) {
        const Vector dx = vsub(x, p.x0);
        const Vector du = vsub(u, p.u0);
        if (!p.A1_tilde.empty()) f = vadd(f, p.eval_A1_tilde(t) * dx);
        if (!p.A2_tilde.empty()) f = vadd(f, p.eval_A2_tilde(t) * du);
    }
    return lin.A_lu->solve(f);
}

// Autonomous nonlinear remainder of the reduced field:
// L(x) = F(x, u(x)) - (A1 - A2 A4^-1 A3)(x - x0), so that
// A dx/dt = B (x - x0) + L(x). Vanishes to first order at the rest point.
inline Vector remainder_L(const LinearizationData& lin, const Vector& x,
                          const ImplicitOptions& opts = {}) {
    const DAEProblem& p = lin.problem;
    const Vector u = implicit_u(lin, x, 0.0, opts);
    const Vector f = p.eval_F(x, u, 0.0);
    return vsub(f, lin.B * vsub(x, p.x0));
}

} // namespace daestab
