#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "daestab/expr.hpp"
#include "daestab/matrix.hpp"
#include "daestab/quadrature.hpp"

namespace daestab {

// Leading polynomial form of one degenerate constraint: sum over s of
// coeffs[s] * x_k^(degree-s) * u_k^s, degree >= 2.
struct BranchConstraint {
    int degree = 0;
    std::vector<double> coeffs; // ascending in the u-power s, size degree+1
};

struct BranchingBlock {
    std::vector<BranchConstraint> constraints; // one per algebraic equation
};

// Semi-explicit system A dx/dt = F(x,u,t), 0 = G(x,u,t) with a validated
// rest point. Immutable after finalize(); shareable across threads.
struct DAEProblem {
    std::string name;
    int n = 0;
    int m = 0;
    Matrix A;
    std::vector<Expr> F; // n entries
    std::vector<Expr> G; // m entries
    Vector x0;
    Vector u0;

    // analytic Jacobians at the rest point; absent ones are finite-differenced
    std::optional<Matrix> A1, A2, A3, A4;

    // non-autonomous perturbation terms, row-major n*n and n*m expression
    // grids in t; decay as t -> infinity is asserted by the user, not checked
    std::vector<Expr> A1_tilde;
    std::vector<Expr> A2_tilde;
    bool perturbation_decay_asserted = false;

    std::optional<BranchingBlock> branching;

    Vector eval_F(const Vector& x, const Vector& u, double t = 0.0) const {
        Vector out(n);
        for (int i = 0; i < n; ++i) out[i] = Fc_[i].eval(x, u, t);
        return out;
    }

    Vector eval_G(const Vector& x, const Vector& u, double t = 0.0) const {
        Vector out(m);
        for (int i = 0; i < m; ++i) out[i] = Gc_[i].eval(x, u, t);
        return out;
    }

    bool has_perturbations() const noexcept { return !A1_tilde.empty() || !A2_tilde.empty(); }

    Matrix eval_A1_tilde(double t) const { return eval_grid(A1t_c_, n, n, t); }
    Matrix eval_A2_tilde(double t) const { return eval_grid(A2t_c_, n, m, t); }

    // Compiles expression tapes and checks every invariant the type carries:
    // shapes, invertible A, rest-point residuals, branching block consistency.
    void finalize(double rest_tol = 1e-8) {
        if (n < 1) throw ValidationError("n", "state dimension must be positive");
        if (m < 0) throw ValidationError("m", "algebraic dimension must be non-negative");
        if (A.rows() != n || A.cols() != n) throw ValidationError("A", "must be n x n");
        if (!A.all_finite()) throw ValidationError("A", "non-finite entries");
        if (static_cast<int>(F.size()) != n) throw ValidationError("F", "needs n expressions");
        if (static_cast<int>(G.size()) != m) throw ValidationError("G", "needs m expressions");
        if (static_cast<int>(x0.size()) != n) throw ValidationError("rest_point.x0", "length n");
        if (static_cast<int>(u0.size()) != m) throw ValidationError("rest_point.u0", "length m");
        check_jacobian_shape(A1, n, n, "jacobians.A1");
        check_jacobian_shape(A2, n, m, "jacobians.A2");
        check_jacobian_shape(A3, m, n, "jacobians.A3");
        check_jacobian_shape(A4, m, m, "jacobians.A4");
        if (!A1_tilde.empty() && static_cast<int>(A1_tilde.size()) != n * n)
            throw ValidationError("perturbations.A1_tilde", "needs n*n expressions");
        if (!A2_tilde.empty() && static_cast<int>(A2_tilde.size()) != n * m)
            throw ValidationError("perturbations.A2_tilde", "needs n*m expressions");

        // singular A has its own error; the pivot magnitude travels with it
        LuFactor probe(A);
        (void)probe;

        compile();

        const double fr = norm_inf(eval_F(x0, u0, 0.0));
        const double gr = m > 0 ? norm_inf(eval_G(x0, u0, 0.0)) : 0.0;
        if (fr > rest_tol || gr > rest_tol)
            throw ValidationError("rest_point", "residuals ||F|| = " + std::to_string(fr) +
                                                    ", ||G|| = " + std::to_string(gr) +
                                                    " exceed tolerance");

        if (branching) validate_branching();
    }

private:
    static void check_jacobian_shape(const std::optional<Matrix>& j, int r, int c,
                                     const std::string& field) {
        if (j && (j->rows() != r || j->cols() != c))
            throw ValidationError(field, "wrong shape");
    }

    Matrix eval_grid(const std::vector<CompiledExpr>& grid, int r, int c, double t) const {
        Matrix out(r, c);
        if (grid.empty()) return out;
        static const Vector empty;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) out(i, j) = grid[i * c + j].eval(empty, empty, t);
        return out;
    }

    void compile() {
        Fc_.clear();
        Gc_.clear();
        A1t_c_.clear();
        A2t_c_.clear();
        for (const Expr& e : F) Fc_.emplace_back(e);
        for (const Expr& e : G) Gc_.emplace_back(e);
        for (const Expr& e : A1_tilde) A1t_c_.emplace_back(e);
        for (const Expr& e : A2_tilde) A2t_c_.emplace_back(e);
    }

    // Sampled consistency between the declared leading coefficients and G:
    // along rays (x_k, u_k) = eps*(xi, eta) the constraint must reproduce
    // sum_s m_ks (eps xi)^(N-s) (eps eta)^s up to higher-order remainder.
    void validate_branching() const {
        const auto& blk = *branching;
        if (static_cast<int>(blk.constraints.size()) != m)
            throw ValidationError("branching.constraints", "needs one entry per constraint");
        if (m > n) throw ValidationError("branching", "requires m <= n");
        for (int k = 0; k < m; ++k) {
            const BranchConstraint& bc = blk.constraints[k];
            const int deg = bc.degree;
            if (deg < 2) throw ValidationError("branching.degree", "requires N_k >= 2");
            if (static_cast<int>(bc.coeffs.size()) != deg + 1)
                throw ValidationError("branching.coeffs", "needs degree+1 coefficients");
            const double eps = 1e-3;
            const double dirs[][2] = {{1, 1}, {1, -1}, {2, 1}, {1, 2}, {1, 0}, {0, 1}};
            for (const auto& d : dirs) {
                Vector x = x0, u = u0;
                x[k] += eps * d[0];
                u[k] += eps * d[1];
                double expected = 0.0, scale = 0.0;
                for (int s = 0; s <= deg; ++s) {
                    expected += bc.coeffs[s] * std::pow(eps * d[0], deg - s) *
                                std::pow(eps * d[1], s);
                    scale += std::abs(bc.coeffs[s]) *
                             std::pow(eps * std::max(std::abs(d[0]), std::abs(d[1])), deg);
                }
                const double actual = Gc_[k].eval(x, u, 0.0);
                if (std::abs(actual - expected) > 0.05 * scale + 1e-12)
                    throw ValidationError(
                        "branching.coeffs",
                        "constraint " + std::to_string(k + 1) +
                            " disagrees with G by " + std::to_string(actual - expected));
            }
        }
    }

    std::vector<CompiledExpr> Fc_, Gc_, A1t_c_, A2t_c_;
};

// K_ij = kernel(z_i, s_j) * w_j; the caller forms I + K for operators of
// the form identity-plus-integral.
inline Matrix discretize_integro(const Expr& kernel, const QuadratureScheme& scheme) {
    scheme.validate();
    const int n = scheme.size();
    Matrix k(n, n);
    Vector zs(2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            zs[0] = scheme.nodes[i];
            zs[1] = scheme.nodes[j];
            k(i, j) = kernel.evaluate(EvalContext{zs, {}, 0.0}) * scheme.weights[j];
        }
    }
    return k;
}

namespace detail {

inline std::string num_literal(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "(%.17g)", v);
    return buf;
}

inline double require_param(const std::map<std::string, double>& params, const std::string& key,
                            const std::string& which) {
    auto it = params.find(key);
    if (it == params.end())
        throw ValidationError("params." + key, "missing parameter for builtin " + which);
    return it->second;
}

} // namespace detail

// ---- builtin problems -------------------------------------------------------

// dx/dt = -x/2 - u + x^2,  0 = 2u - x + 2u sin(u) - x sin(u); rest (0,0).
// The constraint factors as (2u - x)(1 + sin u), so u = x/2 and the reduced
// dynamics are dx/dt = -x + x^2 with the closed-form solution used in tests.
inline DAEProblem builtin_example2() {
    DAEProblem p;
    p.name = "example2";
    p.n = 1;
    p.m = 1;
    p.A = Matrix::identity(1);
    p.F = {parse("-x1/2 - u1 + x1^2", 1, 1)};
    p.G = {parse("2*u1 - x1 + 2*u1*sin(u1) - x1*sin(u1)", 1, 1)};
    p.x0 = {0.0};
    p.u0 = {0.0};
    p.finalize(1e-12);
    return p;
}

// dx/dt = alpha x + beta u + u^2 + x^3,  0 = a x^2 + 2b x u + u^2; rest (0,0).
// The constraint Jacobian in u vanishes at the origin, so this is the
// degenerate-constraint (branching) example.
inline DAEProblem builtin_example3(double alpha, double beta, double a, double b) {
    DAEProblem p;
    p.name = "example3";
    p.n = 1;
    p.m = 1;
    p.A = Matrix::identity(1);
    using detail::num_literal;
    p.F = {parse(num_literal(alpha) + "*x1 + " + num_literal(beta) + "*u1 + u1^2 + x1^3", 1, 1)};
    p.G = {parse(num_literal(a) + "*x1^2 + 2*" + num_literal(b) + "*x1*u1 + u1^2", 1, 1)};
    p.x0 = {0.0};
    p.u0 = {0.0};
    BranchingBlock blk;
    blk.constraints.push_back({2, {a, 2.0 * b, 1.0}});
    p.branching = blk;
    p.finalize(1e-12);
    return p;
}

// Quadrature discretization (Gauss-Legendre, N nodes on [0,1]) of
//   dx/dt(z) = -x(z) + x(z)^3 + u(z)^2
//   0 = u(z) + int_0^1 z s u(s) ds + x(z)^2 + u(z)^2.
// State and constraint live on the nodes; the integral becomes the rank-one
// matrix K with K_ij = z_i s_j w_j, so the constraint Jacobian is I + K.
inline DAEProblem builtin_example1(int nodes) {
    if (nodes < 2) throw ValidationError("params.N", "needs at least 2 quadrature nodes");
    DAEProblem p;
    p.name = "example1";
    p.n = nodes;
    p.m = nodes;
    p.A = Matrix::identity(nodes);
    const QuadratureScheme scheme = QuadratureScheme::gauss_legendre(nodes);
    const Matrix k = discretize_integro(parse_with_symbols("z*s", SymbolTable::kernel_vars()),
                                        scheme);
    auto square = [](Expr e) { return Expr::binary(Expr::Kind::Pow, std::move(e), Expr::literal(2.0)); };
    auto cube = [](Expr e) { return Expr::binary(Expr::Kind::Pow, std::move(e), Expr::literal(3.0)); };
    for (int i = 0; i < nodes; ++i) {
        p.F.push_back(Expr::add(Expr::sub(cube(Expr::var_x(i)), Expr::var_x(i)),
                                square(Expr::var_u(i))));
        Expr g = Expr::var_u(i);
        for (int j = 0; j < nodes; ++j) {
            if (k(i, j) == 0.0) continue;
            g = Expr::add(std::move(g), Expr::mul(Expr::literal(k(i, j)), Expr::var_u(j)));
        }
        g = Expr::add(std::move(g), Expr::add(square(Expr::var_x(i)), square(Expr::var_u(i))));
        p.G.push_back(std::move(g));
    }
    p.x0.assign(nodes, 0.0);
    p.u0.assign(nodes, 0.0);
    p.finalize(1e-12);
    return p;
}

// Dispatch by name; params supply N (example1) and alpha, beta, a, b
// (example3). Unknown names and missing parameters are validation errors.
inline DAEProblem builtin(const std::string& name,
                          const std::map<std::string, double>& params = {}) {
    using detail::require_param;
    if (name == "example1")
        return builtin_example1(static_cast<int>(require_param(params, "N", name)));
    if (name == "example2") return builtin_example2();
    if (name == "example3")
        return builtin_example3(require_param(params, "alpha", name),
                                require_param(params, "beta", name),
                                require_param(params, "a", name),
                                require_param(params, "b", name));
    throw ValidationError("builtin", "unknown builtin problem '" + name + "'");
}

// ---- problem files ----------------------------------------------------------

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, int rows, int cols,
                               const std::string& field) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows * cols)
        throw ValidationError(field, "expected a flat row-major array of " +
                                         std::to_string(rows * cols) + " numbers");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c) {
            const auto& v = j[i * cols + c];
            if (!v.is_number()) throw ValidationError(field, "non-numeric entry");
            m(i, c) = v.get<double>();
        }
    return m;
}

inline Vector vector_from_json(const nlohmann::json& j, int len, const std::string& field) {
    if (!j.is_array() || static_cast<int>(j.size()) != len)
        throw ValidationError(field, "expected an array of " + std::to_string(len) + " numbers");
    Vector v(len);
    for (int i = 0; i < len; ++i) {
        if (!j[i].is_number()) throw ValidationError(field, "non-numeric entry");
        v[i] = j[i].get<double>();
    }
    return v;
}

inline std::vector<Expr> exprs_from_json(const nlohmann::json& j, int count, int n, int m,
                                         const std::string& field) {
    if (!j.is_array() || static_cast<int>(j.size()) != count)
        throw ValidationError(field,
                              "expected an array of " + std::to_string(count) + " expressions");
    std::vector<Expr> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        if (!j[i].is_string()) throw ValidationError(field, "entry " + std::to_string(i) + " is not a string");
        try {
            out.push_back(parse(j[i].get<std::string>(), n, m));
        } catch (const ParseError& e) {
            throw ValidationError(field + "[" + std::to_string(i) + "]",
                                  std::string(e.what()) + " at offset " +
                                      std::to_string(e.offset()));
        }
    }
    return out;
}

} // namespace detail

// Loads and fully validates a problem file (JSON; schema documented in the
// README). Rest-point residuals are checked to rest_tol.
inline DAEProblem load_problem(const std::string& path, double rest_tol = 1e-8) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open problem file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("json", e.what());
    }
    if (!j.is_object()) throw ValidationError("json", "top level must be an object");
    for (const char* req : {"n", "m", "A", "F", "G", "rest_point"})
        if (!j.contains(req)) throw ValidationError(req, "missing required field");

    DAEProblem p;
    p.name = j.value("name", std::string("problem"));
    if (!j["n"].is_number_integer() || !j["m"].is_number_integer())
        throw ValidationError("n/m", "dimensions must be integers");
    p.n = j["n"].get<int>();
    p.m = j["m"].get<int>();
    if (p.n < 1) throw ValidationError("n", "must be positive");
    if (p.m < 0) throw ValidationError("m", "must be non-negative");

    using namespace detail;
    p.A = matrix_from_json(j["A"], p.n, p.n, "A");
    p.F = exprs_from_json(j["F"], p.n, p.n, p.m, "F");
    p.G = exprs_from_json(j["G"], p.m, p.n, p.m, "G");
    if (!j["rest_point"].is_object() || !j["rest_point"].contains("x0") ||
        !j["rest_point"].contains("u0"))
        throw ValidationError("rest_point", "needs x0 and u0 arrays");
    p.x0 = vector_from_json(j["rest_point"]["x0"], p.n, "rest_point.x0");
    p.u0 = vector_from_json(j["rest_point"]["u0"], p.m, "rest_point.u0");

    if (j.contains("jacobians")) {
        const auto& jac = j["jacobians"];
        if (!jac.is_object()) throw ValidationError("jacobians", "must be an object");
        if (jac.contains("A1")) p.A1 = matrix_from_json(jac["A1"], p.n, p.n, "jacobians.A1");
        if (jac.contains("A2")) p.A2 = matrix_from_json(jac["A2"], p.n, p.m, "jacobians.A2");
        if (jac.contains("A3")) p.A3 = matrix_from_json(jac["A3"], p.m, p.n, "jacobians.A3");
        if (jac.contains("A4")) p.A4 = matrix_from_json(jac["A4"], p.m, p.m, "jacobians.A4");
    }

    if (j.contains("perturbations")) {
        const auto& pert = j["perturbations"];
        if (!pert.is_object()) throw ValidationError("perturbations", "must be an object");
        if (pert.contains("A1_tilde"))
            p.A1_tilde = exprs_from_json(pert["A1_tilde"], p.n * p.n, 0, 0, "perturbations.A1_tilde");
        if (pert.contains("A2_tilde"))
            p.A2_tilde = exprs_from_json(pert["A2_tilde"], p.n * p.m, 0, 0, "perturbations.A2_tilde");
        p.perturbation_decay_asserted = pert.value("decay_asserted", false);
    }

    if (j.contains("branching")) {
        const auto& br = j["branching"];
        if (!br.is_object() || !br.contains("constraints") || !br["constraints"].is_array())
            throw ValidationError("branching", "needs a constraints array");
        BranchingBlock blk;
        for (const auto& c : br["constraints"]) {
            if (!c.is_object() || !c.contains("degree") || !c.contains("coeffs"))
                throw ValidationError("branching.constraints", "each entry needs degree and coeffs");
            BranchConstraint bc;
            bc.degree = c["degree"].get<int>();
            bc.coeffs = vector_from_json(c["coeffs"], bc.degree + 1, "branching.coeffs");
            blk.constraints.push_back(std::move(bc));
        }
        p.branching = std::move(blk);
    }

    p.finalize(rest_tol);
    return p;
}

} // namespace daestab
