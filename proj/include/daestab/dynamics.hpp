#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "daestab/expm.hpp"
#include "daestab/integrate.hpp"
#include "daestab/parallel.hpp"
#include "daestab/reduction.hpp"

namespace daestab {

namespace detail {

inline ImplicitOptions trajectory_implicit_opts(const IntegrateOptions& opts) {
    ImplicitOptions io;
    // trajectories legitimately leave the analysis neighborhood: the
    // classifier accepts states up to 1000x the blow threshold (its escape
    // cap), and trial stages probe somewhat beyond the accepted states
    io.trust_radius = opts.trust_radius_factor * 1e3 * std::max(opts.blow_threshold, 1.0);
    return io;
}

// u at the stored output times, full implicit solve with the first-order
// asymptotic as a flagged fallback.
inline void recover_u_along(Trajectory& traj, const LinearizationData& lin,
                            const IntegrateOptions& opts) {
    if (!opts.recover_u) return;
    const ImplicitOptions io = trajectory_implicit_opts(opts);
    bool fallback_noted = false;
    traj.u_values.clear();
    traj.u_values.reserve(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        try {
            traj.u_values.push_back(implicit_u(lin, traj.x_values[i], traj.times[i], io));
        } catch (const Error&) {
            traj.u_values.push_back(recover_u_first_order(lin, traj.x_values[i]));
            if (!fallback_noted) {
                traj.notes.push_back("u recovered to first order from t = " +
                                     std::to_string(traj.times[i]) +
                                     " (implicit solve failed)");
                fallback_noted = true;
            }
        }
    }
}

} // namespace detail

// Integrates dx/dt = A^-1 F(x, u(x), t) from the absolute initial state
// x_init over [0, T] and classifies the outcome. u is recovered at output
// times by the full implicit solve.
inline Trajectory integrate_reduced(const LinearizationData& lin, const Vector& x_init,
                                    double T, const IntegrateOptions& opts = {}) {
    if (!lin.a4_invertible)
        throw PreconditionError("integrate_reduced: constraint Jacobian A4 is singular");
    const ImplicitOptions io = detail::trajectory_implicit_opts(opts);
    auto rhs = [&](double t, const Vector& x) { return reduced_field(lin, x, t, io); };
    Trajectory traj = detail::dopri5(rhs, x_init, T, lin.problem.x0, opts);
    detail::recover_u_along(traj, lin, opts);
    return traj;
}

// ---- successive approximations (coupled scheme) ------------------------------

struct SuccessiveResult {
    std::vector<Trajectory> iterates; // x_n, u_n on the shared grid
    std::vector<double> x_sup_gaps;   // sup_t ||x_n - x_(n-1)||_inf, n >= 2
    std::vector<std::string> notes;
};

struct SuccessiveOptions {
    int grid_points = 2048; // shared output grid for all iterates
    IntegrateOptions integrate;
    // when the caller knows the certified bound it can ask for a warning
    std::optional<double> delta_max_hint;
};

namespace detail {

// cubic Hermite interpolation with centered finite-difference slopes
class GridInterpolant {
public:
    GridInterpolant(const std::vector<double>& times, const std::vector<Vector>& values)
        : times_(times), values_(values) {
        const std::size_t np = times.size();
        const std::size_t dim = np ? values[0].size() : 0;
        slopes_.assign(np, Vector(dim, 0.0));
        for (std::size_t j = 0; j < np; ++j) {
            const std::size_t lo = j == 0 ? 0 : j - 1;
            const std::size_t hi = j + 1 == np ? j : j + 1;
            const double dt = times[hi] - times[lo];
            if (dt <= 0.0) continue;
            for (std::size_t i = 0; i < dim; ++i)
                slopes_[j][i] = (values[hi][i] - values[lo][i]) / dt;
        }
    }

    Vector at(double t) const {
        const std::size_t np = times_.size();
        if (t <= times_.front()) return values_.front();
        if (t >= times_.back()) return values_.back();
        std::size_t j = static_cast<std::size_t>(
            std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
        j = std::min(std::max<std::size_t>(j, 1), np - 1) - 1;
        const double h = times_[j + 1] - times_[j];
        const double s = (t - times_[j]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        const std::size_t dim = values_[j].size();
        Vector out(dim);
        for (std::size_t i = 0; i < dim; ++i)
            out[i] = h00 * values_[j][i] + h10 * h * slopes_[j][i] + h01 * values_[j + 1][i] +
                     h11 * h * slopes_[j + 1][i];
        return out;
    }

private:
    std::vector<double> times_;
    std::vector<Vector> values_;
    std::vector<Vector> slopes_;
};

} // namespace detail

// The alternating scheme: solve A dx_n/dt = F(x_n, u_(n-1)(t), t) with the
// previous u frozen (cubic Hermite in t), then correct u through the
// linearized constraint A4 w_n = -G(x_n, u_(n-1)), u_n = u_(n-1) + w_n.
// All iterates live on one fixed grid so sup-norm gaps are well defined.
inline SuccessiveResult successive_approximations(const DAEProblem& p, const Vector& x_init,
                                                  int iterations, double T,
                                                  SuccessiveOptions opts = {}) {
    const LinearizationData lin = linearize(p);
    if (!lin.a4_invertible)
        throw PreconditionError("successive_approximations: constraint Jacobian A4 is singular");
    if (iterations < 1) throw PreconditionError("successive_approximations: iterations >= 1");

    SuccessiveResult result;
    const double delta_norm = norm2(vsub(x_init, p.x0));
    if (opts.delta_max_hint && delta_norm > *opts.delta_max_hint)
        result.notes.push_back("||x(0) - x0|| = " + std::to_string(delta_norm) +
                               " exceeds the certified bound " +
                               std::to_string(*opts.delta_max_hint) + "; proceeding anyway");

    IntegrateOptions iopts = opts.integrate;
    iopts.output_points = opts.grid_points;
    iopts.early_stop_on_settle = false; // iterates must cover the full grid
    iopts.recover_u = false;            // u comes from the correction step

    std::vector<double> grid(opts.grid_points);
    for (int j = 0; j < opts.grid_points; ++j)
        grid[j] = T * static_cast<double>(j) / (opts.grid_points - 1);

    // u_0 is the rest value
    std::vector<Vector> u_prev(grid.size(), p.u0);
    std::vector<Vector> x_prev;

    for (int n = 1; n <= iterations; ++n) {
        const detail::GridInterpolant u_interp(grid, u_prev);
        auto rhs = [&](double t, const Vector& x) {
            const Vector u = u_interp.at(t);
            Vector f = p.eval_F(x, u, t);
            if (p.has_perturbations()) {
                const Vector dx = vsub(x, p.x0);
                const Vector du = vsub(u, p.u0);
                if (!p.A1_tilde.empty()) f = vadd(f, p.eval_A1_tilde(t) * dx);
                if (!p.A2_tilde.empty()) f = vadd(f, p.eval_A2_tilde(t) * du);
            }
            return lin.A_lu->solve(f);
        };
        Trajectory traj = detail::dopri5(rhs, x_init, T, p.x0, iopts);

        const bool complete = traj.times.size() == grid.size();
        // constraint correction on the grid points the iterate reached
        std::vector<Vector> u_next;
        u_next.reserve(traj.times.size());
        traj.u_values.clear();
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            const Vector& up = u_prev[std::min(j, u_prev.size() - 1)];
            const Vector g = p.eval_G(traj.x_values[j], up, traj.times[j]);
            const Vector w = lin.A4_lu->solve(g);
            Vector un(p.m);
            for (int i = 0; i < p.m; ++i) un[i] = up[i] - w[i];
            u_next.push_back(un);
            traj.u_values.push_back(std::move(un));
        }

        if (n >= 2 && !x_prev.empty()) {
            double gap = 0.0;
            const std::size_t common = std::min(traj.x_values.size(), x_prev.size());
            for (std::size_t j = 0; j < common; ++j)
                gap = std::max(gap, norm_inf(vsub(traj.x_values[j], x_prev[j])));
            result.x_sup_gaps.push_back(gap);
        }
        x_prev = traj.x_values;
        const bool blew_up = traj.outcome.kind == Outcome::Kind::BlowUp;
        result.iterates.push_back(std::move(traj));
        if (blew_up) {
            result.notes.push_back("iterate " + std::to_string(n) +
                                   " blew up; returning partial sequence");
            break;
        }
        if (complete) u_prev = std::move(u_next);
    }
    return result;
}

// ---- Volterra-Picard oracle ---------------------------------------------------

struct VolterraOptions {
    int grid = 2000;
    int sweeps = 30;
    IntegrateOptions classify; // settle/blow parameters for the outcome tag
};

// Picard iteration on x(t) = exp(Mt) d + int_0^t exp(M(t-s)) A^-1 L(x(s)) ds
// over a uniform grid with trapezoid quadrature, in coordinates shifted to
// the rest point (delta is the initial deviation). Independent of the
// Runge-Kutta path, which is the point: the two must agree.
inline Trajectory volterra_picard(const LinearizationData& lin, const Vector& delta, double T,
                                  const VolterraOptions& opts = {}) {
    if (!lin.a4_invertible)
        throw PreconditionError("volterra_picard: constraint Jacobian A4 is singular");
    const int n = lin.problem.n;
    if (static_cast<int>(delta.size()) != n)
        throw DimensionError("volterra_picard: delta has wrong length");
    if (eigenvalues(lin.M).spectral_abscissa() >= 0.0)
        throw PreconditionError("volterra_picard: spectrum of M is not stable");
    const int npts = opts.grid + 1;
    const double dt = T / opts.grid;

    // table of exp(M j dt)
    std::vector<Matrix> e(npts);
    e[0] = Matrix::identity(n);
    const Matrix e1 = matrix_exponential(lin.M, dt);
    for (int j = 1; j < npts; ++j) e[j] = e[j - 1] * e1;

    const ImplicitOptions io = detail::trajectory_implicit_opts(opts.classify);

    std::vector<Vector> xi(npts);       // deviation from rest
    for (int j = 0; j < npts; ++j) xi[j] = e[j] * delta;

    std::vector<Vector> ainv_l(npts, Vector(n, 0.0));
    double prev_diff = std::numeric_limits<double>::infinity();
    int rising = 0;
    for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
        for (int s = 0; s < npts; ++s)
            ainv_l[s] = lin.A_lu->solve(remainder_L(lin, vadd(lin.problem.x0, xi[s]), io));
        double diff = 0.0;
        std::vector<Vector> next(npts);
        next[0] = delta;
        Vector acc(n);
        for (int j = 1; j < npts; ++j) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int s = 0; s <= j; ++s) {
                const Matrix& ejs = e[j - s];
                const Vector& v = ainv_l[s];
                const double w = (s == 0 || s == j) ? 0.5 : 1.0;
                for (int i = 0; i < n; ++i) {
                    double dot = 0.0;
                    for (int k = 0; k < n; ++k) dot += ejs(i, k) * v[k];
                    acc[i] += w * dot;
                }
            }
            next[j] = vaxpy(e[j] * delta, dt, acc);
            diff = std::max(diff, norm_inf(vsub(next[j], xi[j])));
        }
        xi = std::move(next);
        if (!std::isfinite(diff) || (diff > prev_diff && ++rising >= 3))
            throw DivergenceError("volterra_picard: sup-norm growth across sweeps");
        if (diff <= prev_diff) rising = 0;
        prev_diff = diff;
        if (diff < 1e-15) break;
    }

    Trajectory traj;
    OutcomeClassifier classifier(lin.problem.x0, opts.classify);
    traj.times.resize(npts);
    traj.x_values.resize(npts);
    bool done = false;
    for (int j = 0; j < npts; ++j) {
        traj.times[j] = j * dt;
        traj.x_values[j] = vadd(lin.problem.x0, xi[j]);
        if (!done) {
            const Vector f = vadd(lin.M * xi[j], ainv_l[j]);
            done = classifier.feed(traj.times[j], traj.x_values[j], f) ==
                   OutcomeClassifier::Action::Stop;
        }
    }
    traj.outcome = classifier.done() ? classifier.outcome() : classifier.finish(T);
    detail::recover_u_along(traj, lin, opts.classify);
    return traj;
}

// ---- initial-condition sweeps -------------------------------------------------

struct SweepEntry {
    Vector delta;              // deviation from the rest point
    std::optional<Outcome> outcome;
    std::string error;         // non-empty when this entry failed
};

struct SweepBoundary {
    double delta_low = 0.0, delta_high = 0.0;
    std::string kind_low, kind_high;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::vector<SweepBoundary> boundaries; // scalar problems only
};

// Integrates one trajectory per requested deviation (in parallel; entries
// are independent and results are keyed by index). For scalar problems the
// outcome transitions along the sorted deltas are reported as boundaries.
inline SweepResult delta_sweep(const DAEProblem& p, const std::vector<Vector>& deltas, double T,
                               const IntegrateOptions& opts = {}) {
    SweepResult result;
    result.entries.resize(deltas.size());
    if (deltas.empty()) return result;
    const LinearizationData lin = linearize(p);

    IntegrateOptions iopts = opts;
    iopts.recover_u = false; // outcomes only; trajectories are not kept

    detail::parallel_for(static_cast<int>(deltas.size()), opts.threads, [&](int i) {
        SweepEntry& entry = result.entries[i];
        entry.delta = deltas[i];
        try {
            const Trajectory traj = integrate_reduced(lin, vadd(p.x0, deltas[i]), T, iopts);
            entry.outcome = traj.outcome;
        } catch (const Error& e) {
            entry.error = std::string(e.code()) + ": " + e.what();
        }
    });

    if (p.n == 1) {
        std::vector<const SweepEntry*> ordered;
        for (const auto& e : result.entries)
            if (e.outcome) ordered.push_back(&e);
        std::sort(ordered.begin(), ordered.end(), [](const SweepEntry* a, const SweepEntry* b) {
            return a->delta[0] < b->delta[0];
        });
        for (std::size_t i = 1; i < ordered.size(); ++i) {
            if (ordered[i - 1]->outcome->kind != ordered[i]->outcome->kind) {
                result.boundaries.push_back({ordered[i - 1]->delta[0], ordered[i]->delta[0],
                                             ordered[i - 1]->outcome->tag(),
                                             ordered[i]->outcome->tag()});
            }
        }
    }
    return result;
}

} // namespace daestab
