#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "daestab/eigen.hpp"
#include "daestab/expm.hpp"
#include "daestab/parallel.hpp"
#include "daestab/reduction.hpp"
#include "daestab/rng.hpp"

namespace daestab {

struct SpectralTest {
    bool stable = false;
    double abscissa = 0.0; // max Re(lambda) over the spectrum
};

// Constants of the decay bound ||exp(Mt)|| <= C e^{-lt}.
struct DecayEstimate {
    double l = 0.0;
    double C = 1.0;
    double spectral_abscissa = 0.0;
    double margin = 0.0;
    std::string method = "expm-grid";
};

// Sampled Lipschitz modulus of the reduced-field remainder L on nested balls.
struct LipschitzProfile {
    struct Point {
        double r = 0.0;
        double q = 0.0;
        bool usable = true; // false when the implicit solve failed in this ball
        long samples = 0;
    };
    std::vector<Point> points; // radii ascending; q non-decreasing over usable points
    std::uint64_t seed = 0;
};

struct BasinEstimate {
    double r_star = 0.0;
    double q_star = 0.0;
    double delta_max = 0.0;
    bool stable = false;
    std::string note; // reason when r_star degenerates to 0
};

inline SpectralTest spectral_test(const Matrix& m) {
    SpectralTest st;
    st.abscissa = eigenvalues(m).spectral_abscissa();
    st.stable = st.abscissa < 0.0;
    return st;
}

// l takes (1 - margin) of the spectral gap; C is the sampled maximum of
// ||exp(Mt)|| e^{lt} over a log-spaced grid on [0, 50/l], rounded up 5%.
// Grid sampling handles defective M, where eigenvalues alone say nothing
// about the transient overshoot.
inline DecayEstimate estimate_decay(const Matrix& m, double margin = 0.1) {
    if (!(margin > 0.0 && margin < 1.0))
        throw PreconditionError("estimate_decay: margin must lie in (0,1)");
    const SpectralTest st = spectral_test(m);
    if (!st.stable)
        throw PreconditionError("estimate_decay: spectrum is not stable (abscissa " +
                                std::to_string(st.abscissa) + ")");
    DecayEstimate d;
    d.spectral_abscissa = st.abscissa;
    d.margin = margin;
    d.l = -(1.0 - margin) * st.abscissa;

    const double t_max = 50.0 / d.l;
    const int points = 200;
    double c_raw = 1.0; // t = 0 gives ||I|| = 1
    for (int k = 0; k < points; ++k) {
        // log spacing over six decades up to t_max
        const double t = t_max * std::pow(10.0, -6.0 * (1.0 - (k + 1.0) / points));
        const double v = operator_norm(matrix_exponential(m, t)) * std::exp(d.l * t);
        c_raw = std::max(c_raw, v);
    }
    d.C = std::max(1.0, 1.05 * c_raw);
    return d;
}

// q(r) = sup ||L(x1)-L(x2)|| / ||x1-x2|| over sampled pairs in the ball of
// radius r, monotonized by running maxima. Sampling is counter-based: the
// estimate is deterministic for a seed, independent of thread schedule, and
// enlarging `samples` only extends each stream (so q can only grow).
inline LipschitzProfile estimate_q(const LinearizationData& lin, const std::vector<double>& radii,
                                   long samples = 2000, std::uint64_t seed = 20250811,
                                   int threads = 0) {
    if (!lin.a4_invertible)
        throw PreconditionError("estimate_q: constraint Jacobian A4 is singular");
    if (radii.empty()) throw PreconditionError("estimate_q: empty radius grid");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (radii[i] <= radii[i - 1])
            throw PreconditionError("estimate_q: radii must be strictly increasing");

    LipschitzProfile profile;
    profile.seed = seed;
    profile.points.resize(radii.size());
    const int n = lin.problem.n;

    detail::parallel_for(static_cast<int>(radii.size()), threads, [&](int k) {
        LipschitzProfile::Point& pt = profile.points[k];
        pt.r = radii[k];
        ImplicitOptions io;
        io.trust_radius = radii[k] * (1.0 + 1e-9);
        double q = 0.0;
        try {
            for (long i = 0; i < samples; ++i) {
                const Vector d1 = CounterRng::ball(seed, 2 * k, i, n, radii[k]);
                const Vector d2 = CounterRng::ball(seed, 2 * k + 1, i, n, radii[k]);
                const double sep = norm2(vsub(d1, d2));
                if (sep < 1e-14 * radii[k]) continue;
                const Vector l1 = remainder_L(lin, vadd(lin.problem.x0, d1), io);
                const Vector l2 = remainder_L(lin, vadd(lin.problem.x0, d2), io);
                q = std::max(q, norm2(vsub(l1, l2)) / sep);
                ++pt.samples;
            }
            pt.q = q;
        } catch (const Error&) {
            pt.usable = false; // the ball reaches outside the contraction region
            pt.q = 0.0;
        }
    });

    // a Lipschitz modulus is non-decreasing; enforce it across usable points
    double running = 0.0;
    for (auto& pt : profile.points) {
        if (!pt.usable) continue;
        running = std::max(running, pt.q);
        pt.q = running;
    }
    return profile;
}

inline std::vector<double> default_radii(double r_max = 1.0, int count = 24) {
    std::vector<double> radii(count);
    for (int k = 0; k < count; ++k) radii[k] = r_max * (k + 1.0) / count;
    return radii;
}

// Largest sampled radius with (C/l) ||A^-1|| q(r) <= q* < 1; the admissible
// initial deviation is ||Delta|| <= (1 - q*) r* / C. A degenerate result
// (r* = 0) is returned, not thrown: stability alone does not certify a ball.
inline BasinEstimate basin_radius(const DecayEstimate& decay, const LipschitzProfile& profile,
                                  double norm_A_inv, double q_star = 0.5) {
    if (!(q_star > 0.0 && q_star < 1.0))
        throw PreconditionError("basin_radius: q_star must lie in (0,1)");
    BasinEstimate b;
    b.q_star = q_star;
    b.stable = true;
    const double gain = decay.C / decay.l * norm_A_inv;
    for (const auto& pt : profile.points) {
        if (!pt.usable) continue;
        if (gain * pt.q <= q_star) b.r_star = std::max(b.r_star, pt.r);
    }
    if (b.r_star > 0.0) {
        b.delta_max = (1.0 - q_star) * b.r_star / decay.C;
    } else {
        b.note = "no sampled radius satisfies (C/l)||A^-1|| q(r) <= q*";
    }
    return b;
}

// ---- pipeline ----------------------------------------------------------------

struct AnalyzeOptions {
    double margin = 0.1;
    double q_star = 0.5;
    double radii_max = 1.0;
    int radii_count = 24;
    long samples = 2000;
    std::uint64_t seed = 20250811;
    int threads = 0;
};

struct StabilityAnalysis {
    LinearizationData lin;
    SpectralTest spectral;
    std::optional<DecayEstimate> decay;
    std::optional<LipschitzProfile> profile;
    std::optional<BasinEstimate> basin;
    double epsilon_report = 0.0; // epsilon = l/2 used in trajectory envelopes
};

// linearize -> spectral test -> decay constants -> q profile -> basin radius.
inline StabilityAnalysis run_stability_analysis(const DAEProblem& p,
                                                const AnalyzeOptions& opts = {}) {
    StabilityAnalysis a;
    a.lin = linearize(p);
    if (!a.lin.a4_invertible)
        throw PreconditionError("analysis requires an invertible constraint Jacobian A4; "
                                "this problem is in the degenerate (branching) case");
    a.spectral = spectral_test(a.lin.M);
    if (!a.spectral.stable) return a; // nothing to certify
    a.decay = estimate_decay(a.lin.M, opts.margin);
    a.epsilon_report = a.decay->l / 2.0;
    a.profile = estimate_q(a.lin, default_radii(opts.radii_max, opts.radii_count), opts.samples,
                           opts.seed, opts.threads);
    a.basin = basin_radius(*a.decay, *a.profile, a.lin.norm_A_inv, opts.q_star);
    return a;
}

} // namespace daestab
