#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "daestab/matrix.hpp"

namespace daestab {

// Terminal classification of a trajectory.
struct Outcome {
    enum class Kind { Stabilized, BlowUp, MaxTimeReached };
    Kind kind = Kind::MaxTimeReached;
    double t_settle = 0.0;                      // Stabilized
    double t_star_low = 0.0, t_star_high = 0.0; // BlowUp: bracket around t*
    std::string note;

    std::string tag() const {
        switch (kind) {
        case Kind::Stabilized: return "stabilized";
        case Kind::BlowUp: return "blow-up";
        case Kind::MaxTimeReached: return "max-time";
        }
        return "?";
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> x_values;
    std::vector<Vector> u_values; // may be empty when recovery is disabled
    Outcome outcome;
    double error_estimate = 0.0; // sum of accepted local error estimates
    std::vector<std::string> notes;
};

struct IntegrateOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    int output_points = 400;   // uniform grid over [0, T]; steps land on it
    long max_steps = 2000000;

    double settle_tol = 1e-6;  // ||x - x0|| that counts as settled
    double settle_dwell = 1.0; // time the settled state must persist
    bool early_stop_on_settle = true;

    double blow_threshold = 1e8;
    double blow_bracket_tol = 1e-2; // maximum reported bracket width

    bool recover_u = true;          // fill u_values at output times
    double trust_radius_factor = 4.0; // implicit-u trust = factor * 1e3 * blow threshold

    int threads = 0; // 0 = hardware concurrency (used by sweep-style drivers)
};

// Streaming outcome classifier. Feed accepted states in time order together
// with the field value there; it tracks the settle dwell window and the
// blow-up indicators (norm threshold + superlinear growth of ||f||/||x||).
class OutcomeClassifier {
public:
    OutcomeClassifier(Vector x_rest, const IntegrateOptions& opts)
        : rest_(std::move(x_rest)), opts_(opts), threshold_(opts.blow_threshold) {}

    enum class Action { Continue, Stop };

    Action feed(double t, const Vector& x, const Vector& f) {
        const double dist = norm2(vsub(x, rest_));
        const double xnorm = norm_inf(x);
        const double rate = norm2(f) / std::max(norm2(x), 1e-30);

        // settle dwell window
        if (dist <= opts_.settle_tol) {
            if (!in_window_) {
                in_window_ = true;
                window_start_ = t;
            }
            if (opts_.early_stop_on_settle && t - window_start_ >= opts_.settle_dwell) {
                outcome_.kind = Outcome::Kind::Stabilized;
                outcome_.t_settle = window_start_;
                done_ = true;
                return Action::Stop;
            }
        } else {
            in_window_ = false;
        }

        // reference growth rate while the norm is still moderate
        if (xnorm < opts_.blow_threshold * 1e-3)
            rate_ref_ = std::max(rate, 1e-30);

        if (xnorm >= threshold_) {
            const bool superlinear = rate >= 10.0 * rate_ref_;
            const double pad = bracket_pad(t, x, f);
            if (superlinear && 2.0 * pad <= opts_.blow_bracket_tol) {
                set_blowup(t, pad, "");
                return Action::Stop;
            }
            if (superlinear) {
                threshold_ *= 10.0; // push closer to tighten the bracket
                return Action::Continue;
            }
            if (xnorm >= 1e3 * opts_.blow_threshold) {
                outcome_.kind = Outcome::Kind::MaxTimeReached;
                outcome_.note = "norm escaped without superlinear growth";
                done_ = true;
                return Action::Stop;
            }
        }
        return Action::Continue;
    }

    // The integrator calls this when steps collapse: super-quadratic
    // blow-ups (x ~ (t*-t)^(-1/2) and faster) stall the stepper before the
    // norm can reach the full threshold, because the remaining time falls
    // below the floating-point spacing of t. Step collapse plus superlinear
    // growth is the blow-up signature then; a relaxed norm floor guards
    // against misreading ordinary stiffness.
    bool collapse_indicates_blowup(const Vector& x, const Vector& f) const {
        const double rate = norm2(f) / std::max(norm2(x), 1e-30);
        return norm_inf(x) >= 1e-4 * opts_.blow_threshold && rate >= 10.0 * rate_ref_;
    }

    Outcome force_blowup(double t, const Vector& x, const Vector& f, const std::string& note) {
        set_blowup(t, bracket_pad(t, x, f), note);
        return outcome_;
    }

    // Call when integration ends without the classifier having stopped it;
    // a dwell window still open at the end counts if it is long enough.
    Outcome finish(double t_end) {
        if (done_) return outcome_;
        if (in_window_ && t_end - window_start_ >= opts_.settle_dwell) {
            outcome_.kind = Outcome::Kind::Stabilized;
            outcome_.t_settle = window_start_;
        } else {
            outcome_.kind = Outcome::Kind::MaxTimeReached;
        }
        done_ = true;
        return outcome_;
    }

    bool done() const noexcept { return done_; }
    const Outcome& outcome() const noexcept { return outcome_; }

private:
    // Half-width of the reported bracket: the remaining-time estimate
    // ||x||/||f|| (times a safety factor for super-quadratic profiles) plus
    // an absolute pad covering the numerical uncertainty of t* itself.
    static double bracket_pad(double t, const Vector& x, const Vector& f) {
        const double remaining = norm2(x) / std::max(norm2(f), 1e-300);
        return std::max(1e-5 * std::max(1.0, std::abs(t)), 10.0 * remaining);
    }

    void set_blowup(double t, double pad, const std::string& note) {
        outcome_.kind = Outcome::Kind::BlowUp;
        outcome_.t_star_low = std::max(0.0, t - pad);
        outcome_.t_star_high = t + pad;
        outcome_.note = note;
        done_ = true;
    }

    Vector rest_;
    IntegrateOptions opts_;
    double threshold_;
    bool in_window_ = false;
    double window_start_ = 0.0;
    double rate_ref_ = 1e-30;
    bool done_ = false;
    Outcome outcome_;
};

namespace detail {

// Dormand-Prince 5(4) embedded pair, FSAL. Steps are capped so that every
// requested output time is hit exactly; no interpolation error enters the
// stored samples. Stage evaluations that throw or return non-finite values
// reject the step and retry with a smaller one.
template <typename RHS>
Trajectory dopri5(RHS&& rhs, const Vector& x_init, double t_end, const Vector& x_rest,
                  const IntegrateOptions& opts) {
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw PreconditionError("integration horizon must be positive and finite");
    if (!all_finite(x_init)) throw PreconditionError("initial state has non-finite entries");

    const int npts = std::max(2, opts.output_points);
    const double dt_out = t_end / (npts - 1);
    const std::size_t dim = x_init.size();

    Trajectory traj;
    OutcomeClassifier classifier(x_rest, opts);

    Vector x = x_init;
    double t = 0.0;
    Vector k1 = rhs(t, x); // errors at the initial point propagate to the caller

    traj.times.push_back(0.0);
    traj.x_values.push_back(x);
    bool stopped = classifier.feed(0.0, x, k1) == OutcomeClassifier::Action::Stop;

    int next_out = 1;
    double h = std::min(dt_out, 0.01 * norm2(x) / std::max(norm2(k1), 1e-3));
    if (!(h > 0.0) || !std::isfinite(h)) h = dt_out;

    long steps = 0;
    std::string last_stage_error;

    Vector k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), x5(dim), tmp(dim);

    while (!stopped && t < t_end * (1.0 - 1e-14)) {
        const double t_next = std::min(t_end, next_out * dt_out);
        h = std::min(h, t_next - t);
        if (++steps > opts.max_steps)
            throw NumericError("integration exceeded the step budget", steps);
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            if (classifier.collapse_indicates_blowup(x, k1)) {
                traj.outcome = classifier.force_blowup(
                    t, x, k1, "step collapse with superlinear norm growth");
                if (traj.times.back() != t) {
                    traj.times.push_back(t);
                    traj.x_values.push_back(x);
                }
                return traj;
            }
            if (!last_stage_error.empty())
                throw Error("constraint-loss", "right-hand side unusable at t = " +
                                                   std::to_string(t) + ": " + last_stage_error);
            throw NumericError("step-size underflow without superlinear norm growth at t = " +
                               std::to_string(t));
        }

        double err = 0.0;
        bool stage_failed = false;
        try {
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * a21 * k1[i];
            k2 = rhs(t + c2 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
            k3 = rhs(t + c3 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            k4 = rhs(t + c4 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            k5 = rhs(t + c5 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = x[i] +
                         h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            k6 = rhs(t + h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                x5[i] = x[i] +
                        h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            k7 = rhs(t + h, x5);
            double sumsq = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                       e6 * k6[i] + e7 * k7[i]);
                const double sc =
                    opts.atol + opts.rtol * std::max(std::abs(x[i]), std::abs(x5[i]));
                sumsq += (ei / sc) * (ei / sc);
            }
            err = std::sqrt(sumsq / static_cast<double>(dim));
            if (!std::isfinite(err) || !all_finite(x5)) stage_failed = true;
        } catch (const Error& e) {
            stage_failed = true;
            last_stage_error = e.what();
        }

        if (stage_failed) {
            h *= 0.3;
            continue;
        }

        if (err <= 1.0) {
            // accept
            last_stage_error.clear();
            double local = 0.0;
            for (std::size_t i = 0; i < dim; ++i)
                local = std::max(local,
                                 std::abs(h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                               e5 * k5[i] + e6 * k6[i] + e7 * k7[i])));
            traj.error_estimate += local;

            double t_new = t + h;
            if (std::abs(t_new - t_next) < 1e-12 * std::max(1.0, t_next)) t_new = t_next;
            x.swap(x5);
            k1.swap(k7);
            t = t_new;

            if (t == t_next) {
                traj.times.push_back(t);
                traj.x_values.push_back(x);
                if (t_next < t_end) ++next_out;
            }
            if (classifier.feed(t, x, k1) == OutcomeClassifier::Action::Stop) {
                stopped = true;
                if (traj.times.back() != t) {
                    traj.times.push_back(t);
                    traj.x_values.push_back(x);
                }
            }
            const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
            h = std::min(h * fac, dt_out);
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
        }
    }

    traj.outcome = classifier.done() ? classifier.outcome() : classifier.finish(t);
    return traj;
}

} // namespace detail

} // namespace daestab
