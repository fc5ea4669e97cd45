#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "daestab/branching.hpp"
#include "daestab/dynamics.hpp"
#include "daestab/stability.hpp"

namespace daestab {

// CSV numbers carry full double precision so runs are reproducible byte for
// byte under a fixed seed.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// header: t, x1..xn, u1..um, outcome
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int n, int m) {
    out << "t";
    for (int i = 1; i <= n; ++i) out << ",x" << i;
    const bool with_u = !traj.u_values.empty();
    if (with_u)
        for (int i = 1; i <= m; ++i) out << ",u" << i;
    out << ",outcome\n";
    const std::string tag = traj.outcome.tag();
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        out << format_full(traj.times[j]);
        for (double v : traj.x_values[j]) out << ',' << format_full(v);
        if (with_u)
            for (double v : traj.u_values[j]) out << ',' << format_full(v);
        out << ',' << tag << '\n';
    }
}

// header: delta1..deltan, outcome, t_star_low, t_star_high, t_settle
inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep, int n) {
    for (int i = 1; i <= n; ++i) out << "delta" << i << ',';
    out << "outcome,t_star_low,t_star_high,t_settle\n";
    for (const SweepEntry& e : sweep.entries) {
        for (double v : e.delta) out << format_full(v) << ',';
        if (!e.outcome) {
            out << "error:" << e.error << ",,,\n";
            continue;
        }
        out << e.outcome->tag() << ',';
        if (e.outcome->kind == Outcome::Kind::BlowUp)
            out << format_full(e.outcome->t_star_low) << ',' << format_full(e.outcome->t_star_high);
        else
            out << ',';
        out << ',';
        if (e.outcome->kind == Outcome::Kind::Stabilized) out << format_full(e.outcome->t_settle);
        out << '\n';
    }
}

inline nlohmann::json outcome_json(const Outcome& o) {
    nlohmann::json j;
    j["kind"] = o.tag();
    if (o.kind == Outcome::Kind::Stabilized) j["t_settle"] = o.t_settle;
    if (o.kind == Outcome::Kind::BlowUp) {
        j["t_star_low"] = o.t_star_low;
        j["t_star_high"] = o.t_star_high;
    }
    if (!o.note.empty()) j["note"] = o.note;
    return j;
}

inline nlohmann::json analysis_json(const StabilityAnalysis& a) {
    nlohmann::json j;
    j["problem"] = {{"name", a.lin.problem.name}, {"n", a.lin.problem.n}, {"m", a.lin.problem.m}};
    j["linearization"] = {{"a4_invertible", a.lin.a4_invertible},
                          {"norm_A_inv", a.lin.norm_A_inv},
                          {"warnings", a.lin.warnings}};
    j["spectral"] = {{"stable", a.spectral.stable}, {"abscissa", a.spectral.abscissa}};
    if (a.decay) {
        j["decay"] = {{"l", a.decay->l},
                      {"C", a.decay->C},
                      {"margin", a.decay->margin},
                      {"method", a.decay->method},
                      {"epsilon_report", a.epsilon_report}};
    }
    if (a.profile) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& pt : a.profile->points)
            rows.push_back({{"r", pt.r}, {"q", pt.q}, {"usable", pt.usable}, {"samples", pt.samples}});
        j["q_profile"] = {{"seed", a.profile->seed}, {"points", rows}};
    }
    if (a.basin) {
        j["basin"] = {{"r_star", a.basin->r_star},
                      {"q_star", a.basin->q_star},
                      {"delta_max", a.basin->delta_max},
                      {"certified", a.basin->r_star > 0.0},
                      {"note", a.basin->note}};
    }
    return j;
}

inline std::string analysis_text(const StabilityAnalysis& a) {
    std::ostringstream out;
    out << "problem: " << a.lin.problem.name << "  (n = " << a.lin.problem.n
        << ", m = " << a.lin.problem.m << ")\n";
    for (const auto& w : a.lin.warnings) out << "warning: " << w << '\n';
    out << "spectral abscissa of M: " << a.spectral.abscissa
        << (a.spectral.stable ? "  [stable]" : "  [NOT stable]") << '\n';
    if (a.decay)
        out << "decay bound: ||exp(Mt)|| <= " << a.decay->C << " * exp(-" << a.decay->l
            << " t)   (margin " << a.decay->margin << ", epsilon = " << a.epsilon_report << ")\n";
    if (a.profile) {
        out << "Lipschitz profile q(r):\n";
        for (const auto& pt : a.profile->points) {
            out << "  r = " << pt.r << "  q = " << pt.q;
            if (!pt.usable) out << "  [unusable: implicit solve failed in this ball]";
            out << '\n';
        }
    }
    if (a.basin) {
        if (a.basin->r_star > 0.0) {
            out << "certified radius r* = " << a.basin->r_star << "  (q* = " << a.basin->q_star
                << ")\n";
            out << "admissible initial deviation ||Delta|| <= " << a.basin->delta_max << '\n';
        } else {
            out << "no certified radius: " << a.basin->note << '\n';
        }
    } else if (!a.spectral.stable) {
        out << "rest point is not asymptotically stable in the first approximation\n";
    }
    return out.str();
}

inline nlohmann::json branch_report_json(const BranchingSpec& spec, const BranchSet& set) {
    nlohmann::json j;
    j["n"] = spec.n;
    j["m"] = spec.m;
    nlohmann::json roots = nlohmann::json::array();
    for (const auto& per_k : set.constraint_roots) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& r : per_k) row.push_back({{"w", r.value}, {"simple", r.simple}});
        roots.push_back(row);
    }
    j["constraint_roots"] = roots;
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& b : set.branches) {
        branches.push_back({{"roots", b.roots},
                            {"abscissa", b.abscissa},
                            {"verdict", b.verdict_tag()},
                            {"contains_zero_root", b.contains_zero_root}});
    }
    j["branches"] = branches;
    j["notes"] = set.notes;
    return j;
}

inline std::string branch_report_text(const BranchingSpec& spec, const BranchSet& set) {
    std::ostringstream out;
    out << "degenerate constraint: " << spec.m << " branch polynomial(s)\n";
    for (std::size_t k = 0; k < set.constraint_roots.size(); ++k) {
        out << "constraint " << k + 1 << " roots:";
        for (const auto& r : set.constraint_roots[k])
            out << "  " << r.value << (r.simple ? "" : " (non-simple, excluded)");
        out << '\n';
    }
    out << set.branches.size() << " branch(es):\n";
    for (std::size_t i = 0; i < set.branches.size(); ++i) {
        const Branch& b = set.branches[i];
        out << "  branch " << i + 1 << ": w* = (";
        for (std::size_t k = 0; k < b.roots.size(); ++k)
            out << (k ? ", " : "") << b.roots[k];
        out << ")  abscissa = " << b.abscissa << "  " << b.verdict_tag();
        if (b.contains_zero_root) out << "  [contains zero root]";
        out << '\n';
    }
    for (const auto& n : set.notes) out << "note: " << n << '\n';
    return out.str();
}

} // namespace daestab
