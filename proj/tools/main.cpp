// daestab command-line front end: load a problem (builtin or JSON file),
// run the analysis pipeline, and emit reports/CSVs with stable exit codes.
//
// Exit codes: 0 success, 2 usage error, 3 numeric/model failure,
//             4 verification failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "daestab/daestab.hpp"

namespace {

using namespace daestab;

struct ProblemSource {
    std::string builtin_name;
    std::string file_path;
    int nodes = 64;
    double alpha = -1.0, beta = 1.0, a = 3.0, b = 2.0;

    void attach(CLI::App* cmd) {
        auto* b_opt = cmd->add_option("--builtin", builtin_name,
                                      "builtin problem: example1 | example2 | example3");
        auto* f_opt = cmd->add_option("--file", file_path, "problem file (JSON)");
        b_opt->excludes(f_opt);
        f_opt->excludes(b_opt);
        cmd->add_option("--N", nodes, "quadrature nodes for example1")->capture_default_str();
        cmd->add_option("--alpha", alpha, "example3 linear coefficient of x")
            ->capture_default_str();
        cmd->add_option("--beta", beta, "example3 linear coefficient of u")->capture_default_str();
        cmd->add_option("--a", a, "example3 constraint coefficient of x^2")
            ->capture_default_str();
        cmd->add_option("--b", b, "example3 constraint cross coefficient")->capture_default_str();
    }

    DAEProblem load() const {
        if (!file_path.empty()) return load_problem(file_path);
        if (builtin_name.empty())
            throw CLI::ValidationError("problem", "one of --builtin or --file is required");
        std::map<std::string, double> params{{"N", static_cast<double>(nodes)},
                                             {"alpha", alpha},
                                             {"beta", beta},
                                             {"a", a},
                                             {"b", b}};
        return builtin(builtin_name, params);
    }
};

std::vector<double> parse_components(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string tok = text.substr(pos, comma - pos);
        if (!tok.empty()) out.push_back(std::stod(tok));
        pos = comma + 1;
        if (comma == text.size()) break;
    }
    return out;
}

std::vector<Vector> parse_delta_list(const std::string& text) {
    std::vector<Vector> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t semi = std::min(text.find(';', pos), text.size());
        const std::string entry = text.substr(pos, semi - pos);
        if (!entry.empty()) out.push_back(parse_components(entry));
        pos = semi + 1;
        if (semi == text.size()) break;
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write '" + path.string() + "'");
    out << body;
}

struct CommonOutput {
    std::string out_dir = ".";
    bool json = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory for artifacts")
            ->capture_default_str();
        cmd->add_flag("--json", json, "print the JSON report instead of text");
    }

    std::filesystem::path dir() const {
        std::filesystem::create_directories(out_dir);
        return out_dir;
    }
};

int run_analyze(const ProblemSource& src, const CommonOutput& out, const AnalyzeOptions& opts) {
    const DAEProblem p = src.load();
    const StabilityAnalysis analysis = run_stability_analysis(p, opts);
    const nlohmann::json j = analysis_json(analysis);
    write_file(out.dir() / "analyze_report.json", j.dump(2) + "\n");
    write_file(out.dir() / "analyze_report.txt", analysis_text(analysis));
    std::cout << (out.json ? j.dump(2) + "\n" : analysis_text(analysis));
    return 0;
}

int run_simulate(const ProblemSource& src, const CommonOutput& out, const Vector& x0, double T,
                 const IntegrateOptions& opts) {
    const DAEProblem p = src.load();
    if (static_cast<int>(x0.size()) != p.n)
        throw PreconditionError("--x0 needs " + std::to_string(p.n) + " components");
    const LinearizationData lin = linearize(p);
    const Trajectory traj = integrate_reduced(lin, x0, T, opts);
    std::ostringstream csv;
    write_trajectory_csv(csv, traj, p.n, p.m);
    write_file(out.dir() / "trajectory.csv", csv.str());
    nlohmann::json j;
    j["outcome"] = outcome_json(traj.outcome);
    j["points"] = traj.times.size();
    j["error_estimate"] = traj.error_estimate;
    j["notes"] = traj.notes;
    if (out.json) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "outcome: " << traj.outcome.tag();
        if (traj.outcome.kind == Outcome::Kind::Stabilized)
            std::cout << "  (settled at t = " << traj.outcome.t_settle << ")";
        if (traj.outcome.kind == Outcome::Kind::BlowUp)
            std::cout << "  (t* in [" << format_full(traj.outcome.t_star_low) << ", "
                      << format_full(traj.outcome.t_star_high) << "])";
        std::cout << "\nwrote trajectory.csv (" << traj.times.size() << " points)\n";
        for (const auto& n : traj.notes) std::cout << "note: " << n << '\n';
    }
    return 0;
}

int run_sweep(const ProblemSource& src, const CommonOutput& out, const std::string& deltas_text,
              const std::string& linspace, double T, const IntegrateOptions& opts) {
    const DAEProblem p = src.load();
    std::vector<Vector> deltas = parse_delta_list(deltas_text);
    if (!linspace.empty()) {
        if (p.n != 1)
            throw PreconditionError("--linspace is only available for scalar problems");
        const std::vector<double> spec = parse_components(linspace);
        if (spec.size() != 3) throw PreconditionError("--linspace needs lo,hi,count");
        const int count = static_cast<int>(spec[2]);
        for (int i = 0; i < count; ++i)
            deltas.push_back({spec[0] + (spec[1] - spec[0]) * i / std::max(1, count - 1)});
    }
    for (const Vector& d : deltas)
        if (static_cast<int>(d.size()) != p.n)
            throw PreconditionError("each delta needs " + std::to_string(p.n) + " components");
    const SweepResult sweep = delta_sweep(p, deltas, T, opts);
    std::ostringstream csv;
    write_sweep_csv(csv, sweep, p.n);
    write_file(out.dir() / "sweep.csv", csv.str());
    nlohmann::json j;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : sweep.entries) {
        nlohmann::json row;
        row["delta"] = e.delta;
        if (e.outcome) row["outcome"] = outcome_json(*e.outcome);
        if (!e.error.empty()) row["error"] = e.error;
        j["entries"].push_back(row);
    }
    j["boundaries"] = nlohmann::json::array();
    for (const auto& b : sweep.boundaries)
        j["boundaries"].push_back({{"delta_low", b.delta_low},
                                   {"delta_high", b.delta_high},
                                   {"from", b.kind_low},
                                   {"to", b.kind_high}});
    if (out.json) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "swept " << sweep.entries.size() << " initial deviations -> sweep.csv\n";
        for (const auto& b : sweep.boundaries)
            std::cout << "boundary: " << b.kind_low << " -> " << b.kind_high << " between "
                      << b.delta_low << " and " << b.delta_high << '\n';
    }
    return 0;
}

int run_branches(const ProblemSource& src, const CommonOutput& out, bool simulate, bool force,
                 const std::string& delta_text, double T, const IntegrateOptions& iopts) {
    const DAEProblem p = src.load();
    const LinearizationData lin = linearize(p);
    const BranchingSpec spec = make_branching_spec(p, lin);
    const BranchSet set = enumerate_branches(spec);
    nlohmann::json j = branch_report_json(spec, set);
    std::string text = branch_report_text(spec, set);

    if (simulate) {
        const Vector delta =
            delta_text.empty() ? Vector(p.n, 0.05) : parse_components(delta_text);
        if (static_cast<int>(delta.size()) != p.n)
            throw PreconditionError("--delta needs " + std::to_string(p.n) + " components");
        nlohmann::json sims = nlohmann::json::array();
        for (std::size_t i = 0; i < set.branches.size(); ++i) {
            const Branch& br = set.branches[i];
            if (br.verdict != Branch::Verdict::Stable && !force) {
                sims.push_back({{"branch", i + 1}, {"skipped", br.verdict_tag()}});
                text += "branch " + std::to_string(i + 1) + ": skipped (" + br.verdict_tag() +
                        "; use --force)\n";
                continue;
            }
            SimulateBranchOptions sopts;
            sopts.integrate = iopts;
            sopts.force = force;
            const Trajectory traj = simulate_branch(p, br, vadd(p.x0, delta), T, sopts);
            std::ostringstream csv;
            write_trajectory_csv(csv, traj, p.n, p.m);
            const std::string name = "branch_" + std::to_string(i + 1) + ".csv";
            write_file(out.dir() / name, csv.str());
            sims.push_back({{"branch", i + 1},
                            {"outcome", outcome_json(traj.outcome)},
                            {"csv", name}});
            text += "branch " + std::to_string(i + 1) + ": " + traj.outcome.tag() + " -> " +
                    name + "\n";
        }
        j["simulations"] = sims;
    }

    write_file(out.dir() / "branches_report.json", j.dump(2) + "\n");
    write_file(out.dir() / "branches_report.txt", text);
    std::cout << (out.json ? j.dump(2) + "\n" : text);
    return 0;
}

int run_iterate(const ProblemSource& src, const CommonOutput& out, const Vector& x0,
                int iterations, double T, int grid, const IntegrateOptions& iopts) {
    const DAEProblem p = src.load();
    if (static_cast<int>(x0.size()) != p.n)
        throw PreconditionError("--x0 needs " + std::to_string(p.n) + " components");
    SuccessiveOptions opts;
    opts.grid_points = grid;
    opts.integrate = iopts;
    const SuccessiveResult res = successive_approximations(p, x0, iterations, T, opts);
    nlohmann::json j;
    j["iterates"] = nlohmann::json::array();
    for (std::size_t i = 0; i < res.iterates.size(); ++i) {
        const Trajectory& traj = res.iterates[i];
        std::ostringstream csv;
        write_trajectory_csv(csv, traj, p.n, p.m);
        const std::string name = "iterate_" + std::to_string(i + 1) + ".csv";
        write_file(out.dir() / name, csv.str());
        j["iterates"].push_back({{"outcome", outcome_json(traj.outcome)}, {"csv", name}});
    }
    j["x_sup_gaps"] = res.x_sup_gaps;
    j["notes"] = res.notes;
    write_file(out.dir() / "iterate_report.json", j.dump(2) + "\n");
    if (out.json) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << res.iterates.size() << " iterate(s) written\n";
        std::cout << "sup-norm gaps between consecutive iterates:\n";
        for (std::size_t i = 0; i < res.x_sup_gaps.size(); ++i)
            std::cout << "  |x_" << i + 2 << " - x_" << i + 1 << "| = "
                      << format_full(res.x_sup_gaps[i]) << '\n';
        for (const auto& n : res.notes) std::cout << "note: " << n << '\n';
    }
    return 0;
}

int run_verify(const CommonOutput& out, std::uint64_t seed) {
    const VerifyReport report = run_verification(seed);
    const nlohmann::json j = verify_report_json(report);
    write_file(out.dir() / "verify_report.json", j.dump(2) + "\n");
    if (out.json) {
        std::cout << j.dump(2) << "\n";
    } else {
        for (const auto& c : report.checks)
            std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << '\n';
        std::cout << (report.all_passed() ? "all checks passed\n" : "CHECKS FAILED\n");
    }
    return report.all_passed() ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rest-point analysis of semi-explicit DAE systems"};
    app.require_subcommand(1);

    ProblemSource src;
    CommonOutput out;
    double T = 10.0;
    double rtol = 1e-8;
    std::uint64_t seed = 20250811;
    int threads = 0;
    std::string x0_text, deltas_text, linspace_text, delta_text;

    AnalyzeOptions aopts;
    auto* analyze = app.add_subcommand("analyze", "stability and basin-of-attraction report");
    src.attach(analyze);
    out.attach(analyze);
    analyze->add_option("--margin", aopts.margin, "fraction of the spectral gap withheld from l")
        ->capture_default_str();
    analyze->add_option("--qstar", aopts.q_star, "contraction target q* in (0,1)")
        ->capture_default_str();
    analyze->add_option("--radii-max", aopts.radii_max, "largest sampled radius")
        ->capture_default_str();
    analyze->add_option("--radii-count", aopts.radii_count, "number of sampled radii")
        ->capture_default_str();
    analyze->add_option("--samples", aopts.samples, "sampled pairs per radius")
        ->capture_default_str();
    analyze->add_option("--seed", aopts.seed, "sampling seed")->capture_default_str();
    analyze->add_option("--threads", aopts.threads, "worker threads (0 = auto)")
        ->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "integrate one trajectory, write CSV");
    src.attach(simulate);
    out.attach(simulate);
    simulate->add_option("--x0", x0_text, "absolute initial state, comma-separated")->required();
    simulate->add_option("--T", T, "time horizon")->capture_default_str();
    simulate->add_option("--tol", rtol, "relative integration tolerance")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "classify a set of initial deviations");
    src.attach(sweep);
    out.attach(sweep);
    sweep->add_option("--deltas", deltas_text,
                      "deviations: components comma-separated, entries ';'-separated");
    sweep->add_option("--linspace", linspace_text, "scalar grid lo,hi,count");
    sweep->add_option("--T", T, "time horizon")->capture_default_str();
    sweep->add_option("--tol", rtol, "relative integration tolerance")->capture_default_str();
    sweep->add_option("--threads", threads, "worker threads (0 = auto)")->capture_default_str();

    bool do_simulate = false, force = false;
    auto* branches = app.add_subcommand("branches", "enumerate and classify solution branches");
    src.attach(branches);
    out.attach(branches);
    branches->add_flag("--simulate", do_simulate, "integrate each stable branch");
    branches->add_flag("--force", force, "integrate unstable/marginal branches too");
    branches->add_option("--delta", delta_text, "initial deviation for --simulate");
    branches->add_option("--T", T, "time horizon")->capture_default_str();

    int iterations = 12, grid = 2048;
    auto* iterate = app.add_subcommand("iterate", "successive-approximation iterates");
    src.attach(iterate);
    out.attach(iterate);
    iterate->add_option("--x0", x0_text, "absolute initial state, comma-separated")->required();
    iterate->add_option("--iterations", iterations, "number of iterates")->capture_default_str();
    iterate->add_option("--T", T, "time horizon")->capture_default_str();
    iterate->add_option("--grid", grid, "shared output grid points")->capture_default_str();
    iterate->add_option("--tol", rtol, "relative integration tolerance")->capture_default_str();

    auto* verify = app.add_subcommand("verify", "run the builtin oracle suite");
    out.attach(verify);
    verify->add_option("--seed", seed, "sampling seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    IntegrateOptions iopts;
    iopts.rtol = rtol;
    iopts.threads = threads;

    try {
        if (app.got_subcommand(analyze)) return run_analyze(src, out, aopts);
        if (app.got_subcommand(simulate))
            return run_simulate(src, out, parse_components(x0_text), T, iopts);
        if (app.got_subcommand(sweep))
            return run_sweep(src, out, deltas_text, linspace_text, T, iopts);
        if (app.got_subcommand(branches))
            return run_branches(src, out, do_simulate, force, delta_text, T, iopts);
        if (app.got_subcommand(iterate))
            return run_iterate(src, out, parse_components(x0_text), iterations, T, grid, iopts);
        if (app.got_subcommand(verify)) return run_verify(out, seed);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        nlohmann::json err{{"error", {{"code", e.code()}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << "\n";
        return 3;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"code", "internal"}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << "\n";
        return 3;
    }
    return 2;
}
