#include "sb/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "sb/bridge.hpp"
#include "sb/flows.hpp"
#include "sb/isaacs.hpp"
#include "sb/simulate.hpp"

namespace sb::cmd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kBracketTolerance = 1e-8;
constexpr std::uint64_t kPrecheckSeed = 9001;

double elapsed_s(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
        .count();
}

// All artifacts go through a temp file and a rename so readers never see a
// partial write.
void atomic_save_binary(const grid::TimeSlicedGrid& g, const fs::path& path) {
    const fs::path tmp = path.string() + ".tmp";
    grid::save_binary(g, tmp.string());
    fs::rename(tmp, path);
}

void atomic_save_csv(const grid::TimeSlicedGrid& g, const fs::path& path) {
    const fs::path tmp = path.string() + ".tmp";
    grid::save_csv(g, tmp.string());
    fs::rename(tmp, path);
}

void atomic_save_text(const std::string& text, const fs::path& path) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
        os << text;
    }
    fs::rename(tmp, path);
}

void write_report(const json& report, const fs::path& out_dir) {
    atomic_save_text(report.dump(2) + "\n", out_dir / "report.json");
}

int input_error(const std::string& message) {
    std::cerr << "input error: " << message << "\n";
    return kExitInputError;
}

std::vector<sim::AdversaryStrategy> parse_adversaries(
    const io::ProblemFile& pf, const grid::TimeSlicedGrid& target,
    std::vector<std::string>& names) {
    if (names.empty()) {
        names = {"constant:0",
                 "constant:" + std::to_string(pf.problem.Q.size() - 1), "lookahead"};
    }
    std::vector<sim::AdversaryStrategy> out;
    for (const std::string& name : names) {
        if (name == "lookahead") {
            out.push_back(sim::lookahead_adversary(pf.problem, target));
        } else if (name.rfind("constant:", 0) == 0) {
            const int index = std::stoi(name.substr(9));
            if (index < 0 || index >= pf.problem.Q.size())
                throw io::SchemaError("adversary index out of range: " + name,
                                      "/simulate/adversaries");
            out.push_back(sim::constant_adversary(index));
        } else {
            throw io::SchemaError("unknown adversary \"" + name + "\"",
                                  "/simulate/adversaries");
        }
    }
    return out;
}

}  // namespace

grid::TimeSlicedGrid build_target(const io::ProblemFile& pf,
                                  const grid::GridSpec& spec) {
    switch (pf.problem.target.kind) {
        case game::TargetSpec::Kind::Cylinder:
            return bridge::build_target_cylinder(pf.problem.target.region, spec,
                                                 false);
        case game::TargetSpec::Kind::Controllability:
            return bridge::build_controllability_target(*pf.auxiliary, spec,
                                                        pf.solver.substeps);
        case game::TargetSpec::Kind::ExplicitGrid: {
            grid::TimeSlicedGrid g = grid::load_binary(pf.problem.target.grid_path);
            if (!(g.spec() == spec))
                throw io::SchemaError("target grid does not match the problem grid",
                                      "/target/path");
            return g;
        }
    }
    throw std::logic_error("unreachable target kind");
}

double commutation_precheck(const io::ProblemFile& pf, int samples,
                            double tau_max, std::uint64_t seed) {
    if (!pf.auxiliary)
        throw io::SchemaError("commutation check needs an auxiliary section",
                              "/auxiliary");
    const game::AuxiliarySystem& aux = *pf.auxiliary;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<flows::CommutationSample> list;
    list.reserve(samples);
    for (int k = 0; k < samples; ++k) {
        flows::CommutationSample s;
        s.x.resize(pf.grid.dim());
        for (int a = 0; a < pf.grid.dim(); ++a)
            s.x[a] = pf.grid.bounds[a][0] +
                     unit(rng) * (pf.grid.bounds[a][1] - pf.grid.bounds[a][0]);
        s.u = pf.problem.P.points[rng() % pf.problem.P.points.size()];
        s.v = pf.problem.Q.points[rng() % pf.problem.Q.points.size()];
        s.omega = aux.omega.points[rng() % aux.omega.points.size()];
        s.tau_f = unit(rng) * tau_max;
        s.tau_g = unit(rng) * tau_max;
        list.push_back(std::move(s));
    }
    return flows::check_flow_commutation(pf.problem.f, aux.g, list,
                                         pf.solver.substeps)
        .max_discrepancy;
}

int cmd_solve(const std::string& problem_path, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    io::ProblemFile pf;
    try {
        pf = io::load_problem(problem_path);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }
    fs::create_directories(out_dir);

    bridge::ControlledDynamics dyn = bridge::make_dynamics(pf.problem);
    bridge::SolveResult result;
    try {
        result = bridge::solve_bridge(
            dyn,
            [&](const grid::GridSpec& spec) { return build_target(pf, spec); },
            pf.grid, pf.solver);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }

    json report;
    report["command"] = "solve";
    report["problem"] = problem_path;
    report["iterations"] = result.internal.iterations;
    report["converged"] = result.internal.converged;
    report["sizes"] = result.internal.sizes;
    report["dropped_trajectories"] = result.internal.dropped;
    report["occupied_cells"] = result.W.count();
    report["elapsed_seconds"] = elapsed_s(t0);

    const fs::path out(out_dir);
    if (!result.internal.converged) {
        atomic_save_binary(result.internal.W, out / "W_last.sbgr");
        atomic_save_binary(result.internal.W_previous, out / "W_previous.sbgr");
        write_report(report, out);
        std::cerr << "did not converge in " << pf.solver.max_iter
                  << " iterations; last two iterates exported\n";
        return kExitNoConvergence;
    }
    atomic_save_binary(result.W, out / "W.sbgr");
    atomic_save_csv(result.W, out / "W.csv");
    atomic_save_binary(result.M, out / "M.sbgr");
    write_report(report, out);
    std::cout << "converged after " << result.internal.iterations
              << " iterations, " << result.W.count() << " occupied cells\n";
    return kExitPass;
}

int cmd_transform_compare(const std::string& problem_path,
                          const std::string& out_dir, bool force) {
    const auto t0 = std::chrono::steady_clock::now();
    io::ProblemFile pf;
    try {
        pf = io::load_problem(problem_path);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }
    if (!pf.auxiliary)
        return input_error("transform-compare needs an auxiliary section");
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    const double tau_max = std::min(1.0, pf.problem.horizon);
    const double discrepancy =
        commutation_precheck(pf, 100, tau_max, kPrecheckSeed);
    std::cout << "commutation pre-check: max discrepancy " << discrepancy
              << " (tolerance " << pf.commute_tolerance << ")\n";

    json report;
    report["command"] = "transform-compare";
    report["problem"] = problem_path;
    report["commutation_discrepancy"] = discrepancy;
    report["commutation_tolerance"] = pf.commute_tolerance;
    report["precheck_seed"] = kPrecheckSeed;

    if (discrepancy > pf.commute_tolerance && !force) {
        write_report(report, out);
        std::cerr << "flows do not commute (max discrepancy " << discrepancy
                  << " > " << pf.commute_tolerance
                  << "); rerun with --force to compare anyway\n";
        return kExitHypothesisViolation;
    }

    // Lockstep iteration of the direct and the transformed problem on a
    // shared working grid, comparing each iterate at the base resolution.
    std::vector<int> factors = pf.solver.refine;
    if (factors.empty()) factors.assign(pf.grid.dim(), 1);
    if (factors.size() == 1 && pf.grid.dim() > 1)
        factors.assign(pf.grid.dim(), factors[0]);
    const grid::GridSpec wspec = pf.grid.refined(factors);

    game::TransformedProblem tp =
        game::build_transformed(pf.problem, *pf.auxiliary);
    bridge::ControlledDynamics dyn_d = bridge::make_dynamics(pf.problem);
    bridge::ControlledDynamics dyn_t = bridge::make_dynamics(tp);
    bridge::FlowStepCache cache_d(wspec, dyn_d, pf.solver.substeps,
                                  pf.solver.parallel);
    bridge::FlowStepCache cache_t(wspec, dyn_t, pf.solver.substeps,
                                  pf.solver.parallel);
    grid::TimeSlicedGrid M_d;
    try {
        M_d = build_target(pf, wspec);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }
    const grid::TimeSlicedGrid M_t =
        bridge::build_target_cylinder(tp.terminal, wspec, true);

    grid::TimeSlicedGrid W_d(wspec, true), W_t(wspec, true);
    bool all_included = true;
    bool done_d = false, done_t = false;
    json per_k = json::array();
    int k = 0;
    while ((!done_d || !done_t) && k < pf.solver.max_iter) {
        ++k;
        if (!done_d) {
            grid::TimeSlicedGrid next = bridge::absorption_step(
                W_d, M_d, dyn_d, cache_d, pf.solver.membership, pf.solver.parallel);
            done_d = next == W_d;
            W_d = std::move(next);
        }
        if (!done_t) {
            grid::TimeSlicedGrid next = bridge::absorption_step(
                W_t, M_t, dyn_t, cache_t, pf.solver.membership, pf.solver.parallel);
            done_t = next == W_t;
            W_t = std::move(next);
        }
        const grid::TimeSlicedGrid base_d = grid::coarsen(W_d, pf.grid, factors);
        const grid::TimeSlicedGrid base_t = grid::coarsen(W_t, pf.grid, factors);
        const grid::GridComparison c = grid::compare_grids(base_d, base_t, 1);
        const bool included = c.a_in_dilated_b && c.b_in_dilated_a;
        all_included = all_included && included;
        per_k.push_back({{"k", k},
                         {"direct_cells", base_d.count()},
                         {"transformed_cells", base_t.count()},
                         {"symmetric_difference", c.symmetric_difference_cells},
                         {"mutual_inclusion_radius_1", included}});
        atomic_save_binary(base_d, out / ("W_" + std::to_string(k) + ".sbgr"));
        atomic_save_binary(base_t, out / ("Wstar_" + std::to_string(k) + ".sbgr"));
        std::cout << "k=" << k << " direct " << base_d.count() << " transformed "
                  << base_t.count() << " symdiff " << c.symmetric_difference_cells
                  << (included ? " (mutual inclusion)" : " (MISMATCH)") << "\n";
    }
    report["iterations"] = k;
    report["converged"] = done_d && done_t;
    report["per_k"] = per_k;
    report["mutual_inclusion_all_k"] = all_included;
    report["elapsed_seconds"] = elapsed_s(t0);
    write_report(report, out);

    if (!(done_d && done_t)) {
        std::cerr << "iteration did not converge within " << pf.solver.max_iter
                  << " steps\n";
        return kExitNoConvergence;
    }
    if (!all_included) {
        std::cerr << "iterates disagree beyond dilation radius 1\n";
        return kExitCheckFailed;
    }
    std::cout << "direct and transformed iterates agree at radius 1 for all k\n";
    return kExitPass;
}

int cmd_check(const std::string& problem_path, const std::string& which,
              const std::string& grid_path, const std::string& out_dir) {
    io::ProblemFile pf;
    try {
        pf = io::load_problem(problem_path);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    json report;
    report["command"] = "check";
    report["which"] = which;
    report["problem"] = problem_path;

    if (which == "commute") {
        if (!pf.auxiliary)
            return input_error("commute check needs an auxiliary section");
        const double tau_max = std::min(1.0, pf.problem.horizon);
        const double d = commutation_precheck(pf, 100, tau_max, kPrecheckSeed);
        report["max_discrepancy"] = d;
        report["tolerance"] = pf.commute_tolerance;
        write_report(report, out);
        std::cout << "max commutation discrepancy: " << d << "\n";
        return d <= pf.commute_tolerance ? kExitPass : kExitCheckFailed;
    }
    if (which == "bracket") {
        if (!pf.auxiliary)
            return input_error("bracket check needs an auxiliary section");
        const game::AuxiliarySystem& aux = *pf.auxiliary;
        std::mt19937_64 rng(kPrecheckSeed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double max_norm = 0.0;
        std::vector<double> x(pf.grid.dim());
        std::vector<double> params_f(pf.problem.f.param_dim());
        for (int k = 0; k < 100; ++k) {
            for (int a = 0; a < pf.grid.dim(); ++a)
                x[a] = pf.grid.bounds[a][0] +
                       unit(rng) * (pf.grid.bounds[a][1] - pf.grid.bounds[a][0]);
            for (const auto& p : pf.problem.P.points)
                for (const auto& q : pf.problem.Q.points)
                    for (const auto& w : aux.omega.points) {
                        std::copy(p.begin(), p.end(), params_f.begin());
                        std::copy(q.begin(), q.end(),
                                  params_f.begin() + pf.problem.P.dim);
                        const std::vector<double> br = expr::lie_bracket(
                            pf.problem.f, aux.g, x, params_f, w);
                        double norm = 0.0;
                        for (double c : br) norm += c * c;
                        max_norm = std::max(max_norm, std::sqrt(norm));
                    }
        }
        report["max_bracket_norm"] = max_norm;
        report["tolerance"] = kBracketTolerance;
        write_report(report, out);
        std::cout << "max Lie bracket norm: " << max_norm << "\n";
        return max_norm <= kBracketTolerance ? kExitPass : kExitCheckFailed;
    }
    if (which == "isaacs") {
        const auto xs =
            isaacs::state_samples(pf.grid.bounds, pf.isaacs.state_samples);
        const auto ss = isaacs::direction_samples(pf.grid.dim(),
                                                  pf.isaacs.direction_samples);
        const isaacs::IsaacsReport rep =
            isaacs::isaacs_gap(pf.problem.f, pf.problem.P, pf.problem.Q, xs, ss);
        report["max_gap"] = rep.max_gap;
        report["tolerance"] = pf.isaacs.tolerance;
        isaacs::save_csv(rep, (out / "isaacs.csv").string());
        write_report(report, out);
        std::cout << "max Isaacs gap: " << rep.max_gap << "\n";
        return rep.max_gap <= pf.isaacs.tolerance ? kExitPass : kExitCheckFailed;
    }
    if (which == "sections") {
        if (!pf.auxiliary)
            return input_error("sections check needs an auxiliary section");
        if (grid_path.empty())
            return input_error("sections check needs a grid artifact (--grid)");
        grid::TimeSlicedGrid E;
        try {
            E = grid::load_binary(grid_path);
        } catch (const std::exception& e) {
            return input_error(e.what());
        }
        const auto violations = bridge::decreasing_by_sections_check(
            E, *pf.auxiliary, 5, kPrecheckSeed, pf.solver.substeps);
        report["violations"] = violations.size();
        write_report(report, out);
        std::cout << "section violations: " << violations.size() << "\n";
        return violations.empty() ? kExitPass : kExitCheckFailed;
    }
    return input_error("unknown check \"" + which +
                       "\" (expected commute|bracket|isaacs|sections)");
}

int cmd_simulate(const std::string& problem_path, const std::string& w_path,
                 const std::string& out_dir) {
    io::ProblemFile pf;
    try {
        pf = io::load_problem(problem_path);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }
    grid::TimeSlicedGrid W;
    try {
        W = grid::load_binary(w_path);
    } catch (const std::exception& e) {
        return input_error(e.what());
    }
    if (!(W.spec() == pf.grid))
        return input_error("bridge artifact does not match the problem grid");
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    json report;
    report["command"] = "simulate";
    report["problem"] = problem_path;
    report["seed"] = pf.simulate.seed;

    if (W.count() == 0) {
        sim::TrialReport empty;
        empty.vacuous = true;
        sim::save_csv(empty, (out / "trials.csv").string());
        report["vacuous"] = true;
        write_report(report, out);
        std::cout << "warning: bridge is empty, vacuous report\n";
        return kExitPass;
    }

    grid::TimeSlicedGrid target;
    try {
        target = build_target(pf, pf.grid);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }
    const auto starts = sim::sample_starts(W, pf.simulate.margin, true,
                                           pf.simulate.starts, pf.simulate.seed);
    std::vector<std::string> names = pf.simulate.adversaries;
    std::vector<sim::AdversaryStrategy> adversaries;
    try {
        adversaries = parse_adversaries(pf, target, names);
    } catch (const io::SchemaError& e) {
        return input_error(e.what());
    }
    std::vector<double> fineness = pf.simulate.fineness;
    if (fineness.empty()) fineness = {pf.grid.dt()};
    double eps = pf.simulate.eps;
    if (eps <= 0.0) {
        // default: 1.5 cell diagonals
        double d = 0.0;
        for (int a = 0; a < pf.grid.dim(); ++a)
            d += pf.grid.cell_width(a) * pf.grid.cell_width(a);
        eps = 1.5 * std::sqrt(d);
    }
    const sim::TrialReport trials =
        sim::run_trials(pf.problem, W, target, starts, adversaries, fineness, eps,
                        pf.simulate.substeps);
    sim::save_csv(trials, (out / "trials.csv").string());
    report["vacuous"] = trials.vacuous;
    report["trials"] = trials.trials.size();
    report["success_fraction"] = trials.success_fraction;
    report["eps"] = eps;
    report["adversaries"] = names;
    write_report(report, out);
    if (trials.vacuous)
        std::cout << "warning: no start states available, vacuous report\n";
    else
        std::cout << "success fraction: " << trials.success_fraction << " over "
                  << trials.trials.size() << " trials\n";
    return kExitPass;
}

int cmd_export_plot(const std::string& grid_path, std::vector<int> slices,
                    const std::string& out_path) {
    grid::TimeSlicedGrid g;
    try {
        g = grid::load_binary(grid_path);
    } catch (const std::exception& e) {
        return input_error(e.what());
    }
    const grid::GridSpec& spec = g.spec();
    if (slices.empty())
        for (int s = 0; s <= spec.time_steps; ++s) slices.push_back(s);
    for (int s : slices)
        if (s < 0 || s > spec.time_steps)
            return input_error("slice " + std::to_string(s) + " out of range [0, " +
                               std::to_string(spec.time_steps) + "]");

    std::ostringstream os;
    os.precision(17);
    os << "t_index,t";
    for (int a = 0; a < spec.dim(); ++a) os << ",lo" << a + 1 << ",hi" << a + 1;
    os << "\n";
    std::vector<int> multi(spec.dim()), nb(spec.dim());
    for (int s : slices) {
        for (std::int64_t cell : g.occupied_in_slice(s)) {
            spec.multi(cell, multi);
            // boundary cell: some 4-neighbor (per-axis +/- 1) unoccupied or
            // outside the grid
            bool boundary = false;
            for (int a = 0; a < spec.dim() && !boundary; ++a)
                for (int d : {-1, 1}) {
                    nb = multi;
                    nb[a] += d;
                    if (nb[a] < 0 || nb[a] >= spec.cells[a] ||
                        !g.test(s, spec.linear(nb))) {
                        boundary = true;
                        break;
                    }
                }
            if (!boundary) continue;
            os << s << ',' << spec.time_of(s);
            for (int a = 0; a < spec.dim(); ++a) {
                const double lo =
                    spec.bounds[a][0] + spec.cell_width(a) * multi[a];
                os << ',' << lo << ',' << lo + spec.cell_width(a);
            }
            os << '\n';
        }
    }
    atomic_save_text(os.str(), out_path);
    return kExitPass;
}

}  // namespace sb::cmd
