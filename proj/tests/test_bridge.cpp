#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "sb/bridge.hpp"
#include "sb/gamespec.hpp"
#include "sb/grid.hpp"

using namespace sb;
using namespace sb::bridge;

namespace {

game::GameProblem simple_motion(double target_halfwidth = 0.2) {
    game::GameProblem p;
    expr::FieldSignature sig({"x1"}, {{"u", 1}, {"v", 1}});
    p.f = expr::parse_field({"u + v"}, sig);
    p.u_group = "u";
    p.v_group = "v";
    p.P = game::sample_control_set(game::SetDescriptor::interval(-1.0, 1.0, 9));
    p.Q = game::sample_control_set(game::SetDescriptor::interval(-0.5, 0.5, 5));
    p.horizon = 1.0;
    p.target.kind = game::TargetSpec::Kind::Cylinder;
    p.target.region.kind = game::RegionSpec::Kind::Box;
    p.target.region.bounds = {{-target_halfwidth, target_halfwidth}};
    return p;
}

game::AuxiliarySystem sinking_island_aux() {
    game::AuxiliarySystem aux;
    expr::FieldSignature gsig({"y", "z"}, {{"omega", 1}});
    aux.g = expr::parse_field({"omega", "0"}, gsig);
    aux.omega_group = "omega";
    aux.omega =
        game::sample_control_set(game::SetDescriptor::interval(-1.0, 1.0, 9));
    aux.terminal.kind = game::RegionSpec::Kind::Point;
    aux.terminal.center = {0.0, 0.0};
    return aux;
}

grid::GridSpec coarse_1d() {
    grid::GridSpec spec;
    spec.bounds = {{-2.0, 2.0}};
    spec.cells = {21};
    spec.time_steps = 6;
    spec.horizon = 1.0;
    return spec;
}

// Straightforward set-based replica of the documented absorption recursion,
// with the exact linear flow x + (u+v)*dt standing in for the integrator.
// Kept deliberately different in data layout from the production kernel.
grid::TimeSlicedGrid oracle_absorption(const grid::TimeSlicedGrid& E,
                                       const grid::TimeSlicedGrid& M,
                                       const game::GameProblem& p) {
    const grid::GridSpec& spec = E.spec();
    const int N = spec.time_steps;
    const double dt = spec.dt();
    auto slice_set = [&](const grid::TimeSlicedGrid& g, int s) {
        std::set<std::int64_t> out;
        for (std::int64_t c : g.occupied_in_slice(s)) out.insert(c);
        return out;
    };

    std::vector<std::set<std::int64_t>> result(N + 1);
    bool first_v = true;
    for (const auto& v : p.Q.points) {
        std::vector<std::set<std::int64_t>> T(N + 1);
        for (std::int64_t c : M.occupied_in_slice(N))
            if (E.test(N, c)) T[N].insert(c);
        for (int i = N - 1; i >= 0; --i) {
            for (std::int64_t c : E.occupied_in_slice(i)) {
                if (M.test(i, c)) {
                    T[i].insert(c);
                    continue;
                }
                const double x = spec.center(c)[0];
                for (const auto& u : p.P.points) {
                    const std::int64_t dest = spec.cell_of(
                        std::vector<double>{x + (u[0] + v[0]) * dt});
                    if (dest >= 0 && T[i + 1].count(dest)) {
                        T[i].insert(c);
                        break;
                    }
                }
            }
        }
        for (int i = 0; i <= N; ++i) {
            if (first_v) {
                result[i] = T[i];
            } else {
                std::set<std::int64_t> inter;
                for (std::int64_t c : result[i])
                    if (T[i].count(c)) inter.insert(c);
                result[i] = std::move(inter);
            }
        }
        first_v = false;
    }
    grid::TimeSlicedGrid out(spec);
    for (int i = 0; i <= N; ++i)
        for (std::int64_t c : result[i])
            if (slice_set(E, i).count(c)) out.set(i, c);
    return out;
}

}  // namespace

TEST_CASE("target cylinder over [-0.2, 0.2] occupies 21 cells per slice") {
    const game::GameProblem p = simple_motion();
    grid::GridSpec spec;
    spec.bounds = {{-2.0, 2.0}};
    spec.cells = {201};
    spec.time_steps = 50;
    spec.horizon = 1.0;
    const grid::TimeSlicedGrid M =
        build_target_cylinder(p.target.region, spec, false);
    for (int s = 0; s <= 50; ++s) CHECK(M.count_slice(s) == 21);
    const auto occ = M.occupied_in_slice(0);
    CHECK(occ.front() == 90);
    CHECK(occ.back() == 110);

    const grid::TimeSlicedGrid final_only =
        build_target_cylinder(p.target.region, spec, true);
    CHECK(final_only.count() == 21);
    CHECK(final_only.count_slice(50) == 21);
}

TEST_CASE("absorption on trivial inputs") {
    const game::GameProblem p = simple_motion();
    const grid::GridSpec spec = coarse_1d();
    const ControlledDynamics dyn = make_dynamics(p);
    const FlowStepCache cache(spec, dyn, 4, false);

    const grid::TimeSlicedGrid full(spec, true);
    const grid::TimeSlicedGrid empty(spec);
    CHECK(absorption_step(full, full, dyn, cache, Membership::Nearest, false) ==
          full);
    CHECK(absorption_step(full, empty, dyn, cache, Membership::Nearest, false) ==
          empty);
}

TEST_CASE("absorption matches the set-based oracle on random sets") {
    const game::GameProblem p = simple_motion();
    const grid::GridSpec spec = coarse_1d();
    const ControlledDynamics dyn = make_dynamics(p);
    const FlowStepCache cache(spec, dyn, 4, false);
    const grid::TimeSlicedGrid M = build_target_cylinder(p.target.region, spec, false);

    grid::TimeSlicedGrid E(spec, true);
    for (int round = 0; round < 3; ++round) {
        const grid::TimeSlicedGrid ours =
            absorption_step(E, M, dyn, cache, Membership::Nearest, false);
        const grid::TimeSlicedGrid expected = oracle_absorption(E, M, p);
        CHECK(ours == expected);
        E = ours;   // feed the iterate back in as the next E
    }
}

TEST_CASE("programmed iteration: monotone, fixed point, one-shot at coarse scale") {
    const game::GameProblem p = simple_motion();
    const grid::GridSpec spec = coarse_1d();
    const ControlledDynamics dyn = make_dynamics(p);
    const FlowStepCache cache(spec, dyn, 4, false);
    const grid::TimeSlicedGrid M = build_target_cylinder(p.target.region, spec, false);

    SolverConfig cfg;
    cfg.parallel = false;
    cfg.substeps = 4;
    const IterationResult r = programmed_iteration(M, dyn, cache, cfg);
    CHECK(r.converged);
    CHECK(r.iterations <= 30);
    // sizes monotonically non-increasing (W_{k+1} subset of W_k)
    for (std::size_t k = 1; k < r.sizes.size(); ++k)
        CHECK(r.sizes[k] <= r.sizes[k - 1]);
    CHECK(r.W.is_subset_of(r.W_previous));
    // this problem is one-shot: the k=1 set is already the fixed point
    CHECK(r.iterations == 2);
    // reapplication returns the fixed point bitwise
    const grid::TimeSlicedGrid again =
        absorption_step(r.W, M, dyn, cache, Membership::Nearest, false);
    CHECK(again == r.W);
}

TEST_CASE("parallel and serial kernels agree bitwise") {
    const game::GameProblem p = simple_motion();
    grid::GridSpec spec;
    spec.bounds = {{-2.0, 2.0}};
    spec.cells = {201};
    spec.time_steps = 20;
    spec.horizon = 1.0;
    const ControlledDynamics dyn = make_dynamics(p);
    const grid::TimeSlicedGrid M = build_target_cylinder(p.target.region, spec, false);
    const FlowStepCache serial_cache(spec, dyn, 8, false);
    const FlowStepCache parallel_cache(spec, dyn, 8, true);
    grid::TimeSlicedGrid E(spec, true);
    const grid::TimeSlicedGrid a =
        absorption_step(E, M, dyn, serial_cache, Membership::Nearest, false);
    const grid::TimeSlicedGrid b =
        absorption_step(E, M, dyn, parallel_cache, Membership::Nearest, true);
    CHECK(a == b);
}

TEST_CASE("neighborhood membership is at least as permissive as nearest") {
    const game::GameProblem p = simple_motion();
    const grid::GridSpec spec = coarse_1d();
    const ControlledDynamics dyn = make_dynamics(p);
    const FlowStepCache cache(spec, dyn, 4, false);
    const grid::TimeSlicedGrid M = build_target_cylinder(p.target.region, spec, false);
    grid::TimeSlicedGrid E(spec, true);
    const grid::TimeSlicedGrid nearest =
        absorption_step(E, M, dyn, cache, Membership::Nearest, false);
    const grid::TimeSlicedGrid neighborhood =
        absorption_step(E, M, dyn, cache, Membership::Neighborhood, false);
    CHECK(nearest.is_subset_of(neighborhood));
}

TEST_CASE("solve_bridge with internal refinement recovers the analytic band") {
    const game::GameProblem p = simple_motion();
    grid::GridSpec spec;
    spec.bounds = {{-2.0, 2.0}};
    spec.cells = {201};
    spec.time_steps = 50;
    spec.horizon = 1.0;
    SolverConfig cfg;
    cfg.refine = {10};
    cfg.substeps = 8;
    cfg.parallel = false;
    const ControlledDynamics dyn = make_dynamics(p);
    const SolveResult r = solve_bridge(
        dyn,
        [&](const grid::GridSpec& s) {
            return build_target_cylinder(p.target.region, s, false);
        },
        spec, cfg);
    REQUIRE(r.internal.converged);
    CHECK(r.W.spec() == spec);
    // analytic solvability set: |x| <= 0.2 + 0.5*(1 - t), cell-for-cell
    std::vector<double> center(1);
    for (int s = 0; s <= 50; ++s) {
        const double radius = 0.2 + 0.5 * (1.0 - spec.time_of(s));
        for (std::int64_t c = 0; c < spec.spatial_cells(); ++c) {
            spec.center(c, center);
            CHECK(r.W.test(s, c) == (std::fabs(center[0]) <= radius + 1e-12));
        }
    }
}

TEST_CASE("controllability target of the sinking island") {
    const game::AuxiliarySystem aux = sinking_island_aux();
    grid::GridSpec spec;
    spec.bounds = {{-1.01, 1.01}, {-2.525, 2.525}};
    spec.cells = {101, 101};
    spec.time_steps = 50;
    spec.horizon = 1.0;
    const grid::TimeSlicedGrid M = build_controllability_target(aux, spec, 8);
    // final slice is exactly the F cell
    CHECK(M.count_slice(50) == 1);
    const std::int64_t f_cell = spec.cell_of(std::vector<double>{0.0, 0.0});
    CHECK(M.test(50, f_cell));
    // each earlier slice is the band {|y| <= 1 - t} x {z = 0} within one cell
    std::vector<int> multi(2);
    for (int s = 0; s <= 50; ++s) {
        const double t = spec.time_of(s);
        std::vector<double> center(2);
        for (std::int64_t c : M.occupied_in_slice(s)) {
            spec.center(c, center);
            CHECK(std::fabs(center[0]) <= 1.0 - t + spec.cell_width(0) + 1e-12);
            CHECK(std::fabs(center[1]) <= spec.cell_width(1) + 1e-12);
        }
        CHECK(M.count_slice(s) >= 1);
    }
    // slices shrink toward the end (the island sinks)
    CHECK(M.count_slice(0) > M.count_slice(25));
    CHECK(M.count_slice(25) > M.count_slice(50));
}

TEST_CASE("decreasing-by-sections check") {
    const game::AuxiliarySystem aux = sinking_island_aux();
    grid::GridSpec spec;
    spec.bounds = {{-1.01, 1.01}, {-2.525, 2.525}};
    spec.cells = {101, 101};
    spec.time_steps = 10;
    spec.horizon = 1.0;

    SUBCASE("the controllability set itself is clean") {
        const grid::TimeSlicedGrid M = build_controllability_target(aux, spec, 8);
        CHECK(decreasing_by_sections_check(M, aux, 4, 42, 8).empty());
    }
    SUBCASE("the bare final slice is violated at earlier slices") {
        grid::TimeSlicedGrid E(spec);
        E.set(10, spec.cell_of(std::vector<double>{0.0, 0.0}));
        E.set(5, spec.cell_of(std::vector<double>{0.9, 2.0}));
        const auto violations = decreasing_by_sections_check(E, aux, 4, 42, 8);
        CHECK(!violations.empty());
    }
}
