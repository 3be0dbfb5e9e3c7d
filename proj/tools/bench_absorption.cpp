// Benchmark: serial vs parallel absorption kernels on the double
// integrator problem at a few grid sizes. Verifies the results are
// bitwise identical before reporting timings.

#include <chrono>
#include <cstdio>

#include "sb/bridge.hpp"
#include "sb/gamespec.hpp"
#include "sb/grid.hpp"

using namespace sb;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

game::GameProblem make_problem() {
    game::GameProblem p;
    expr::FieldSignature sig({"y", "z"}, {{"u", 1}, {"v", 1}});
    p.f = expr::parse_field({"z", "u + v"}, sig);
    p.u_group = "u";
    p.v_group = "v";
    p.P = game::sample_control_set(game::SetDescriptor::interval(-2.0, 2.0, 9));
    p.Q = game::sample_control_set(game::SetDescriptor::interval(-0.5, 0.5, 5));
    p.horizon = 1.0;
    p.target.kind = game::TargetSpec::Kind::Cylinder;
    p.target.region.kind = game::RegionSpec::Kind::Ball;
    p.target.region.center = {0.0, 0.0};
    p.target.region.radius = 0.25;
    return p;
}

}  // namespace

int main() {
    const game::GameProblem problem = make_problem();
    const bridge::ControlledDynamics dyn = bridge::make_dynamics(problem);

    std::printf("%8s %10s %10s %8s\n", "cells", "serial_s", "parallel_s",
                "speedup");
    for (int n : {51, 101, 201}) {
        grid::GridSpec spec;
        spec.bounds = {{-2.0, 2.0}, {-2.0, 2.0}};
        spec.cells = {n, n};
        spec.time_steps = 25;
        spec.horizon = problem.horizon;

        const grid::TimeSlicedGrid M =
            bridge::build_target_cylinder(problem.target.region, spec, false);

        double elapsed[2];
        grid::TimeSlicedGrid results[2];
        for (int par = 0; par < 2; ++par) {
            const double t0 = now_s();
            bridge::FlowStepCache cache(spec, dyn, 8, par == 1);
            grid::TimeSlicedGrid W(spec, true);
            for (int k = 0; k < 4; ++k)
                W = bridge::absorption_step(W, M, dyn, cache,
                                            bridge::Membership::Nearest, par == 1);
            elapsed[par] = now_s() - t0;
            results[par] = std::move(W);
        }
        if (!(results[0] == results[1])) {
            std::fprintf(stderr, "serial and parallel results differ at n=%d\n", n);
            return 1;
        }
        std::printf("%5dx%-3d %10.3f %10.3f %7.2fx\n", n, n, elapsed[0],
                    elapsed[1], elapsed[0] / elapsed[1]);
    }
    return 0;
}
