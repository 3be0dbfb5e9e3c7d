#pragma once

// The discretized program absorption operator, target construction,
// programmed iteration to the solvability set, and set-property checks.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sb/expr.hpp"
#include "sb/gamespec.hpp"
#include "sb/grid.hpp"

namespace sb::bridge {

enum class Membership {
    Nearest,        // endpoint's containing cell must be occupied (default)
    Neighborhood,   // any cell within Chebyshev radius 1 of it may be occupied
};

struct SolverConfig {
    int max_iter = 30;
    Membership membership = Membership::Nearest;
    int substeps = 16;              // RK4 substeps per grid time step
    std::vector<int> refine;        // per-axis internal refinement; empty = none
    bool parallel = true;           // use the OpenMP kernels when available
};

/// Finite game dynamics for the absorption operator: the field with its
/// player sample (flattened player-side parameters per point) and the
/// adversary sample appended after them.
struct ControlledDynamics {
    const expr::VectorField* field = nullptr;
    std::vector<std::vector<double>> players;    // per point, player-side params
    std::vector<std::vector<double>> adversary;  // per point, v params

    int pair_count() const {
        return static_cast<int>(players.size() * adversary.size());
    }
};

ControlledDynamics make_dynamics(const game::GameProblem& problem);
ControlledDynamics make_dynamics(const game::TransformedProblem& tp);

/// One-step flow destinations, cached per (player, adversary, cell).
/// The field is autonomous and the time step uniform, so the map is
/// slice-independent. dest = -1 marks trajectories leaving the bounds.
class FlowStepCache {
public:
    FlowStepCache(const grid::GridSpec& spec, const ControlledDynamics& dyn,
                  int substeps, bool parallel);

    const std::int32_t* dest(int player, int adversary) const {
        return dests_[static_cast<std::size_t>(player) * adversary_count_ + adversary]
            .data();
    }
    std::int64_t dropped() const { return dropped_; }

private:
    std::size_t adversary_count_ = 0;
    std::vector<std::vector<std::int32_t>> dests_;
    std::int64_t dropped_ = 0;
};

/// Marks every cell whose center satisfies F; all slices, or slice N only.
grid::TimeSlicedGrid build_target_cylinder(const game::RegionSpec& region,
                                           const grid::GridSpec& spec,
                                           bool final_only);

/// Controllability set of the auxiliary system: slice N holds the F-cells,
/// slice i the union over the omega sample of one-step backward-flow images
/// of slice i+1.
grid::TimeSlicedGrid build_controllability_target(const game::AuxiliarySystem& aux,
                                                  const grid::GridSpec& spec,
                                                  int substeps);

/// One application of the discretized program absorption operator.
/// For each adversary point v, a backward recursion over slices:
///   T_v[N] = M[N] & E[N]
///   T_v[i] = (M[i] & E[i]) | { c in E[i] : exists player with the one-step
///            flow from center(c) landing in T_v[i+1] }
/// returning E & intersection over v of T_v. Requires E, M, cache on one spec.
grid::TimeSlicedGrid absorption_step(const grid::TimeSlicedGrid& E,
                                     const grid::TimeSlicedGrid& M,
                                     const ControlledDynamics& dyn,
                                     const FlowStepCache& cache,
                                     Membership membership, bool parallel);

struct IterationResult {
    grid::TimeSlicedGrid W;                    // last iterate
    grid::TimeSlicedGrid W_previous;           // second-to-last iterate
    int iterations = 0;                        // applications of A performed
    std::vector<std::int64_t> sizes;           // occupied cells per iterate
    bool converged = false;                    // fixed point reached bitwise
    std::int64_t dropped = 0;                  // out-of-bounds flow endpoints
};

/// W_0 = full grid, W_k = A(W_{k-1}), until bitwise fixed point or max_iter.
IterationResult programmed_iteration(const grid::TimeSlicedGrid& M,
                                     const ControlledDynamics& dyn,
                                     const FlowStepCache& cache,
                                     const SolverConfig& cfg);

/// Convenience driver: builds the flow cache (optionally on an internally
/// refined grid), runs the iteration, and returns results at the base spec.
struct SolveResult {
    grid::TimeSlicedGrid W;                    // coarsened to base spec
    grid::TimeSlicedGrid M;                    // target at base spec
    IterationResult internal;                  // at the working (refined) spec
    grid::GridSpec working_spec;
};

SolveResult solve_bridge(const ControlledDynamics& dyn,
                         const std::function<grid::TimeSlicedGrid(
                             const grid::GridSpec&)>& build_target,
                         const grid::GridSpec& base_spec,
                         const SolverConfig& cfg);

struct SectionViolation {
    int slice_from = 0;
    std::int64_t cell = 0;
    int slice_to = 0;
    std::int64_t landing_cell = 0;
};

/// Samples occupied cells and piecewise-constant backward omega-controls;
/// flags landings (nearest cell, 1-cell Chebyshev tolerance) outside E.
std::vector<SectionViolation> decreasing_by_sections_check(
    const grid::TimeSlicedGrid& E, const game::AuxiliarySystem& aux,
    int samples_per_slice, std::uint64_t seed, int substeps);

}  // namespace sb::bridge
