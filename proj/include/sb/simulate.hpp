#pragma once

// Krasovskii-Subbotin step-by-step motions, the extremal-shift
// contrstrategy extracted from a computed bridge, and batch trials.

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "sb/gamespec.hpp"
#include "sb/grid.hpp"

namespace sb::sim {

struct Partition {
    std::vector<double> times;   // strictly increasing, first = t_*, last = horizon

    static Partition uniform(double t0, double t1, int steps);
    void validate() const;
    double fineness() const;     // max gap
};

/// First-player feedback (t, x, v) -> index into the P sample.
using Contrstrategy =
    std::function<int(double, std::span<const double>, std::span<const double>)>;

/// Second-player feedback (t, x) -> index into the Q sample, applied
/// piecewise-constantly on the adversary's partition.
using AdversaryStrategy = std::function<int(double, std::span<const double>)>;

struct Motion {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    bool truncated = false;
    std::string exit_reason;     // set when truncated

    const std::vector<double>& endpoint() const { return states.back(); }
    /// State at the sample time closest to t.
    const std::vector<double>& state_at(double t) const;
};

/// Step-by-step motion: u frozen from U at the player's partition points
/// (reading the adversary's current value), v frozen from V at the
/// adversary's partition points; integrated on the joint refinement.
Motion step_motion(const game::GameProblem& problem, const Contrstrategy& U,
                   const AdversaryStrategy& V, const Partition& player_partition,
                   const Partition& adversary_partition, double t_start,
                   std::span<const double> x0,
                   std::span<const std::array<double, 2>> bounds,
                   int substeps_per_interval);

struct StrategyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Extremal shift: aim at the nearest occupied cell of the bridge's next
/// slice and pick the u sample minimizing <x - w, f(x, u, v)>.
/// Ties break by lowest cell / sample index.
class ExtremalShift {
public:
    ExtremalShift(const grid::TimeSlicedGrid& bridge,
                  const game::GameProblem& problem);

    int operator()(double t, std::span<const double> x,
                   std::span<const double> v) const;

    /// Center of the aim cell used at (t, x); throws StrategyError when the
    /// bridge is empty at and after t.
    std::vector<double> aim_point(double t, std::span<const double> x) const;

private:
    const grid::TimeSlicedGrid& bridge_;
    const game::GameProblem& problem_;
};

/// v held at a fixed sample index throughout.
AdversaryStrategy constant_adversary(int v_index);

/// One-step lookahead: picks the v sample maximizing the player's best
/// achievable rate toward the nearest target cell.
AdversaryStrategy lookahead_adversary(const game::GameProblem& problem,
                                      const grid::TimeSlicedGrid& target);

struct Trial {
    int start_index = 0;
    int adversary_index = 0;
    double fineness = 0.0;
    bool success = false;
    double min_target_distance = 0.0;   // over grid times
};

struct TrialReport {
    std::vector<Trial> trials;
    double success_fraction = 0.0;      // over all trials
    bool vacuous = false;               // no starts available
    std::vector<std::vector<double>> starts;
};

/// Deterministic start sample: centers of slice-0 cells inside the bridge
/// eroded by `margin` (inside = true), or outside the bridge dilated by
/// `margin` (inside = false).
std::vector<std::vector<double>> sample_starts(const grid::TimeSlicedGrid& bridge,
                                               int margin, bool inside, int count,
                                               std::uint64_t seed);

/// Extremal-shift trials from the given starts against each adversary at
/// each partition fineness. Success: the motion enters the eps-neighborhood
/// (Euclidean) of an occupied target cell center at some grid time.
TrialReport run_trials(const game::GameProblem& problem,
                       const grid::TimeSlicedGrid& bridge,
                       const grid::TimeSlicedGrid& target,
                       std::span<const std::vector<double>> starts,
                       std::span<const AdversaryStrategy> adversaries,
                       std::span<const double> fineness_list, double eps,
                       int substeps_per_interval);

void save_csv(const TrialReport& report, const std::string& path);

}  // namespace sb::sim
