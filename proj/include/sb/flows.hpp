#pragma once

// Trajectory integration under constant and piecewise-constant controls,
// flow commutation and flow rearrangement checks.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sb/expr.hpp"

namespace sb::flows {

struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, int step)
        : std::runtime_error(what), step(step) {}
    int step;
};

/// Schedule of (duration, control value) pairs for one control group.
struct PiecewiseControl {
    struct Segment {
        double duration = 0.0;            // seconds, >= 0
        std::vector<double> value;        // one group's control vector
    };
    std::vector<Segment> segments;

    double total_duration() const;
    void validate(int group_dim) const;
};

struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;                      // > 0; sample spacing
    bool forward = true;
    std::vector<std::vector<double>> states;   // at t0, t0 +/- dt, ...

    double time_at(std::size_t i) const {
        return forward ? t0 + dt * static_cast<double>(i)
                       : t0 - dt * static_cast<double>(i);
    }
    const std::vector<double>& endpoint() const { return states.back(); }
};

/// S^tau_{F,b}: classical fixed-step RK4 with step tau/substeps.
/// tau = 0 returns x0 exactly; tau < 0 integrates in reverse time.
/// params is the full flattened parameter vector of F.
std::vector<double> flow_const(const expr::VectorField& field,
                               std::span<const double> x0,
                               std::span<const double> params,
                               double tau, int substeps);

/// Composition of flow_const over the schedule's segments in order, sampled
/// on the uniform dt grid. The varying group is ctrl_group; all other groups
/// are held at fixed_params (full flattened vector, varying slots overwritten).
/// The trajectory must stay inside [0, horizon].
Trajectory flow_piecewise(const expr::VectorField& field,
                          std::span<const double> x0,
                          double t_start,
                          const PiecewiseControl& ctrl,
                          const std::string& ctrl_group,
                          std::span<const double> fixed_params,
                          bool forward,
                          double dt, double horizon,
                          int substeps_per_dt);

struct CommutationSample {
    std::vector<double> x;
    std::vector<double> u;      // first player's control for f
    std::vector<double> v;      // adversary control for f
    std::vector<double> omega;  // control for g
    double tau_f = 0.0;
    double tau_g = 0.0;
};

struct CommutationResult {
    double max_discrepancy = 0.0;
    std::size_t argmax = 0;     // index into the sample list
};

/// Max over samples of || F^{tau_f}_{u,v}(G^{tau_g}_w(x)) -
/// G^{tau_g}_w(F^{tau_f}_{u,v}(x)) ||_2. The f field carries groups (u, v)
/// in that order; the g field carries one group (omega).
CommutationResult check_flow_commutation(const expr::VectorField& f,
                                         const expr::VectorField& g,
                                         std::span<const CommutationSample> samples,
                                         int substeps);

/// One entry of an interleaved schedule over the f/g flow family.
struct ScheduleEntry {
    bool is_f = true;                // true: f-flow with (u,v); false: g-flow with omega
    double duration = 0.0;
    std::vector<double> u, v;        // used when is_f
    std::vector<double> omega;       // used when !is_f
};

/// Endpoint discrepancy between the interleaved schedule and the regrouped
/// schedule that runs all f entries first (relative order kept), then all
/// g entries.
double check_rearrangement(const expr::VectorField& f,
                           const expr::VectorField& g,
                           std::span<const double> x0,
                           std::span<const ScheduleEntry> schedule,
                           int substeps);

}  // namespace sb::flows
