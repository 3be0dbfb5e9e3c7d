#pragma once

// Game problem descriptions: sampled control sets, target descriptors,
// the auxiliary system and the transformed "at the moment" game.

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sb/expr.hpp"

namespace sb::game {

/// How a finite control sample was generated.
struct SetDescriptor {
    enum class Kind { Interval, Box, Ball, Explicit };
    Kind kind = Kind::Explicit;

    // Interval
    double lo = 0.0, hi = 0.0;
    int count = 0;                                  // Interval / Ball sample count
    // Box: per-axis intervals and counts
    std::vector<std::array<double, 2>> axes;
    std::vector<int> axis_counts;
    // Ball
    std::vector<double> center;
    double radius = 0.0;
    // Explicit
    std::vector<std::vector<double>> points;

    static SetDescriptor interval(double lo, double hi, int count);
    static SetDescriptor box(std::vector<std::array<double, 2>> axes,
                             std::vector<int> counts);
    static SetDescriptor ball(std::vector<double> center, double radius, int count);
    static SetDescriptor explicit_points(std::vector<std::vector<double>> pts);
};

/// Finite point sample of a compact control set.
struct SampledControlSet {
    int dim = 0;
    std::vector<std::vector<double>> points;
    SetDescriptor descriptor;

    int size() const { return static_cast<int>(points.size()); }
};

/// Deterministic sampling; interval endpoints are always included.
SampledControlSet sample_control_set(const SetDescriptor& descriptor);

/// Point / box / ball predicate over the state space (the terminal set F).
struct RegionSpec {
    enum class Kind { Point, Box, Ball };
    Kind kind = Kind::Point;
    std::vector<double> center;                     // Point / Ball
    double radius = 0.0;                            // Ball
    std::vector<std::array<double, 2>> bounds;      // Box

    bool contains(std::span<const double> x) const;
    int dim() const;
};

/// Auxiliary control system g(x, omega) with terminal set F.
struct AuxiliarySystem {
    expr::VectorField g;          // one group (the omega group)
    std::string omega_group;
    SampledControlSet omega;
    RegionSpec terminal;          // F = M[horizon]

    void validate() const;
};

/// Target set variants for a game problem.
struct TargetSpec {
    enum class Kind { Cylinder, Controllability, ExplicitGrid };
    Kind kind = Kind::Cylinder;
    RegionSpec region;            // Cylinder: F over all slices
    std::string grid_path;        // ExplicitGrid: previously exported grid
};

struct GameProblem {
    expr::VectorField f;          // groups (u, v) in order
    std::string u_group, v_group;
    SampledControlSet P, Q;
    double horizon = 0.0;
    TargetSpec target;

    void validate() const;
};

/// The transformed "at the moment" game: dynamics
/// f*(x, nu, u, omega, v) = nu*f(x,u,v) + (1-nu)*g(x,omega), target {horizon} x F.
/// P_star is the canonical velocity-equivalent sample
/// {(1,u,omega0) : u in P} union {(0,u0,omega) : omega in Omega}.
struct TransformedProblem {
    expr::VectorField f_star;     // groups (nu, u, omega, v) in order
    SampledControlSet P_star;     // dim 1 + p + r
    SampledControlSet Q;
    double horizon = 0.0;
    RegionSpec terminal;          // F; the target is the final-slice cylinder

    int nu_offset() const { return 0; }
    int u_offset() const { return 1; }
    int omega_offset(int p) const { return 1 + p; }
};

/// Builds the transformed problem. Throws std::invalid_argument on
/// state-dimension mismatch between problem and aux.
TransformedProblem build_transformed(const GameProblem& problem,
                                     const AuxiliarySystem& aux);

}  // namespace sb::game
