#pragma once

// Min-max / max-min gaps of the Hamiltonian <s, f(x,u,v)> over sampled
// control sets, for the original and transformed dynamics.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sb/expr.hpp"
#include "sb/gamespec.hpp"

namespace sb::isaacs {

struct GapSample {
    std::vector<double> x;
    std::vector<double> s;            // direction (normalized)
    double minmax = 0.0;
    double maxmin = 0.0;
    double gap = 0.0;                 // minmax - maxmin, >= 0 over finite sets
    int argmin_player = 0;            // lowest-index minimizer of the outer min
    int argmax_adversary = 0;         // lowest-index maximizer of the outer max
    int branch = -1;                  // transformed only: 1 = f branch, 0 = g branch
};

struct IsaacsReport {
    std::vector<GapSample> samples;
    double max_gap = 0.0;
};

/// Deterministic direction set: +/- coordinate axes, then a low-discrepancy
/// spread over the unit sphere, `count` directions in total.
std::vector<std::vector<double>> direction_samples(int dim, int count);

/// Deterministic state samples inside a box.
std::vector<std::vector<double>> state_samples(
    std::span<const std::array<double, 2>> bounds, int count);

/// Exact min over P of max over Q of <s, f(x,u,v)>, and max-min, per sample.
/// Ties broken by lowest sample index.
IsaacsReport isaacs_gap(const expr::VectorField& f,
                        const game::SampledControlSet& P,
                        const game::SampledControlSet& Q,
                        std::span<const std::vector<double>> xs,
                        std::span<const std::vector<double>> ss);

/// Same over the transformed dynamics with the canonical P_star sample.
/// Each sample additionally reports which branch attains the outer min
/// (nu = 1: f branch, nu = 0: g branch).
IsaacsReport isaacs_gap_transformed(const game::TransformedProblem& tp,
                                    std::span<const std::vector<double>> xs,
                                    std::span<const std::vector<double>> ss);

void save_csv(const IsaacsReport& report, const std::string& path);

}  // namespace sb::isaacs
