#include "sb/bridge.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <random>

#include "sb/flows.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sb::bridge {

using grid::GridSpec;
using grid::TimeSlicedGrid;

ControlledDynamics make_dynamics(const game::GameProblem& problem) {
    problem.validate();
    ControlledDynamics dyn;
    dyn.field = &problem.f;
    dyn.players = problem.P.points;
    dyn.adversary = problem.Q.points;
    return dyn;
}

ControlledDynamics make_dynamics(const game::TransformedProblem& tp) {
    ControlledDynamics dyn;
    dyn.field = &tp.f_star;
    dyn.players = tp.P_star.points;
    dyn.adversary = tp.Q.points;
    return dyn;
}

FlowStepCache::FlowStepCache(const GridSpec& spec, const ControlledDynamics& dyn,
                             int substeps, bool parallel) {
    spec.validate();
    if (substeps < 1) throw std::invalid_argument("flow cache: substeps must be >= 1");
    const std::int64_t cells = spec.spatial_cells();
    if (cells > (std::int64_t{1} << 31) - 2)
        throw std::invalid_argument("flow cache: grid too large for 32-bit cell ids");
    adversary_count_ = dyn.adversary.size();
    dests_.resize(dyn.players.size() * dyn.adversary.size());
    const double dt = spec.dt();
    std::atomic<std::int64_t> dropped{0};

    for (std::size_t pi = 0; pi < dyn.players.size(); ++pi) {
        for (std::size_t ai = 0; ai < dyn.adversary.size(); ++ai) {
            std::vector<double> params = dyn.players[pi];
            params.insert(params.end(), dyn.adversary[ai].begin(),
                          dyn.adversary[ai].end());
            std::vector<std::int32_t>& dest = dests_[pi * adversary_count_ + ai];
            dest.assign(static_cast<std::size_t>(cells), -1);
            std::int64_t local_dropped = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : local_dropped) \
    if (parallel)
#endif
            for (std::int64_t c = 0; c < cells; ++c) {
                std::vector<double> x(spec.dim());
                spec.center(c, x);
                std::int64_t landing = -1;
                try {
                    const std::vector<double> y =
                        flows::flow_const(*dyn.field, x, params, dt, substeps);
                    landing = spec.cell_of(y);
                } catch (const flows::DivergenceError&) {
                    landing = -1;
                }
                if (landing < 0) ++local_dropped;
                dest[static_cast<std::size_t>(c)] =
                    static_cast<std::int32_t>(landing);
            }
            dropped += local_dropped;
        }
    }
    dropped_ = dropped.load();
}

TimeSlicedGrid build_target_cylinder(const game::RegionSpec& region,
                                     const GridSpec& spec, bool final_only) {
    TimeSlicedGrid out(spec);
    const std::int64_t cells = spec.spatial_cells();
    std::vector<double> x(spec.dim());
    std::vector<std::int64_t> marked;
    for (std::int64_t c = 0; c < cells; ++c) {
        spec.center(c, x);
        if (region.contains(x)) marked.push_back(c);
    }
    const int first = final_only ? spec.time_steps : 0;
    for (int s = first; s <= spec.time_steps; ++s)
        for (std::int64_t c : marked) out.set(s, c);
    return out;
}

TimeSlicedGrid build_controllability_target(const game::AuxiliarySystem& aux,
                                            const GridSpec& spec, int substeps) {
    aux.validate();
    if (aux.g.state_dim() != spec.dim())
        throw std::invalid_argument("controllability target: state_dim mismatch");
    TimeSlicedGrid out(spec);
    const std::int64_t cells = spec.spatial_cells();
    std::vector<double> x(spec.dim());
    for (std::int64_t c = 0; c < cells; ++c) {
        spec.center(c, x);
        if (aux.terminal.contains(x)) out.set(spec.time_steps, c);
    }
    const double dt = spec.dt();
    for (int s = spec.time_steps - 1; s >= 0; --s) {
        const std::vector<std::int64_t> frontier = out.occupied_in_slice(s + 1);
        for (std::int64_t c : frontier) {
            spec.center(c, x);
            for (const auto& omega : aux.omega.points) {
                const std::vector<double> y =
                    flows::flow_const(aux.g, x, omega, -dt, substeps);
                const std::int64_t landing = spec.cell_of(y);
                if (landing >= 0) out.set(s, landing);
            }
        }
    }
    return out;
}

namespace {

inline bool word_bit(const std::uint64_t* words, std::int64_t bit) {
    return (words[bit >> 6] >> (bit & 63)) & 1u;
}

inline void word_set(std::uint64_t* words, std::int64_t bit) {
    words[bit >> 6] |= std::uint64_t{1} << (bit & 63);
}

// Dilate one slice row by Chebyshev radius 1 (for the neighborhood
// membership mode).
std::vector<std::uint64_t> dilate_row(const GridSpec& spec,
                                      const std::vector<std::uint64_t>& row) {
    std::vector<std::uint64_t> out(row.size(), 0);
    const std::int64_t cells = spec.spatial_cells();
    std::vector<int> multi(spec.dim()), lo(spec.dim()), hi(spec.dim()),
        cur(spec.dim());
    for (std::int64_t c = 0; c < cells; ++c) {
        if (!word_bit(row.data(), c)) continue;
        spec.multi(c, multi);
        for (int a = 0; a < spec.dim(); ++a) {
            lo[a] = std::max(0, multi[a] - 1);
            hi[a] = std::min(spec.cells[a] - 1, multi[a] + 1);
            cur[a] = lo[a];
        }
        for (;;) {
            word_set(out.data(), spec.linear(cur));
            int a = spec.dim() - 1;
            while (a >= 0) {
                if (++cur[a] <= hi[a]) break;
                cur[a] = lo[a];
                --a;
            }
            if (a < 0) break;
        }
    }
    return out;
}

}  // namespace

TimeSlicedGrid absorption_step(const TimeSlicedGrid& E, const TimeSlicedGrid& M,
                               const ControlledDynamics& dyn,
                               const FlowStepCache& cache, Membership membership,
                               bool parallel) {
    if (E.spec() != M.spec())
        throw std::invalid_argument("absorption_step: E and M must share a grid spec");
    const GridSpec& spec = E.spec();
    const std::int64_t cells = spec.spatial_cells();
    const std::size_t words = E.words_per_slice();
    const int players = static_cast<int>(dyn.players.size());
    const int N = spec.time_steps;

    TimeSlicedGrid result = E;
    std::vector<std::uint64_t> t_next(words), t_cur(words), t_test(words);

    for (std::size_t ai = 0; ai < dyn.adversary.size(); ++ai) {
        // T_v[N] = M[N] & E[N]
        const std::uint64_t* mN = M.slice_words(N);
        const std::uint64_t* eN = E.slice_words(N);
        for (std::size_t w = 0; w < words; ++w) t_next[w] = mN[w] & eN[w];
        {
            std::uint64_t* rN = result.slice_words(N);
            for (std::size_t w = 0; w < words; ++w) rN[w] &= t_next[w];
        }
        for (int i = N - 1; i >= 0; --i) {
            if (membership == Membership::Neighborhood)
                t_test = dilate_row(spec, t_next);
            const std::vector<std::uint64_t>& target =
                membership == Membership::Neighborhood ? t_test : t_next;
            const std::uint64_t* mi = M.slice_words(i);
            const std::uint64_t* ei = E.slice_words(i);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
            for (std::int64_t w = 0; w < static_cast<std::int64_t>(words); ++w) {
                std::uint64_t bits = mi[w] & ei[w];
                std::uint64_t candidates = ei[w] & ~bits;
                while (candidates) {
                    const int b = std::countr_zero(candidates);
                    candidates &= candidates - 1;
                    const std::int64_t c = (w << 6) + b;
                    if (c >= cells) break;
                    for (int pi = 0; pi < players; ++pi) {
                        const std::int32_t d =
                            cache.dest(pi, static_cast<int>(ai))[c];
                        if (d >= 0 && word_bit(target.data(), d)) {
                            bits |= std::uint64_t{1} << b;
                            break;
                        }
                    }
                }
                t_cur[static_cast<std::size_t>(w)] = bits;
            }
            std::uint64_t* ri = result.slice_words(i);
            for (std::size_t w = 0; w < words; ++w) ri[w] &= t_cur[w];
            std::swap(t_cur, t_next);
        }
    }
    return result;
}

IterationResult programmed_iteration(const TimeSlicedGrid& M,
                                     const ControlledDynamics& dyn,
                                     const FlowStepCache& cache,
                                     const SolverConfig& cfg) {
    if (cfg.max_iter < 1)
        throw std::invalid_argument("programmed_iteration: max_iter must be >= 1");
    IterationResult res;
    res.dropped = cache.dropped();
    TimeSlicedGrid W(M.spec(), /*fill=*/true);
    res.sizes.push_back(W.count());
    for (int k = 0; k < cfg.max_iter; ++k) {
        TimeSlicedGrid next =
            absorption_step(W, M, dyn, cache, cfg.membership, cfg.parallel);
        ++res.iterations;
        res.sizes.push_back(next.count());
        if (next == W) {
            res.W_previous = W;
            res.W = std::move(next);
            res.converged = true;
            return res;
        }
        res.W_previous = std::move(W);
        W = std::move(next);
    }
    res.W = std::move(W);
    res.converged = false;
    return res;
}

SolveResult solve_bridge(const ControlledDynamics& dyn,
                         const std::function<grid::TimeSlicedGrid(
                             const grid::GridSpec&)>& build_target,
                         const GridSpec& base_spec, const SolverConfig& cfg) {
    base_spec.validate();
    SolveResult out;
    std::vector<int> factors(base_spec.dim(), 1);
    if (!cfg.refine.empty()) {
        if (cfg.refine.size() == 1)
            factors.assign(base_spec.dim(), cfg.refine.front());
        else if (static_cast<int>(cfg.refine.size()) == base_spec.dim())
            factors = cfg.refine;
        else
            throw std::invalid_argument("solver refine: one factor or one per axis");
    }
    out.working_spec = base_spec.refined(factors);
    const TimeSlicedGrid target = build_target(out.working_spec);
    FlowStepCache cache(out.working_spec, dyn, cfg.substeps, cfg.parallel);
    out.internal = programmed_iteration(target, dyn, cache, cfg);
    bool refined = out.working_spec != base_spec;
    out.W = refined ? grid::coarsen(out.internal.W, base_spec, factors)
                    : out.internal.W;
    out.M = refined ? grid::coarsen(target, base_spec, factors) : target;
    return out;
}

std::vector<SectionViolation> decreasing_by_sections_check(
    const TimeSlicedGrid& E, const game::AuxiliarySystem& aux,
    int samples_per_slice, std::uint64_t seed, int substeps) {
    aux.validate();
    const GridSpec& spec = E.spec();
    if (aux.g.state_dim() != spec.dim())
        throw std::invalid_argument("sections check: state_dim mismatch");
    std::vector<SectionViolation> violations;
    std::mt19937_64 rng(seed);
    const double dt = spec.dt();
    const int omega_count = aux.omega.size();
    std::vector<double> x(spec.dim());
    std::vector<int> multi(spec.dim());

    for (int s = 1; s <= spec.time_steps; ++s) {
        const std::vector<std::int64_t> occupied = E.occupied_in_slice(s);
        if (occupied.empty()) continue;
        for (int k = 0; k < samples_per_slice; ++k) {
            const std::int64_t cell =
                occupied[rng() % occupied.size()];
            spec.center(cell, x);
            std::vector<double> y = x;
            // piecewise-constant backward omega control, one value per step
            const int steps_back = 1 + static_cast<int>(rng() % s);
            bool left_grid = false;
            int j = s;
            for (int step = 0; step < steps_back; ++step) {
                const auto& omega = aux.omega.points[rng() % omega_count];
                y = flows::flow_const(aux.g, y, omega, -dt, substeps);
                --j;
                if (spec.cell_of(y) < 0) {
                    left_grid = true;  // leaving the bounds is not a violation
                    break;
                }
            }
            if (left_grid) continue;
            const std::int64_t landing = spec.cell_of(y);
            // 1-cell Chebyshev tolerance
            spec.multi(landing, multi);
            bool ok = false;
            std::vector<int> lo(spec.dim()), hi(spec.dim()), cur(spec.dim());
            for (int a = 0; a < spec.dim(); ++a) {
                lo[a] = std::max(0, multi[a] - 1);
                hi[a] = std::min(spec.cells[a] - 1, multi[a] + 1);
                cur[a] = lo[a];
            }
            for (;;) {
                if (E.test(j, spec.linear(cur))) {
                    ok = true;
                    break;
                }
                int a = spec.dim() - 1;
                while (a >= 0) {
                    if (++cur[a] <= hi[a]) break;
                    cur[a] = lo[a];
                    --a;
                }
                if (a < 0) break;
            }
            if (!ok) violations.push_back({s, cell, j, landing});
        }
    }
    return violations;
}

}  // namespace sb::bridge
