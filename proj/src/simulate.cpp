#include "sb/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <random>

#include "sb/flows.hpp"

namespace sb::sim {

using grid::TimeSlicedGrid;

Partition Partition::uniform(double t0, double t1, int steps) {
    if (steps < 1) throw std::invalid_argument("partition: steps must be >= 1");
    Partition p;
    p.times.reserve(steps + 1);
    for (int i = 0; i <= steps; ++i)
        p.times.push_back(t0 + (t1 - t0) * static_cast<double>(i) /
                                   static_cast<double>(steps));
    p.times.front() = t0;
    p.times.back() = t1;
    return p;
}

void Partition::validate() const {
    if (times.size() < 2) throw std::invalid_argument("partition: need >= 2 times");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("partition: times must strictly increase");
}

double Partition::fineness() const {
    double best = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i)
        best = std::max(best, times[i] - times[i - 1]);
    return best;
}

const std::vector<double>& Motion::state_at(double t) const {
    std::size_t best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double d = std::fabs(times[i] - t);
        if (d < dist) {
            dist = d;
            best = i;
        }
    }
    return states[best];
}

Motion step_motion(const game::GameProblem& problem, const Contrstrategy& U,
                   const AdversaryStrategy& V, const Partition& player_partition,
                   const Partition& adversary_partition, double t_start,
                   std::span<const double> x0,
                   std::span<const std::array<double, 2>> bounds,
                   int substeps_per_interval) {
    player_partition.validate();
    adversary_partition.validate();

    // joint refinement of the two partitions
    std::vector<double> joint = player_partition.times;
    joint.insert(joint.end(), adversary_partition.times.begin(),
                 adversary_partition.times.end());
    std::sort(joint.begin(), joint.end());
    joint.erase(std::unique(joint.begin(), joint.end(),
                            [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
                joint.end());

    Motion motion;
    motion.times.push_back(t_start);
    motion.states.push_back(std::vector<double>(x0.begin(), x0.end()));

    const auto& sig = problem.f.signature();
    const int p_dim = problem.P.dim;
    std::vector<double> params(sig.param_dim());
    std::vector<double> x(x0.begin(), x0.end());

    auto in_bounds = [&](std::span<const double> state) {
        for (std::size_t a = 0; a < bounds.size(); ++a)
            if (state[a] < bounds[a][0] || state[a] > bounds[a][1]) return false;
        return true;
    };
    auto is_point = [](double t, const std::vector<double>& pts) {
        for (double p : pts)
            if (std::fabs(p - t) < 1e-12) return true;
        return false;
    };

    int v_index = V(adversary_partition.times.front(), x);
    int u_index = U(player_partition.times.front(), x, problem.Q.points[v_index]);

    for (std::size_t k = 0; k + 1 < joint.size(); ++k) {
        const double a = joint[k];
        const double b = joint[k + 1];
        // v refreshes first so a coincident player point reads the new value
        if (is_point(a, adversary_partition.times)) v_index = V(a, x);
        if (is_point(a, player_partition.times))
            u_index = U(a, x, problem.Q.points[v_index]);

        std::copy(problem.P.points[u_index].begin(), problem.P.points[u_index].end(),
                  params.begin());
        std::copy(problem.Q.points[v_index].begin(), problem.Q.points[v_index].end(),
                  params.begin() + p_dim);
        try {
            x = flows::flow_const(problem.f, x, params, b - a, substeps_per_interval);
        } catch (const flows::DivergenceError&) {
            motion.truncated = true;
            motion.exit_reason = "diverged";
            return motion;
        }
        motion.times.push_back(b);
        motion.states.push_back(x);
        if (!bounds.empty() && !in_bounds(x)) {
            motion.truncated = true;
            motion.exit_reason = "left bounds";
            return motion;
        }
    }
    return motion;
}

ExtremalShift::ExtremalShift(const TimeSlicedGrid& bridge,
                             const game::GameProblem& problem)
    : bridge_(bridge), problem_(problem) {
    if (bridge.count() == 0)
        throw StrategyError("extremal shift: bridge is empty");
}

std::vector<double> ExtremalShift::aim_point(double t,
                                             std::span<const double> x) const {
    const grid::GridSpec& spec = bridge_.spec();
    const double dt = spec.dt();
    int slice = static_cast<int>(std::ceil(t / dt - 1e-9));
    slice = std::clamp(slice, 0, spec.time_steps);
    // aim at the next slice when the current one is exactly at t
    if (std::fabs(spec.time_of(slice) - t) < 1e-9 && slice < spec.time_steps)
        ++slice;
    for (int s = slice; s <= spec.time_steps; ++s) {
        const std::vector<std::int64_t> occupied = bridge_.occupied_in_slice(s);
        if (occupied.empty()) continue;
        double best = std::numeric_limits<double>::infinity();
        std::int64_t best_cell = occupied.front();
        std::vector<double> center(spec.dim());
        for (std::int64_t c : occupied) {
            spec.center(c, center);
            double d = 0.0;
            for (int a = 0; a < spec.dim(); ++a) {
                const double diff = center[a] - x[a];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                best_cell = c;
            }
        }
        return spec.center(best_cell);
    }
    throw StrategyError("extremal shift: bridge empty at and after t");
}

int ExtremalShift::operator()(double t, std::span<const double> x,
                              std::span<const double> v) const {
    const std::vector<double> w = aim_point(t, x);
    const auto& sig = problem_.f.signature();
    std::vector<double> params(sig.param_dim());
    std::copy(v.begin(), v.end(), params.begin() + problem_.P.dim);
    std::vector<double> vel(problem_.f.state_dim());
    double best = std::numeric_limits<double>::infinity();
    int best_index = 0;
    for (int pi = 0; pi < problem_.P.size(); ++pi) {
        std::copy(problem_.P.points[pi].begin(), problem_.P.points[pi].end(),
                  params.begin());
        problem_.f.eval_into(x, params, vel);
        double obj = 0.0;
        for (int a = 0; a < problem_.f.state_dim(); ++a)
            obj += (x[a] - w[a]) * vel[a];
        if (obj < best) {
            best = obj;
            best_index = pi;
        }
    }
    return best_index;
}

AdversaryStrategy constant_adversary(int v_index) {
    return [v_index](double, std::span<const double>) { return v_index; };
}

AdversaryStrategy lookahead_adversary(const game::GameProblem& problem,
                                      const TimeSlicedGrid& target) {
    // shared aim machinery: nearest occupied target cell at the next slice
    auto aim = std::make_shared<ExtremalShift>(target, problem);
    const game::GameProblem* prob = &problem;
    return [aim, prob](double t, std::span<const double> x) {
        std::vector<double> w;
        try {
            w = aim->aim_point(t, x);
        } catch (const StrategyError&) {
            return 0;
        }
        const auto& sig = prob->f.signature();
        std::vector<double> params(sig.param_dim());
        std::vector<double> vel(prob->f.state_dim());
        double best_outer = -std::numeric_limits<double>::infinity();
        int best_v = 0;
        for (int ai = 0; ai < prob->Q.size(); ++ai) {
            std::copy(prob->Q.points[ai].begin(), prob->Q.points[ai].end(),
                      params.begin() + prob->P.dim);
            double inner = std::numeric_limits<double>::infinity();
            for (int pi = 0; pi < prob->P.size(); ++pi) {
                std::copy(prob->P.points[pi].begin(), prob->P.points[pi].end(),
                          params.begin());
                prob->f.eval_into(x, params, vel);
                double obj = 0.0;
                for (int a = 0; a < prob->f.state_dim(); ++a)
                    obj += (x[a] - w[a]) * vel[a];
                inner = std::min(inner, obj);
            }
            if (inner > best_outer) {
                best_outer = inner;
                best_v = ai;
            }
        }
        return best_v;
    };
}

std::vector<std::vector<double>> sample_starts(const TimeSlicedGrid& bridge,
                                               int margin, bool inside, int count,
                                               std::uint64_t seed) {
    const grid::GridSpec& spec = bridge.spec();
    const TimeSlicedGrid shaped =
        inside ? bridge.eroded(margin) : bridge.dilated(margin);
    std::vector<std::int64_t> pool;
    if (inside) {
        pool = shaped.occupied_in_slice(0);
    } else {
        const std::int64_t cells = spec.spatial_cells();
        for (std::int64_t c = 0; c < cells; ++c)
            if (!shaped.test(0, c)) pool.push_back(c);
    }
    std::vector<std::vector<double>> out;
    if (pool.empty()) return out;
    std::mt19937_64 rng(seed);
    for (int k = 0; k < count; ++k)
        out.push_back(spec.center(pool[rng() % pool.size()]));
    return out;
}

TrialReport run_trials(const game::GameProblem& problem,
                       const TimeSlicedGrid& bridge, const TimeSlicedGrid& target,
                       std::span<const std::vector<double>> starts,
                       std::span<const AdversaryStrategy> adversaries,
                       std::span<const double> fineness_list, double eps,
                       int substeps_per_interval) {
    TrialReport report;
    report.starts.assign(starts.begin(), starts.end());
    if (starts.empty()) {
        report.vacuous = true;
        return report;
    }
    const grid::GridSpec& spec = bridge.spec();
    const ExtremalShift shift(bridge, problem);
    const Contrstrategy U = [&shift](double t, std::span<const double> x,
                                     std::span<const double> v) {
        return shift(t, x, v);
    };

    auto target_distance_at = [&](const Motion& m) {
        // min over grid times of distance to an occupied target cell center
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> center(spec.dim());
        for (int s = 0; s <= spec.time_steps; ++s) {
            const double t = spec.time_of(s);
            if (t < m.times.front() - 1e-9 || t > m.times.back() + 1e-9) continue;
            const std::vector<double>& x = m.state_at(t);
            for (std::int64_t c : target.occupied_in_slice(s)) {
                spec.center(c, center);
                double d = 0.0;
                for (int a = 0; a < spec.dim(); ++a) {
                    const double diff = center[a] - x[a];
                    d += diff * diff;
                }
                best = std::min(best, std::sqrt(d));
            }
        }
        return best;
    };

    int successes = 0;
    for (std::size_t si = 0; si < starts.size(); ++si) {
        for (std::size_t ai = 0; ai < adversaries.size(); ++ai) {
            for (double h : fineness_list) {
                const int steps =
                    std::max(1, static_cast<int>(std::lround(problem.horizon / h)));
                const Partition part = Partition::uniform(0.0, problem.horizon, steps);
                const Motion m =
                    step_motion(problem, U, adversaries[ai], part, part, 0.0,
                                starts[si], spec.bounds, substeps_per_interval);
                Trial trial;
                trial.start_index = static_cast<int>(si);
                trial.adversary_index = static_cast<int>(ai);
                trial.fineness = h;
                trial.min_target_distance = target_distance_at(m);
                trial.success = trial.min_target_distance <= eps;
                successes += trial.success ? 1 : 0;
                report.trials.push_back(trial);
            }
        }
    }
    report.success_fraction =
        static_cast<double>(successes) / static_cast<double>(report.trials.size());
    return report;
}

void save_csv(const TrialReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "start_index,adversary_index,fineness,success,min_target_distance\n";
    os.precision(17);
    for (const Trial& t : report.trials)
        os << t.start_index << ',' << t.adversary_index << ',' << t.fineness << ','
           << (t.success ? 1 : 0) << ',' << t.min_target_distance << '\n';
}

}  // namespace sb::sim
