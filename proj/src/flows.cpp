#include "sb/flows.hpp"

#include <cmath>

namespace sb::flows {

namespace {

bool finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

double norm2(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// One RK4 step of size h in place.
void rk4_step(const expr::VectorField& field, std::vector<double>& x,
              std::span<const double> params, double h,
              std::vector<double>& k1, std::vector<double>& k2,
              std::vector<double>& k3, std::vector<double>& k4,
              std::vector<double>& tmp) {
    const std::size_t n = x.size();
    field.eval_into(x, params, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    field.eval_into(tmp, params, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    field.eval_into(tmp, params, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    field.eval_into(tmp, params, k4);
    for (std::size_t i = 0; i < n; ++i)
        x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

double PiecewiseControl::total_duration() const {
    double total = 0.0;
    for (const Segment& s : segments) total += s.duration;
    return total;
}

void PiecewiseControl::validate(int group_dim) const {
    for (const Segment& s : segments) {
        if (s.duration < 0.0)
            throw std::invalid_argument("piecewise control: negative duration");
        if (static_cast<int>(s.value.size()) != group_dim)
            throw std::invalid_argument("piecewise control: value dimension mismatch");
    }
}

std::vector<double> flow_const(const expr::VectorField& field,
                               std::span<const double> x0,
                               std::span<const double> params,
                               double tau, int substeps) {
    if (substeps < 1) throw std::invalid_argument("flow_const: substeps must be >= 1");
    std::vector<double> x(x0.begin(), x0.end());
    if (tau == 0.0) return x;
    const std::size_t n = x.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const double h = tau / static_cast<double>(substeps);
    for (int s = 0; s < substeps; ++s) {
        rk4_step(field, x, params, h, k1, k2, k3, k4, tmp);
        if (!finite(x))
            throw DivergenceError("flow_const: non-finite state", s);
    }
    return x;
}

Trajectory flow_piecewise(const expr::VectorField& field,
                          std::span<const double> x0,
                          double t_start,
                          const PiecewiseControl& ctrl,
                          const std::string& ctrl_group,
                          std::span<const double> fixed_params,
                          bool forward,
                          double dt, double horizon,
                          int substeps_per_dt) {
    const int gdim = field.signature().group_dim(ctrl_group);
    const int goff = field.signature().group_offset(ctrl_group);
    if (gdim < 0)
        throw std::invalid_argument("flow_piecewise: unknown group " + ctrl_group);
    ctrl.validate(gdim);
    if (dt <= 0.0) throw std::invalid_argument("flow_piecewise: dt must be > 0");

    const double total = ctrl.total_duration();
    const double t_end = forward ? t_start + total : t_start - total;
    const double eps = 1e-9 * std::max(1.0, horizon);
    if (t_start < -eps || t_start > horizon + eps || t_end < -eps || t_end > horizon + eps)
        throw std::domain_error("flow_piecewise: schedule leaves [0, horizon]");

    Trajectory traj;
    traj.t0 = t_start;
    traj.dt = dt;
    traj.forward = forward;
    traj.states.push_back(std::vector<double>(x0.begin(), x0.end()));

    std::vector<double> params(fixed_params.begin(), fixed_params.end());
    std::vector<double> x(x0.begin(), x0.end());
    const std::size_t n = x.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

    double elapsed = 0.0;         // progress through the schedule, in [0, total]
    double next_sample = dt;
    int step_index = 0;
    for (const PiecewiseControl::Segment& seg : ctrl.segments) {
        if (seg.duration == 0.0) continue;
        for (int j = 0; j < gdim; ++j) params[goff + j] = seg.value[j];
        double remaining = seg.duration;
        while (remaining > 0.0) {
            // integrate to the nearer of: segment end, next sample point
            double chunk = remaining;
            if (next_sample - elapsed < chunk) chunk = next_sample - elapsed;
            const double h_total = forward ? chunk : -chunk;
            const double h = h_total / static_cast<double>(substeps_per_dt);
            for (int s = 0; s < substeps_per_dt; ++s) {
                rk4_step(field, x, params, h, k1, k2, k3, k4, tmp);
                if (!finite(x))
                    throw DivergenceError("flow_piecewise: non-finite state", step_index);
            }
            ++step_index;
            elapsed += chunk;
            remaining -= chunk;
            if (elapsed >= next_sample - 1e-12 * total) {
                traj.states.push_back(x);
                next_sample += dt;
            }
        }
    }
    // record the endpoint when it does not land on the sample grid
    if (std::fabs((elapsed - (next_sample - dt))) > 1e-12 * std::max(1.0, total))
        traj.states.push_back(x);
    return traj;
}

CommutationResult check_flow_commutation(const expr::VectorField& f,
                                         const expr::VectorField& g,
                                         std::span<const CommutationSample> samples,
                                         int substeps) {
    CommutationResult result;
    std::vector<double> params_f, params_g;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const CommutationSample& s = samples[i];
        params_f.assign(s.u.begin(), s.u.end());
        params_f.insert(params_f.end(), s.v.begin(), s.v.end());
        params_g.assign(s.omega.begin(), s.omega.end());

        const std::vector<double> gx = flow_const(g, s.x, params_g, s.tau_g, substeps);
        const std::vector<double> fg = flow_const(f, gx, params_f, s.tau_f, substeps);
        const std::vector<double> fx = flow_const(f, s.x, params_f, s.tau_f, substeps);
        const std::vector<double> gf = flow_const(g, fx, params_g, s.tau_g, substeps);

        const double d = norm2(fg, gf);
        if (d > result.max_discrepancy) {
            result.max_discrepancy = d;
            result.argmax = i;
        }
    }
    return result;
}

namespace {

std::vector<double> run_schedule(const expr::VectorField& f,
                                 const expr::VectorField& g,
                                 std::span<const double> x0,
                                 std::span<const ScheduleEntry* const> order,
                                 int substeps) {
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> params;
    for (const ScheduleEntry* e : order) {
        if (e->is_f) {
            params.assign(e->u.begin(), e->u.end());
            params.insert(params.end(), e->v.begin(), e->v.end());
            x = flow_const(f, x, params, e->duration, substeps);
        } else {
            params.assign(e->omega.begin(), e->omega.end());
            x = flow_const(g, x, params, e->duration, substeps);
        }
    }
    return x;
}

}  // namespace

double check_rearrangement(const expr::VectorField& f,
                           const expr::VectorField& g,
                           std::span<const double> x0,
                           std::span<const ScheduleEntry> schedule,
                           int substeps) {
    std::vector<const ScheduleEntry*> interleaved, regrouped;
    for (const ScheduleEntry& e : schedule) interleaved.push_back(&e);
    for (const ScheduleEntry& e : schedule)
        if (e.is_f) regrouped.push_back(&e);
    for (const ScheduleEntry& e : schedule)
        if (!e.is_f) regrouped.push_back(&e);

    const std::vector<double> a = run_schedule(f, g, x0, interleaved, substeps);
    const std::vector<double> b = run_schedule(f, g, x0, regrouped, substeps);
    return norm2(a, b);
}

}  // namespace sb::flows
