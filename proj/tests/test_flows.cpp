#include "doctest.h"

#include <cmath>

#include "sb/expr.hpp"
#include "sb/flows.hpp"

using namespace sb;
using namespace sb::flows;

namespace {

expr::VectorField scalar_field(const std::string& rhs) {
    expr::FieldSignature sig({"x1"}, {});
    return expr::parse_field({rhs}, sig);
}

expr::VectorField field_uv(const std::vector<std::string>& rhs,
                           std::vector<std::string> states) {
    expr::FieldSignature sig(std::move(states), {{"u", 1}, {"v", 1}});
    return expr::parse_field(rhs, sig);
}

expr::VectorField field_omega(const std::vector<std::string>& rhs,
                              std::vector<std::string> states) {
    expr::FieldSignature sig(std::move(states), {{"omega", 1}});
    return expr::parse_field(rhs, sig);
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("flow of x' = x reproduces e within 1e-8") {
    const expr::VectorField f = scalar_field("x1");
    const std::vector<double> end = flow_const(f, std::vector<double>{1.0}, {}, 1.0, 64);
    CHECK(std::fabs(end[0] - std::exp(1.0)) < 1e-8);
}

TEST_CASE("tau = 0 returns the start exactly") {
    const expr::VectorField f = scalar_field("x1^2");
    const std::vector<double> end =
        flow_const(f, std::vector<double>{0.37}, {}, 0.0, 8);
    CHECK(end[0] == 0.37);
}

TEST_CASE("semigroup and inverse properties on a nonlinear field") {
    // x' = x^2 from 0.5: closed form 1/(2 - t)
    const expr::VectorField f = scalar_field("x1^2");
    const std::vector<double> x0{0.5};
    const std::vector<double> half = flow_const(f, x0, {}, 0.4, 64);
    const std::vector<double> comp = flow_const(f, half, {}, 0.6, 64);
    const std::vector<double> whole = flow_const(f, x0, {}, 1.0, 128);
    CHECK(std::fabs(comp[0] - 1.0) < 1e-8);
    CHECK(std::fabs(whole[0] - 1.0) < 1e-8);
    const std::vector<double> back = flow_const(f, whole, {}, -1.0, 128);
    CHECK(std::fabs(back[0] - 0.5) < 1e-8);
}

TEST_CASE("divergence is detected") {
    const expr::VectorField f = scalar_field("x1^2");
    CHECK_THROWS_AS(flow_const(f, std::vector<double>{1.0}, {}, 5.0, 256),
                    DivergenceError);
}

TEST_CASE("double integrator endpoint is exact under RK4") {
    // (y, z)' = (z, u), u = 1 from rest over 1s: endpoint (0.5, 1)
    const expr::VectorField f = field_uv({"z", "u + v"}, {"y", "z"});
    const std::vector<double> end =
        flow_const(f, std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 0.0},
                   1.0, 4);
    CHECK(end[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(end[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("piecewise flow equals const flow when the schedule is one segment") {
    const expr::VectorField f = field_uv({"z", "u + v"}, {"y", "z"});
    PiecewiseControl ctrl;
    ctrl.segments.push_back({1.0, {0.75}});
    const std::vector<double> fixed{0.0, -0.25};
    const Trajectory traj =
        flow_piecewise(f, std::vector<double>{0.1, 0.2}, 0.0, ctrl, "u", fixed,
                       true, 0.25, 1.0, 8);
    std::vector<double> params{0.75, -0.25};
    const std::vector<double> direct =
        flow_const(f, std::vector<double>{0.1, 0.2}, params, 1.0, 32);
    CHECK(traj.states.size() == 5);
    CHECK(traj.endpoint()[0] == direct[0]);
    CHECK(traj.endpoint()[1] == direct[1]);
}

TEST_CASE("opposing segments cancel for driftless dynamics") {
    const expr::VectorField f = field_uv({"u + v"}, {"x1"});
    PiecewiseControl ctrl;
    ctrl.segments.push_back({0.5, {1.0}});
    ctrl.segments.push_back({0.5, {-1.0}});
    const Trajectory traj =
        flow_piecewise(f, std::vector<double>{0.3}, 0.0, ctrl, "u",
                       std::vector<double>{0.0, 0.0}, true, 0.5, 1.0, 8);
    CHECK(traj.endpoint()[0] == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("piecewise schedule must stay inside the horizon") {
    const expr::VectorField f = field_uv({"u + v"}, {"x1"});
    PiecewiseControl ctrl;
    ctrl.segments.push_back({2.0, {1.0}});
    CHECK_THROWS_AS(flow_piecewise(f, std::vector<double>{0.0}, 0.5, ctrl, "u",
                                   std::vector<double>{0.0, 0.0}, true, 0.5, 1.0, 8),
                    std::domain_error);
}

TEST_CASE("sinking-island pair commutes, rotation/translation does not") {
    const expr::VectorField f = field_uv({"z", "u + v"}, {"y", "z"});
    const expr::VectorField g = field_omega({"omega", "0"}, {"y", "z"});
    const expr::VectorField rot = field_uv({"-x2", "x1"}, {"x1", "x2"});
    const expr::VectorField trans = field_omega({"omega", "0"}, {"x1", "x2"});

    std::vector<CommutationSample> samples;
    for (int k = 0; k < 25; ++k) {
        CommutationSample s;
        const double a = 0.1 * k - 1.2;
        s.x = {a, -0.5 + 0.07 * k};
        s.u = {-2.0 + 0.16 * k};
        s.v = {0.5 - 0.04 * k};
        s.omega = {1.0 - 0.08 * k};
        s.tau_f = 0.04 * (k + 1);
        s.tau_g = 1.0 - 0.03 * k;
        samples.push_back(std::move(s));
    }
    CHECK(check_flow_commutation(f, g, samples, 16).max_discrepancy < 1e-9);

    // rotation by tau then translation vs the reverse order: discrepancy
    // |omega*tau_g| * 2*sin(tau_f/2) at the endpoint, far above 1e-3
    const CommutationResult r = check_flow_commutation(rot, trans, samples, 32);
    CHECK(r.max_discrepancy > 1e-3);
    const CommutationSample& worst = samples[r.argmax];
    const double predicted = std::fabs(worst.omega[0] * worst.tau_g) * 2.0 *
                             std::fabs(std::sin(worst.tau_f / 2.0));
    CHECK(r.max_discrepancy == doctest::Approx(predicted).epsilon(1e-4));
}

TEST_CASE("rearrangement of a commuting family is endpoint-invariant") {
    const expr::VectorField f = field_uv({"z", "u + v"}, {"y", "z"});
    const expr::VectorField g = field_omega({"omega", "0"}, {"y", "z"});
    std::vector<ScheduleEntry> schedule;
    schedule.push_back({false, 0.2, {}, {}, {0.7}});
    schedule.push_back({true, 0.3, {1.5}, {-0.25}, {}});
    schedule.push_back({false, 0.1, {}, {}, {-1.0}});
    schedule.push_back({true, 0.4, {-0.5}, {0.5}, {}});
    CHECK(check_rearrangement(f, g, std::vector<double>{0.2, -0.1}, schedule, 32) <
          1e-9);

    const expr::VectorField rot = field_uv({"-x2", "x1"}, {"x1", "x2"});
    const expr::VectorField trans = field_omega({"omega", "0"}, {"x1", "x2"});
    CHECK(check_rearrangement(rot, trans, std::vector<double>{1.0, 0.0}, schedule,
                              32) > 1e-3);
}

TEST_CASE("trajectory time bookkeeping") {
    Trajectory t;
    t.t0 = 1.0;
    t.dt = 0.25;
    t.forward = false;
    t.states = {{0.0}, {0.1}, {0.2}};
    CHECK(t.time_at(0) == doctest::Approx(1.0));
    CHECK(t.time_at(2) == doctest::Approx(0.5));
    CHECK(t.endpoint()[0] == doctest::Approx(0.2));
}
