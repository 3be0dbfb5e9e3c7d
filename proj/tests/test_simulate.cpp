#include "doctest.h"

#include <cmath>

#include "sb/bridge.hpp"
#include "sb/flows.hpp"
#include "sb/simulate.hpp"

using namespace sb;
using namespace sb::sim;

namespace {

game::GameProblem simple_motion() {
    game::GameProblem p;
    expr::FieldSignature sig({"x1"}, {{"u", 1}, {"v", 1}});
    p.f = expr::parse_field({"u + v"}, sig);
    p.u_group = "u";
    p.v_group = "v";
    p.P = game::sample_control_set(game::SetDescriptor::interval(-1.0, 1.0, 9));
    p.Q = game::sample_control_set(game::SetDescriptor::interval(-0.5, 0.5, 5));
    p.horizon = 1.0;
    p.target.kind = game::TargetSpec::Kind::Cylinder;
    p.target.region.kind = game::RegionSpec::Kind::Box;
    p.target.region.bounds = {{-0.2, 0.2}};
    return p;
}

grid::GridSpec spec_1d() {
    grid::GridSpec s;
    s.bounds = {{-2.0, 2.0}};
    s.cells = {201};
    s.time_steps = 50;
    s.horizon = 1.0;
    return s;
}

const std::vector<std::array<double, 2>> kNoBounds{};

}  // namespace

TEST_CASE("partitions validate and measure fineness") {
    const Partition p = Partition::uniform(0.0, 1.0, 4);
    REQUIRE(p.times.size() == 5);
    CHECK(p.times.front() == 0.0);
    CHECK(p.times.back() == 1.0);
    CHECK(p.fineness() == doctest::Approx(0.25));
    CHECK_THROWS(Partition::uniform(0.0, 1.0, 0));
    Partition bad;
    bad.times = {0.0, 0.5, 0.5};
    CHECK_THROWS(bad.validate());
}

TEST_CASE("zero dynamics yield a constant motion") {
    game::GameProblem p = simple_motion();
    expr::FieldSignature sig({"x1"}, {{"u", 1}, {"v", 1}});
    p.f = expr::parse_field({"0 * u"}, sig);
    const Partition part = Partition::uniform(0.0, 1.0, 10);
    const Motion m = step_motion(
        p, [](double, std::span<const double>, std::span<const double>) { return 3; },
        constant_adversary(1), part, part, 0.0, std::vector<double>{0.42}, kNoBounds,
        4);
    CHECK(!m.truncated);
    for (const auto& x : m.states) CHECK(x[0] == 0.42);
}

TEST_CASE("a cancelling contrstrategy freezes the state") {
    const game::GameProblem p = simple_motion();
    // P contains the exact negative of every Q point
    const Contrstrategy cancel = [&p](double, std::span<const double>,
                                      std::span<const double> v) {
        for (int i = 0; i < p.P.size(); ++i)
            if (p.P.points[i][0] == -v[0]) return i;
        return 0;
    };
    const Partition part = Partition::uniform(0.0, 1.0, 20);
    for (int vi = 0; vi < p.Q.size(); ++vi) {
        const Motion m = step_motion(p, cancel, constant_adversary(vi), part, part,
                                     0.0, std::vector<double>{0.5}, kNoBounds, 4);
        CHECK(m.endpoint()[0] == doctest::Approx(0.5).epsilon(1e-14));
    }
}

TEST_CASE("step motion agrees with the piecewise flow for constant controls") {
    const game::GameProblem p = simple_motion();
    const Partition part = Partition::uniform(0.0, 1.0, 8);
    const Motion m = step_motion(
        p, [](double, std::span<const double>, std::span<const double>) { return 8; },
        constant_adversary(0), part, part, 0.0, std::vector<double>{-1.0}, kNoBounds,
        8);
    // u = +1, v = -0.5: straight line with slope 0.5
    REQUIRE(m.states.size() == 9);
    for (std::size_t i = 0; i < m.times.size(); ++i)
        CHECK(m.states[i][0] == doctest::Approx(-1.0 + 0.5 * m.times[i]).epsilon(1e-12));
}

TEST_CASE("motions truncate on leaving the bounds") {
    const game::GameProblem p = simple_motion();
    const std::vector<std::array<double, 2>> bounds{{-2.0, 2.0}};
    const Partition part = Partition::uniform(0.0, 1.0, 10);
    const Motion m = step_motion(
        p, [](double, std::span<const double>, std::span<const double>) { return 8; },
        constant_adversary(4), part, part, 0.0, std::vector<double>{1.9}, bounds, 4);
    CHECK(m.truncated);
    CHECK(m.exit_reason == "left bounds");
    CHECK(m.states.size() < part.times.size());
}

TEST_CASE("extremal shift drives toward the band and picks extreme controls") {
    const game::GameProblem p = simple_motion();
    const grid::GridSpec spec = spec_1d();
    // the analytic bridge: |x| <= 0.2 + 0.5*(1-t)
    grid::TimeSlicedGrid W(spec);
    std::vector<double> c(1);
    for (int s = 0; s <= spec.time_steps; ++s) {
        const double r = 0.2 + 0.5 * (1.0 - spec.time_of(s));
        for (std::int64_t cell = 0; cell < spec.spatial_cells(); ++cell) {
            spec.center(cell, c);
            if (std::fabs(c[0]) <= r) W.set(s, cell);
        }
    }
    const ExtremalShift shift(W, p);
    // from above the band the aim point is below: most negative u wins
    CHECK(shift(0.0, std::vector<double>{1.5}, std::vector<double>{0.0}) == 0);
    CHECK(p.P.points[0][0] == -1.0);
    // from below the band: most positive u
    CHECK(shift(0.0, std::vector<double>{-1.5}, std::vector<double>{0.0}) ==
          p.P.size() - 1);

    CHECK_THROWS_AS(ExtremalShift(grid::TimeSlicedGrid(spec), p), StrategyError);
}

TEST_CASE("extremal shift trials reach the target from inside the bridge") {
    const game::GameProblem p = simple_motion();
    const grid::GridSpec spec = spec_1d();
    grid::TimeSlicedGrid W(spec);
    std::vector<double> c(1);
    for (int s = 0; s <= spec.time_steps; ++s) {
        const double r = 0.2 + 0.5 * (1.0 - spec.time_of(s));
        for (std::int64_t cell = 0; cell < spec.spatial_cells(); ++cell) {
            spec.center(cell, c);
            if (std::fabs(c[0]) <= r) W.set(s, cell);
        }
    }
    const grid::TimeSlicedGrid M =
        bridge::build_target_cylinder(p.target.region, spec, false);
    const auto starts = sample_starts(W, 1, true, 20, 99);
    REQUIRE(!starts.empty());
    std::vector<AdversaryStrategy> adversaries;
    adversaries.push_back(constant_adversary(0));
    adversaries.push_back(constant_adversary(p.Q.size() - 1));
    adversaries.push_back(lookahead_adversary(p, M));
    const std::vector<double> fineness{0.02};
    const TrialReport r =
        run_trials(p, W, M, starts, adversaries, fineness, 0.05, 8);
    CHECK(!r.vacuous);
    CHECK(r.trials.size() == starts.size() * 3);
    CHECK(r.success_fraction >= 0.95);
}

TEST_CASE("start sampling is deterministic and respects the margin") {
    const grid::GridSpec spec = spec_1d();
    grid::TimeSlicedGrid W(spec);
    for (std::int64_t cell = 80; cell <= 120; ++cell) W.set(0, cell);
    const auto inside = sample_starts(W, 2, true, 15, 7);
    REQUIRE(inside.size() == 15);
    CHECK(sample_starts(W, 2, true, 15, 7) == inside);
    for (const auto& x : inside) {
        const std::int64_t cell = spec.cell_of(x);
        CHECK(cell >= 82);
        CHECK(cell <= 118);
    }
    const auto outside = sample_starts(W, 2, false, 15, 7);
    for (const auto& x : outside) {
        const std::int64_t cell = spec.cell_of(x);
        CHECK((cell < 78 || cell > 122));
    }
}

TEST_CASE("vacuous trial reports are flagged") {
    const game::GameProblem p = simple_motion();
    const grid::GridSpec spec = spec_1d();
    const grid::TimeSlicedGrid W(spec, true);
    const grid::TimeSlicedGrid M =
        bridge::build_target_cylinder(p.target.region, spec, false);
    const TrialReport r = run_trials(p, W, M, {}, {}, std::vector<double>{0.02},
                                     0.05, 4);
    CHECK(r.vacuous);
    CHECK(r.trials.empty());
}
