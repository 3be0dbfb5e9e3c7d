#include "doctest.h"

#include <cmath>

#include "sb/gamespec.hpp"
#include "sb/isaacs.hpp"

using namespace sb;
using namespace sb::isaacs;

namespace {

game::SampledControlSet pm_one() {
    return game::sample_control_set(
        game::SetDescriptor::explicit_points({{-1.0}, {1.0}}));
}

}  // namespace

TEST_CASE("direction samples start with the coordinate axes and are unit") {
    const auto dirs = direction_samples(2, 12);
    REQUIRE(dirs.size() == 12);
    CHECK(dirs[0] == std::vector<double>{1.0, 0.0});
    CHECK(dirs[1] == std::vector<double>{-1.0, 0.0});
    CHECK(dirs[2] == std::vector<double>{0.0, 1.0});
    CHECK(dirs[3] == std::vector<double>{0.0, -1.0});
    for (const auto& s : dirs) {
        CHECK(std::hypot(s[0], s[1]) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // deterministic
    CHECK(direction_samples(2, 12) == dirs);
}

TEST_CASE("state samples lie inside the box and are deterministic") {
    const std::vector<std::array<double, 2>> bounds{{-2.0, 2.0}, {0.0, 1.0}};
    const auto xs = state_samples(bounds, 50);
    REQUIRE(xs.size() == 50);
    for (const auto& x : xs) {
        CHECK(x[0] >= -2.0);
        CHECK(x[0] <= 2.0);
        CHECK(x[1] >= 0.0);
        CHECK(x[1] <= 1.0);
    }
    CHECK(state_samples(bounds, 50) == xs);
}

TEST_CASE("separated dynamics have zero gap") {
    expr::FieldSignature sig({"x1"}, {{"u", 1}, {"v", 1}});
    expr::VectorField f = expr::parse_field({"u + v"}, sig);
    const auto P = game::sample_control_set(game::SetDescriptor::interval(-1, 1, 9));
    const auto Q =
        game::sample_control_set(game::SetDescriptor::interval(-0.5, 0.5, 5));
    const auto xs = state_samples(std::vector<std::array<double, 2>>{{-2.0, 2.0}}, 25);
    const auto ss = direction_samples(1, 2);
    const IsaacsReport r = isaacs_gap(f, P, Q, xs, ss);
    CHECK(r.max_gap == 0.0);
    CHECK(r.samples.size() == 50);
}

TEST_CASE("f = u*v has gap exactly 2 over {-1,1} x {-1,1}") {
    expr::FieldSignature sig({"x1"}, {{"u", 1}, {"v", 1}});
    expr::VectorField f = expr::parse_field({"u * v"}, sig);
    const auto P = pm_one();
    const auto Q = pm_one();
    const std::vector<std::vector<double>> xs{{0.0}};
    const std::vector<std::vector<double>> ss{{1.0}};
    const IsaacsReport r = isaacs_gap(f, P, Q, xs, ss);
    REQUIRE(r.samples.size() == 1);
    CHECK(r.samples[0].minmax == 1.0);
    CHECK(r.samples[0].maxmin == -1.0);
    CHECK(r.max_gap == 2.0);
    // s = -1 flips nothing by symmetry of the value set
    const IsaacsReport flipped =
        isaacs_gap(f, P, Q, xs, std::vector<std::vector<double>>{{-1.0}});
    CHECK(flipped.max_gap == 2.0);
}

TEST_CASE("weak duality holds on an arbitrary coupled field") {
    expr::FieldSignature sig({"x1", "x2"}, {{"u", 1}, {"v", 1}});
    expr::VectorField f =
        expr::parse_field({"u*v + x1*u - v", "u - v*v + x2"}, sig);
    const auto P = game::sample_control_set(game::SetDescriptor::interval(-1, 1, 5));
    const auto Q = game::sample_control_set(game::SetDescriptor::interval(-1, 1, 4));
    const auto xs = state_samples(
        std::vector<std::array<double, 2>>{{-1.0, 1.0}, {-1.0, 1.0}}, 20);
    const auto ss = direction_samples(2, 6);
    const IsaacsReport r = isaacs_gap(f, P, Q, xs, ss);
    for (const GapSample& g : r.samples) CHECK(g.minmax >= g.maxmin - 1e-15);
    CHECK(r.max_gap >= 0.0);
}

TEST_CASE("direction scaling does not change the gap (normalization)") {
    expr::FieldSignature sig({"x1"}, {{"u", 1}, {"v", 1}});
    expr::VectorField f = expr::parse_field({"u * v"}, sig);
    const auto P = pm_one();
    const auto Q = pm_one();
    const std::vector<std::vector<double>> xs{{0.0}};
    const IsaacsReport a =
        isaacs_gap(f, P, Q, xs, std::vector<std::vector<double>>{{1.0}});
    const IsaacsReport b =
        isaacs_gap(f, P, Q, xs, std::vector<std::vector<double>>{{7.0}});
    CHECK(a.max_gap == b.max_gap);
}

TEST_CASE("the transformed game inherits a zero gap (finite analogue)") {
    // sinking island: both the original f and the auxiliary g are separated
    game::GameProblem p;
    expr::FieldSignature sig({"y", "z"}, {{"u", 1}, {"v", 1}});
    p.f = expr::parse_field({"z", "u + v"}, sig);
    p.u_group = "u";
    p.v_group = "v";
    p.P = game::sample_control_set(game::SetDescriptor::interval(-2, 2, 9));
    p.Q = game::sample_control_set(game::SetDescriptor::interval(-0.5, 0.5, 5));
    p.horizon = 1.0;
    p.target.kind = game::TargetSpec::Kind::Controllability;

    game::AuxiliarySystem aux;
    expr::FieldSignature gsig({"y", "z"}, {{"omega", 1}});
    aux.g = expr::parse_field({"omega", "0"}, gsig);
    aux.omega_group = "omega";
    aux.omega = game::sample_control_set(game::SetDescriptor::interval(-1, 1, 9));
    aux.terminal.kind = game::RegionSpec::Kind::Point;
    aux.terminal.center = {0.0, 0.0};

    const game::TransformedProblem tp = game::build_transformed(p, aux);
    const auto xs = state_samples(
        std::vector<std::array<double, 2>>{{-1.0, 1.0}, {-2.5, 2.5}}, 50);
    const auto ss = direction_samples(2, 8);
    const IsaacsReport orig = isaacs_gap(p.f, p.P, p.Q, xs, ss);
    const IsaacsReport star = isaacs_gap_transformed(tp, xs, ss);
    CHECK(orig.max_gap <= 1e-12);
    CHECK(star.max_gap <= 1e-12);
    // every transformed sample records which branch attains the min
    for (const GapSample& g : star.samples) CHECK((g.branch == 0 || g.branch == 1));
}
