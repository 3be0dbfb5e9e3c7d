#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "sb/commands.hpp"
#include "sb/grid.hpp"

using namespace sb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string file(const char* name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    os << text;
}

const char* kSimpleMotion = R"({
  "schema_version": 1,
  "dynamics": {"state": ["x1"], "u_dim": 1, "v_dim": 1, "rhs": ["u + v"]},
  "control_sets": {
    "P": {"kind": "interval", "lo": -1.0, "hi": 1.0, "count": 9},
    "Q": {"kind": "interval", "lo": -0.5, "hi": 0.5, "count": 5}
  },
  "horizon": 1.0,
  "auxiliary": {
    "rhs": ["0"],
    "omega_dim": 1,
    "Omega": {"kind": "explicit", "points": [[0.0]]},
    "F": {"kind": "box", "bounds": [[-0.2, 0.2]]}
  },
  "target": {"kind": "cylinder", "region": {"kind": "box", "bounds": [[-0.2, 0.2]]}},
  "grid": {"bounds": [[-2.0, 2.0]], "cells": [101], "time_steps": 25},
  "solver": {"max_iter": 40, "substeps": 4, "refine": [10], "parallel": false}
})";

const char* kRotation = R"({
  "schema_version": 1,
  "dynamics": {"state": ["x1", "x2"], "u_dim": 1, "v_dim": 1, "rhs": ["-x2", "x1"]},
  "control_sets": {
    "P": {"kind": "interval", "lo": -1.0, "hi": 1.0, "count": 3},
    "Q": {"kind": "interval", "lo": -0.1, "hi": 0.1, "count": 3}
  },
  "horizon": 1.0,
  "auxiliary": {
    "rhs": ["omega", "0"],
    "omega_dim": 1,
    "Omega": {"kind": "interval", "lo": -1.0, "hi": 1.0, "count": 3},
    "F": {"kind": "ball", "center": [0.0, 0.0], "radius": 0.5}
  },
  "target": {"kind": "cylinder",
             "region": {"kind": "ball", "center": [0.0, 0.0], "radius": 0.5}},
  "grid": {"bounds": [[-2.0, 2.0], [-2.0, 2.0]], "cells": [21, 21], "time_steps": 5},
  "solver": {"max_iter": 10, "substeps": 4, "parallel": false}
})";

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("solve writes artifacts and is deterministic across runs") {
    TempDir dir("sbtest_solve");
    write_file(dir.file("p.json"), kSimpleMotion);
    CHECK(cmd::cmd_solve(dir.file("p.json"), dir.file("run1")) == cmd::kExitPass);
    CHECK(cmd::cmd_solve(dir.file("p.json"), dir.file("run2")) == cmd::kExitPass);
    for (const char* name : {"W.sbgr", "W.csv", "M.sbgr", "report.json"})
        CHECK(fs::exists(dir.path / "run1" / name));
    CHECK(read_file(dir.file("run1/W.sbgr")) == read_file(dir.file("run2/W.sbgr")));
    CHECK(read_file(dir.file("run1/W.csv")) == read_file(dir.file("run2/W.csv")));

    // round trip through import is bit exact
    const grid::TimeSlicedGrid W = grid::load_binary(dir.file("run1/W.sbgr"));
    grid::save_binary(W, dir.file("W_again.sbgr"));
    CHECK(read_file(dir.file("run1/W.sbgr")) == read_file(dir.file("W_again.sbgr")));
}

TEST_CASE("schema violations exit with the input-error code") {
    TempDir dir("sbtest_schema");
    std::string doc = kSimpleMotion;
    const std::string needle = "\"target\"";
    doc.replace(doc.find(needle), needle.size(), "\"targett\"");
    write_file(dir.file("bad.json"), doc);
    CHECK(cmd::cmd_solve(dir.file("bad.json"), dir.file("out")) ==
          cmd::kExitInputError);
    CHECK(cmd::cmd_solve(dir.file("missing.json"), dir.file("out")) ==
          cmd::kExitInputError);
}

TEST_CASE("transform-compare passes on commuting pairs, code 4 otherwise") {
    TempDir dir("sbtest_compare");
    write_file(dir.file("p.json"), kSimpleMotion);
    CHECK(cmd::cmd_transform_compare(dir.file("p.json"), dir.file("out")) ==
          cmd::kExitPass);
    CHECK(fs::exists(dir.path / "out" / "W_1.sbgr"));
    CHECK(fs::exists(dir.path / "out" / "Wstar_1.sbgr"));

    write_file(dir.file("rot.json"), kRotation);
    CHECK(cmd::cmd_transform_compare(dir.file("rot.json"), dir.file("out2")) ==
          cmd::kExitHypothesisViolation);
    // --force runs the comparison despite the failed pre-check
    CHECK(cmd::cmd_transform_compare(dir.file("rot.json"), dir.file("out3"), true) !=
          cmd::kExitHypothesisViolation);
}

TEST_CASE("checks run and report through exit codes") {
    TempDir dir("sbtest_check");
    write_file(dir.file("p.json"), kSimpleMotion);
    CHECK(cmd::cmd_check(dir.file("p.json"), "commute", "", dir.file("o1")) ==
          cmd::kExitPass);
    CHECK(cmd::cmd_check(dir.file("p.json"), "bracket", "", dir.file("o2")) ==
          cmd::kExitPass);
    CHECK(cmd::cmd_check(dir.file("p.json"), "isaacs", "", dir.file("o3")) ==
          cmd::kExitPass);
    CHECK(cmd::cmd_check(dir.file("p.json"), "nonsense", "", dir.file("o4")) ==
          cmd::kExitInputError);
    // sections needs a grid artifact
    CHECK(cmd::cmd_check(dir.file("p.json"), "sections", "", dir.file("o5")) ==
          cmd::kExitInputError);
    REQUIRE(cmd::cmd_solve(dir.file("p.json"), dir.file("solve")) == cmd::kExitPass);
    CHECK(cmd::cmd_check(dir.file("p.json"), "sections", dir.file("solve/M.sbgr"),
                         dir.file("o6")) == cmd::kExitPass);

    write_file(dir.file("rot.json"), kRotation);
    CHECK(cmd::cmd_check(dir.file("rot.json"), "commute", "", dir.file("o7")) ==
          cmd::kExitCheckFailed);
}

TEST_CASE("simulate validates the artifact against the problem grid") {
    TempDir dir("sbtest_sim");
    write_file(dir.file("p.json"), kSimpleMotion);
    REQUIRE(cmd::cmd_solve(dir.file("p.json"), dir.file("solve")) == cmd::kExitPass);
    CHECK(cmd::cmd_simulate(dir.file("p.json"), dir.file("solve/W.sbgr"),
                            dir.file("sim")) == cmd::kExitPass);
    CHECK(fs::exists(dir.path / "sim" / "trials.csv"));

    // mismatched grid: artifact with a different spec
    grid::GridSpec other;
    other.bounds = {{-2.0, 2.0}};
    other.cells = {11};
    other.time_steps = 25;
    other.horizon = 1.0;
    grid::save_binary(grid::TimeSlicedGrid(other, true), dir.file("other.sbgr"));
    CHECK(cmd::cmd_simulate(dir.file("p.json"), dir.file("other.sbgr"),
                            dir.file("sim2")) == cmd::kExitInputError);

    // empty bridge: vacuous report, still a pass
    grid::GridSpec same;
    same.bounds = {{-2.0, 2.0}};
    same.cells = {101};
    same.time_steps = 25;
    same.horizon = 1.0;
    grid::save_binary(grid::TimeSlicedGrid(same), dir.file("empty.sbgr"));
    CHECK(cmd::cmd_simulate(dir.file("p.json"), dir.file("empty.sbgr"),
                            dir.file("sim3")) == cmd::kExitPass);
}

TEST_CASE("export-plot extracts boundaries and checks the slice range") {
    TempDir dir("sbtest_plot");
    grid::GridSpec spec;
    spec.bounds = {{0.0, 1.0}, {0.0, 1.0}};
    spec.cells = {4, 4};
    spec.time_steps = 1;
    spec.horizon = 1.0;
    grid::TimeSlicedGrid g(spec);
    g.fill_slice(0);   // slice 1 stays empty
    grid::save_binary(g, dir.file("g.sbgr"));

    CHECK(cmd::cmd_export_plot(dir.file("g.sbgr"), {0}, dir.file("full.csv")) ==
          cmd::kExitPass);
    const std::string full = read_file(dir.file("full.csv"));
    // a full slice has exactly the 12 rim cells on its boundary
    CHECK(std::count(full.begin(), full.end(), '\n') == 13);

    CHECK(cmd::cmd_export_plot(dir.file("g.sbgr"), {1}, dir.file("empty.csv")) ==
          cmd::kExitPass);
    const std::string empty = read_file(dir.file("empty.csv"));
    CHECK(std::count(empty.begin(), empty.end(), '\n') == 1);   // header only

    CHECK(cmd::cmd_export_plot(dir.file("g.sbgr"), {7}, dir.file("x.csv")) ==
          cmd::kExitInputError);
    CHECK(cmd::cmd_export_plot(dir.file("nope.sbgr"), {0}, dir.file("y.csv")) ==
          cmd::kExitInputError);
}
