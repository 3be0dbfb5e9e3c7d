#pragma once

// Problem file ingestion: a single JSON document describing the dynamics,
// control sets, grid, solver knobs and optional auxiliary system.
// The schema is strict: unknown keys are rejected by name.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sb/bridge.hpp"
#include "sb/gamespec.hpp"
#include "sb/grid.hpp"

namespace sb::io {

struct SchemaError : std::runtime_error {
    SchemaError(const std::string& what, std::string location)
        : std::runtime_error(what + " (at " + location + ")"),
          location(std::move(location)) {}
    std::string location;   // JSON pointer-ish path, e.g. "/grid/cells"
};

struct IsaacsConfig {
    int state_samples = 20;
    int direction_samples = 8;
    double tolerance = 1e-9;
};

struct SimulateConfig {
    int starts = 10;
    int margin = 1;             // erosion margin for start sampling
    double eps = 0.0;           // 0 = derive from the grid (one cell diagonal)
    std::vector<double> fineness;   // partition finenesses; empty = {dt}
    std::uint64_t seed = 2024;
    int substeps = 8;
    std::vector<std::string> adversaries;   // "lookahead", "constant:K"
};

/// Everything a command needs, parsed and validated.
struct ProblemFile {
    int schema_version = 1;
    game::GameProblem problem;
    std::optional<game::AuxiliarySystem> auxiliary;
    grid::GridSpec grid;
    bridge::SolverConfig solver;
    IsaacsConfig isaacs;
    SimulateConfig simulate;
    double commute_tolerance = 1e-6;
};

/// Parse and validate a problem document. Throws SchemaError on schema
/// violations (unknown keys, wrong types, missing sections) and forwards
/// expr::ParseError for malformed expressions, annotated with the location.
ProblemFile parse_problem(const std::string& text);
ProblemFile load_problem(const std::string& path);

}  // namespace sb::io
