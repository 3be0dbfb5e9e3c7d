#include "sb/problem_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sb::io {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                ok = true;
                break;
            }
        if (!ok)
            throw SchemaError("unknown key \"" + it.key() + "\"", where);
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError(std::string("missing key \"") + key + "\"", where);
    return *it;
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw SchemaError("expected a number", where);
    return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw SchemaError("expected an integer", where);
    return v.get<int>();
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw SchemaError("expected a string", where);
    return v.get<std::string>();
}

std::vector<double> as_vector(const json& v, const std::string& where) {
    if (!v.is_array()) throw SchemaError("expected an array of numbers", where);
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v[i], where + "/" + std::to_string(i)));
    return out;
}

std::vector<std::array<double, 2>> as_intervals(const json& v,
                                                const std::string& where) {
    if (!v.is_array()) throw SchemaError("expected an array of [lo, hi] pairs", where);
    std::vector<std::array<double, 2>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string here = where + "/" + std::to_string(i);
        if (!v[i].is_array() || v[i].size() != 2)
            throw SchemaError("expected a [lo, hi] pair", here);
        out.push_back({as_number(v[i][0], here), as_number(v[i][1], here)});
    }
    return out;
}

game::SetDescriptor parse_descriptor(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw SchemaError("expected an object", where);
    const std::string kind = as_string(require(obj, "kind", where), where + "/kind");
    if (kind == "interval") {
        reject_unknown(obj, where, {"kind", "lo", "hi", "count"});
        return game::SetDescriptor::interval(
            as_number(require(obj, "lo", where), where + "/lo"),
            as_number(require(obj, "hi", where), where + "/hi"),
            as_int(require(obj, "count", where), where + "/count"));
    }
    if (kind == "box") {
        reject_unknown(obj, where, {"kind", "axes", "counts"});
        const json& counts = require(obj, "counts", where);
        if (!counts.is_array()) throw SchemaError("expected an array", where + "/counts");
        std::vector<int> cs;
        for (std::size_t i = 0; i < counts.size(); ++i)
            cs.push_back(as_int(counts[i], where + "/counts/" + std::to_string(i)));
        return game::SetDescriptor::box(
            as_intervals(require(obj, "axes", where), where + "/axes"), std::move(cs));
    }
    if (kind == "ball") {
        reject_unknown(obj, where, {"kind", "center", "radius", "count"});
        return game::SetDescriptor::ball(
            as_vector(require(obj, "center", where), where + "/center"),
            as_number(require(obj, "radius", where), where + "/radius"),
            as_int(require(obj, "count", where), where + "/count"));
    }
    if (kind == "explicit") {
        reject_unknown(obj, where, {"kind", "points"});
        const json& pts = require(obj, "points", where);
        if (!pts.is_array()) throw SchemaError("expected an array", where + "/points");
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < pts.size(); ++i)
            out.push_back(as_vector(pts[i], where + "/points/" + std::to_string(i)));
        return game::SetDescriptor::explicit_points(std::move(out));
    }
    throw SchemaError("unknown control set kind \"" + kind + "\"", where + "/kind");
}

game::RegionSpec parse_region(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw SchemaError("expected an object", where);
    const std::string kind = as_string(require(obj, "kind", where), where + "/kind");
    game::RegionSpec region;
    if (kind == "point") {
        reject_unknown(obj, where, {"kind", "center"});
        region.kind = game::RegionSpec::Kind::Point;
        region.center = as_vector(require(obj, "center", where), where + "/center");
    } else if (kind == "box") {
        reject_unknown(obj, where, {"kind", "bounds"});
        region.kind = game::RegionSpec::Kind::Box;
        region.bounds = as_intervals(require(obj, "bounds", where), where + "/bounds");
    } else if (kind == "ball") {
        reject_unknown(obj, where, {"kind", "center", "radius"});
        region.kind = game::RegionSpec::Kind::Ball;
        region.center = as_vector(require(obj, "center", where), where + "/center");
        region.radius = as_number(require(obj, "radius", where), where + "/radius");
    } else {
        throw SchemaError("unknown region kind \"" + kind + "\"", where + "/kind");
    }
    return region;
}

std::vector<std::string> as_string_array(const json& v, const std::string& where) {
    if (!v.is_array()) throw SchemaError("expected an array of strings", where);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_string(v[i], where + "/" + std::to_string(i)));
    return out;
}

expr::VectorField parse_rhs(const std::vector<std::string>& sources,
                            const expr::FieldSignature& sig,
                            const std::string& where) {
    try {
        return expr::parse_field(sources, sig);
    } catch (const expr::ParseError& e) {
        throw SchemaError(std::string("bad expression: ") + e.what() +
                              " (offset " + std::to_string(e.position) + ")",
                          where);
    }
}

}  // namespace

ProblemFile parse_problem(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("not valid JSON: ") + e.what(), "/");
    }
    if (!doc.is_object()) throw SchemaError("document must be an object", "/");
    reject_unknown(doc, "/",
                   {"schema_version", "dynamics", "control_sets", "horizon",
                    "auxiliary", "target", "grid", "solver", "isaacs", "simulate",
                    "commute_tolerance"});

    ProblemFile pf;
    pf.schema_version =
        as_int(require(doc, "schema_version", "/"), "/schema_version");
    if (pf.schema_version != 1)
        throw SchemaError("unsupported schema_version " +
                              std::to_string(pf.schema_version),
                          "/schema_version");

    // dynamics
    const json& dyn = require(doc, "dynamics", "/");
    if (!dyn.is_object()) throw SchemaError("expected an object", "/dynamics");
    reject_unknown(dyn, "/dynamics", {"state", "u_dim", "v_dim", "rhs"});
    const std::vector<std::string> state_names =
        as_string_array(require(dyn, "state", "/dynamics"), "/dynamics/state");
    const int u_dim = as_int(require(dyn, "u_dim", "/dynamics"), "/dynamics/u_dim");
    const int v_dim = as_int(require(dyn, "v_dim", "/dynamics"), "/dynamics/v_dim");
    if (u_dim < 1 || v_dim < 1)
        throw SchemaError("control dimensions must be >= 1", "/dynamics");
    const std::vector<std::string> rhs =
        as_string_array(require(dyn, "rhs", "/dynamics"), "/dynamics/rhs");
    if (rhs.size() != state_names.size())
        throw SchemaError("rhs must have one expression per state component",
                          "/dynamics/rhs");
    expr::FieldSignature sig(state_names, {{"u", u_dim}, {"v", v_dim}});
    pf.problem.f = parse_rhs(rhs, sig, "/dynamics/rhs");
    pf.problem.u_group = "u";
    pf.problem.v_group = "v";

    // control sets
    const json& sets = require(doc, "control_sets", "/");
    if (!sets.is_object()) throw SchemaError("expected an object", "/control_sets");
    reject_unknown(sets, "/control_sets", {"P", "Q"});
    pf.problem.P =
        game::sample_control_set(parse_descriptor(require(sets, "P", "/control_sets"),
                                                  "/control_sets/P"));
    pf.problem.Q =
        game::sample_control_set(parse_descriptor(require(sets, "Q", "/control_sets"),
                                                  "/control_sets/Q"));
    if (pf.problem.P.dim != u_dim)
        throw SchemaError("P dimension does not match u_dim", "/control_sets/P");
    if (pf.problem.Q.dim != v_dim)
        throw SchemaError("Q dimension does not match v_dim", "/control_sets/Q");

    pf.problem.horizon = as_number(require(doc, "horizon", "/"), "/horizon");
    if (!(pf.problem.horizon > 0.0))
        throw SchemaError("horizon must be positive", "/horizon");

    // auxiliary (optional)
    if (doc.contains("auxiliary")) {
        const json& aux = doc["auxiliary"];
        if (!aux.is_object()) throw SchemaError("expected an object", "/auxiliary");
        reject_unknown(aux, "/auxiliary", {"rhs", "omega_dim", "Omega", "F"});
        const int omega_dim =
            as_int(require(aux, "omega_dim", "/auxiliary"), "/auxiliary/omega_dim");
        if (omega_dim < 1)
            throw SchemaError("omega_dim must be >= 1", "/auxiliary/omega_dim");
        const std::vector<std::string> grhs =
            as_string_array(require(aux, "rhs", "/auxiliary"), "/auxiliary/rhs");
        if (grhs.size() != state_names.size())
            throw SchemaError("rhs must have one expression per state component",
                              "/auxiliary/rhs");
        game::AuxiliarySystem system;
        expr::FieldSignature gsig(state_names, {{"omega", omega_dim}});
        system.g = parse_rhs(grhs, gsig, "/auxiliary/rhs");
        system.omega_group = "omega";
        system.omega = game::sample_control_set(parse_descriptor(
            require(aux, "Omega", "/auxiliary"), "/auxiliary/Omega"));
        if (system.omega.dim != omega_dim)
            throw SchemaError("Omega dimension does not match omega_dim",
                              "/auxiliary/Omega");
        system.terminal =
            parse_region(require(aux, "F", "/auxiliary"), "/auxiliary/F");
        if (system.terminal.dim() != static_cast<int>(state_names.size()))
            throw SchemaError("F dimension does not match the state",
                              "/auxiliary/F");
        system.validate();
        pf.auxiliary = std::move(system);
    }

    // target
    const json& target = require(doc, "target", "/");
    if (!target.is_object()) throw SchemaError("expected an object", "/target");
    const std::string tkind =
        as_string(require(target, "kind", "/target"), "/target/kind");
    if (tkind == "cylinder") {
        reject_unknown(target, "/target", {"kind", "region"});
        pf.problem.target.kind = game::TargetSpec::Kind::Cylinder;
        pf.problem.target.region =
            parse_region(require(target, "region", "/target"), "/target/region");
        if (pf.problem.target.region.dim() != static_cast<int>(state_names.size()))
            throw SchemaError("target region dimension does not match the state",
                              "/target/region");
    } else if (tkind == "controllability") {
        reject_unknown(target, "/target", {"kind"});
        if (!pf.auxiliary)
            throw SchemaError("controllability target needs an auxiliary section",
                              "/target");
        pf.problem.target.kind = game::TargetSpec::Kind::Controllability;
    } else if (tkind == "grid") {
        reject_unknown(target, "/target", {"kind", "path"});
        pf.problem.target.kind = game::TargetSpec::Kind::ExplicitGrid;
        pf.problem.target.grid_path =
            as_string(require(target, "path", "/target"), "/target/path");
    } else {
        throw SchemaError("unknown target kind \"" + tkind + "\"", "/target/kind");
    }

    // grid
    const json& g = require(doc, "grid", "/");
    if (!g.is_object()) throw SchemaError("expected an object", "/grid");
    reject_unknown(g, "/grid", {"bounds", "cells", "time_steps"});
    pf.grid.bounds = as_intervals(require(g, "bounds", "/grid"), "/grid/bounds");
    const json& cells = require(g, "cells", "/grid");
    if (!cells.is_array()) throw SchemaError("expected an array", "/grid/cells");
    for (std::size_t i = 0; i < cells.size(); ++i)
        pf.grid.cells.push_back(as_int(cells[i], "/grid/cells/" + std::to_string(i)));
    pf.grid.time_steps =
        as_int(require(g, "time_steps", "/grid"), "/grid/time_steps");
    pf.grid.horizon = pf.problem.horizon;
    if (pf.grid.bounds.size() != state_names.size())
        throw SchemaError("grid bounds dimension does not match the state",
                          "/grid/bounds");
    try {
        pf.grid.validate();
    } catch (const std::exception& e) {
        throw SchemaError(e.what(), "/grid");
    }

    // solver (optional)
    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        if (!s.is_object()) throw SchemaError("expected an object", "/solver");
        reject_unknown(s, "/solver",
                       {"max_iter", "membership", "substeps", "refine", "parallel"});
        if (s.contains("max_iter"))
            pf.solver.max_iter = as_int(s["max_iter"], "/solver/max_iter");
        if (s.contains("membership")) {
            const std::string m = as_string(s["membership"], "/solver/membership");
            if (m == "nearest")
                pf.solver.membership = bridge::Membership::Nearest;
            else if (m == "neighborhood")
                pf.solver.membership = bridge::Membership::Neighborhood;
            else
                throw SchemaError("membership must be \"nearest\" or \"neighborhood\"",
                                  "/solver/membership");
        }
        if (s.contains("substeps"))
            pf.solver.substeps = as_int(s["substeps"], "/solver/substeps");
        if (s.contains("refine")) {
            const json& r = s["refine"];
            if (!r.is_array()) throw SchemaError("expected an array", "/solver/refine");
            for (std::size_t i = 0; i < r.size(); ++i)
                pf.solver.refine.push_back(
                    as_int(r[i], "/solver/refine/" + std::to_string(i)));
        }
        if (s.contains("parallel")) {
            if (!s["parallel"].is_boolean())
                throw SchemaError("expected a boolean", "/solver/parallel");
            pf.solver.parallel = s["parallel"].get<bool>();
        }
    }
    if (pf.solver.max_iter < 1)
        throw SchemaError("max_iter must be >= 1", "/solver/max_iter");
    if (pf.solver.substeps < 1)
        throw SchemaError("substeps must be >= 1", "/solver/substeps");
    if (!pf.solver.refine.empty() && pf.solver.refine.size() != 1 &&
        pf.solver.refine.size() != state_names.size())
        throw SchemaError("refine must list one factor or one per axis",
                          "/solver/refine");
    for (int f : pf.solver.refine)
        if (f < 1) throw SchemaError("refine factors must be >= 1", "/solver/refine");

    // isaacs (optional)
    if (doc.contains("isaacs")) {
        const json& s = doc["isaacs"];
        if (!s.is_object()) throw SchemaError("expected an object", "/isaacs");
        reject_unknown(s, "/isaacs",
                       {"state_samples", "direction_samples", "tolerance"});
        if (s.contains("state_samples"))
            pf.isaacs.state_samples = as_int(s["state_samples"], "/isaacs/state_samples");
        if (s.contains("direction_samples"))
            pf.isaacs.direction_samples =
                as_int(s["direction_samples"], "/isaacs/direction_samples");
        if (s.contains("tolerance"))
            pf.isaacs.tolerance = as_number(s["tolerance"], "/isaacs/tolerance");
        if (pf.isaacs.state_samples < 1 || pf.isaacs.direction_samples < 1)
            throw SchemaError("sample counts must be >= 1", "/isaacs");
    }

    // simulate (optional)
    if (doc.contains("simulate")) {
        const json& s = doc["simulate"];
        if (!s.is_object()) throw SchemaError("expected an object", "/simulate");
        reject_unknown(s, "/simulate",
                       {"starts", "margin", "eps", "fineness", "seed", "substeps",
                        "adversaries"});
        if (s.contains("starts"))
            pf.simulate.starts = as_int(s["starts"], "/simulate/starts");
        if (s.contains("margin"))
            pf.simulate.margin = as_int(s["margin"], "/simulate/margin");
        if (s.contains("eps"))
            pf.simulate.eps = as_number(s["eps"], "/simulate/eps");
        if (s.contains("fineness"))
            pf.simulate.fineness = as_vector(s["fineness"], "/simulate/fineness");
        if (s.contains("seed")) {
            if (!s["seed"].is_number_unsigned() && !s["seed"].is_number_integer())
                throw SchemaError("expected an integer", "/simulate/seed");
            pf.simulate.seed = s["seed"].get<std::uint64_t>();
        }
        if (s.contains("substeps"))
            pf.simulate.substeps = as_int(s["substeps"], "/simulate/substeps");
        if (s.contains("adversaries"))
            pf.simulate.adversaries =
                as_string_array(s["adversaries"], "/simulate/adversaries");
        if (pf.simulate.starts < 1)
            throw SchemaError("starts must be >= 1", "/simulate/starts");
    }

    if (doc.contains("commute_tolerance"))
        pf.commute_tolerance =
            as_number(doc["commute_tolerance"], "/commute_tolerance");

    pf.problem.validate();
    return pf;
}

ProblemFile load_problem(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw SchemaError("cannot open file: " + path, "/");
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_problem(buf.str());
}

}  // namespace sb::io
