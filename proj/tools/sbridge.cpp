// sbridge: solvability sets for approach games on a grid.
//
// Subcommands: solve, transform-compare, check, simulate, export-plot.
// Exit codes: 0 pass, 1 check failed, 2 input error, 3 non-convergence,
// 4 hypothesis violation.

#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sb/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"solvability sets for approach games on a grid"};
    app.require_subcommand(1);

    std::string problem_path, out_dir = "out", grid_path, which, out_path;
    std::vector<int> slices;
    bool force = false;

    CLI::App* solve = app.add_subcommand("solve", "run the programmed iteration");
    solve->add_option("problem", problem_path, "problem file")->required();
    solve->add_option("-o,--out", out_dir, "output directory");

    CLI::App* compare = app.add_subcommand(
        "transform-compare", "compare direct and transformed iterates per k");
    compare->add_option("problem", problem_path, "problem file")->required();
    compare->add_option("-o,--out", out_dir, "output directory");
    compare->add_flag("--force", force, "compare even if the flows do not commute");

    CLI::App* check = app.add_subcommand("check", "run a single property check");
    check->add_option("which", which, "commute|bracket|isaacs|sections")->required();
    check->add_option("problem", problem_path, "problem file")->required();
    check->add_option("-g,--grid", grid_path, "exported grid (sections check)");
    check->add_option("-o,--out", out_dir, "output directory");

    CLI::App* simulate =
        app.add_subcommand("simulate", "run extremal-shift trials on a bridge");
    simulate->add_option("problem", problem_path, "problem file")->required();
    simulate->add_option("bridge", grid_path, "bridge artifact (.sbgr)")->required();
    simulate->add_option("-o,--out", out_dir, "output directory");

    CLI::App* plot =
        app.add_subcommand("export-plot", "boundary cells of a grid as CSV");
    plot->add_option("grid", grid_path, "grid artifact (.sbgr)")->required();
    plot->add_option("-s,--slice", slices, "slice indices (default: all)");
    plot->add_option("-o,--out", out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sb::cmd::kExitInputError;
    }

    if (solve->parsed()) return sb::cmd::cmd_solve(problem_path, out_dir);
    if (compare->parsed())
        return sb::cmd::cmd_transform_compare(problem_path, out_dir, force);
    if (check->parsed())
        return sb::cmd::cmd_check(problem_path, which, grid_path, out_dir);
    if (simulate->parsed())
        return sb::cmd::cmd_simulate(problem_path, grid_path, out_dir);
    if (plot->parsed()) return sb::cmd::cmd_export_plot(grid_path, slices, out_path);
    return sb::cmd::kExitInputError;
}
