#pragma once

// Command implementations behind the CLI. Each returns the process exit
// code: 0 pass, 1 check failed, 2 input error, 3 non-convergence,
// 4 hypothesis violation.

#include <string>
#include <vector>

#include "sb/problem_io.hpp"

namespace sb::cmd {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitHypothesisViolation = 4;

/// Target grid for a parsed problem (cylinder, controllability set, or a
/// previously exported grid). Throws SchemaError on mismatched grid files.
grid::TimeSlicedGrid build_target(const io::ProblemFile& pf,
                                  const grid::GridSpec& spec);

/// Deterministic commutation pre-check over the problem's f/g pair.
/// Returns the max endpoint discrepancy over `samples` random
/// (x, u, v, omega, tau', tau'') draws with tau in [0, tau_max].
double commutation_precheck(const io::ProblemFile& pf, int samples,
                            double tau_max, std::uint64_t seed);

int cmd_solve(const std::string& problem_path, const std::string& out_dir);

int cmd_transform_compare(const std::string& problem_path,
                          const std::string& out_dir, bool force = false);

/// which: "commute", "bracket", "isaacs" or "sections".
/// The sections check needs a previously exported grid.
int cmd_check(const std::string& problem_path, const std::string& which,
              const std::string& grid_path, const std::string& out_dir);

int cmd_simulate(const std::string& problem_path, const std::string& w_path,
                 const std::string& out_dir);

/// slices empty = all slices.
int cmd_export_plot(const std::string& grid_path, std::vector<int> slices,
                    const std::string& out_path);

}  // namespace sb::cmd
