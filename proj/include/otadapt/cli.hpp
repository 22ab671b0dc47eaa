#pragma once

namespace otadapt {

/// CLI entry: subcommands adapt, ma-solve, check-state, export-vtk, demo.
/// Returns 0 on success, 1 on usage errors, 2 on numerical failures.
int run_cli(int argc, const char* const* argv);

}  // namespace otadapt
