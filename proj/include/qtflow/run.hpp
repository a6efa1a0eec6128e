#pragma once

#include <string>

#include "qtflow/config.hpp"

namespace qtflow {

/// Process exit codes shared by the library entry points and the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,        // ParseError / ValidationError
    kExitNotConverged = 3,  // linear solve stalled
    kExitRadicand = 4,      // NonpositiveRadicand
    kExitRLoss = 5,         // RPositivityLost with abort enabled
    kExitAuditFailed = 6,
    kExitIo = 7,
    kExitReference = 8,     // study reference failed its gate
};

/// Execute floor(T/dt) steps, writing diagnostics.csv (one row per step,
/// flushed), field snapshots every stride (plus step 0 and the final
/// step), and the normalized config, all into cfg.output_dir.
int run_simulation(const RunConfig& cfg);

/// Temporal convergence study on the configured problem; writes study.csv
/// into out_dir.
int run_study(const RunConfig& cfg, int levels, const std::string& out_dir);

/// Recompute invariants from the snapshots in a run directory: energy
/// monotonicity, drift at step 0, and (with stride 1) the per-step energy
/// identity and auxiliary update. Exit 6 on any failed check.
int run_audit(const std::string& dir);

/// Built-in invariant suite on synthetic problems; exit 0 iff everything
/// passes.
int run_selftest();

}  // namespace qtflow
