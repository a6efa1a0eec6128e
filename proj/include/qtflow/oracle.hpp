#pragma once

#include <iosfwd>
#include <vector>

#include "qtflow/diagnostics.hpp"
#include "qtflow/stepper.hpp"

namespace qtflow {

/// Number of full steps of size dt that fit into [0, T]; tolerant of the
/// usual floating-point shortfall when T/dt is meant to be an integer.
long step_count(double T, double dt);

/// A temporal-refinement study problem: the initial state (whose dt is the
/// coarsest level) plus the final time and shared solver knobs.
struct Problem {
    SchemeState initial;
    double T = 0.5;
    StepOptions solve;
};

struct ConvergenceLevel {
    int level = 0;
    double dt = 0.0;
    double err_final_l2 = 0.0;  // |Q_dt(T) - Q_ref(T)| in L2
    double err_h2_sum = 0.0;    // sum_n |lap(Q_dt - Q_ref)(t_n)|^2 dt
    double order_running = 0.0; // log2 error ratio vs previous level
};

struct ConvergenceStudy {
    std::vector<ConvergenceLevel> levels;
    double fitted_order = 0.0;   // least-squares slope of log err vs log dt
    double fit_residual = 0.0;   // RMS residual of that fit
    double dt_ref = 0.0;         // reference step actually used
    double ref_self_diff = 0.0;  // final-time gap between ref and ref/2
};

/// Trajectory at step size dt_ref (which must divide the problem's coarse
/// dt), snapshotted at the coarse output times j * dt_coarse. Stands in
/// for the exact solution; run_convergence_study gates it against a run at
/// dt_ref/2 before trusting it.
TrajectoryHistory fine_reference(const Problem& problem, double dt_ref);

/// One step of the plain semi-implicit scheme without the auxiliary
/// variable: Q^{n+1} - M L dt lap(Q^{n+1}) = Q^n - M dt S(Q^n). Used only
/// to cross-check that both schemes refine to the same limit; r is carried
/// along unchanged.
SchemeState baseline_step(const SchemeState& s, const StepOptions& opt = {});
SchemeState baseline_step(const SchemeState& s, double tol);

/// Reference self-consistency gate: the gap between the reference and its
/// half-step rerun must be well below the smallest level error, otherwise
/// the measured orders are meaningless. Throws ReferenceUnconvergedError.
/// Exactly zero gap (e.g. stationary problems) always passes.
void check_reference_gate(double ref_self_diff, double min_level_err);

/// Temporal refinement study over `levels` dt-halvings starting from the
/// problem's dt, against a fine reference (dt_ref = 0 picks dt_min/8).
ConvergenceStudy run_convergence_study(const Problem& problem, int levels,
                                       double dt_ref = 0.0);

/// Study report: `level,dt,err_final_l2,err_h2_sum,order_running` rows and
/// a `fitted_order=<v> fit_residual=<v>` footer.
void write_study_csv(std::ostream& os, const ConvergenceStudy& study);

/// Least-squares slope of log(err) against log(dt); optionally reports the
/// RMS residual of the fit. Inputs must be positive.
double fit_power_law(const std::vector<double>& dt,
                     const std::vector<double>& err,
                     double* residual = nullptr);

}  // namespace qtflow
