#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "qtflow/stepper.hpp"

namespace qtflow {

/// One CSV row of run diagnostics. Row n = 0 describes the initial state
/// (solver-related columns are zero); row n >= 1 describes the state after
/// the n-th step together with the quantities of that step's solve.
struct DiagnosticsRecord {
    long n = 0;
    double t = 0.0;
    double E = 0.0;            // L/2 |grad Q|^2 + 1/2 |r|^2
    double dE_identity = 0.0;  // per-step energy identity residual
    double H_norm_sq = 0.0;    // |H^{n+1}|^2 of this step's molecular field
    double H_sum = 0.0;        // running sum |H^{k+1}|^2 dt
    double Vn_max = 0.0;       // max |r^n - r(Q^n)|
    double Vn_l2 = 0.0;        // weighted L2 norm of r^n - r(Q^n)
    double Dn_l2 = 0.0;        // |grad(r^n - r(Q^n))| in L2
    double Wn = 0.0;           // L/2 |lap Q^n|^2 + 1/(2M) sum |grad dQ/dt|^2 dt
    double laplQ_l2 = 0.0;     // |lap Q^n| in L2
    double grad_rP_l2 = 0.0;   // |grad(r^{n+1} P(Q^n))| in L2
    double r_min = 0.0;        // min of r^n over nodes
    long cg_iters = 0;
};

/// Total discrete energy E^n = L/2 |grad Q^n|^2 + 1/2 |r^n|^2.
double energy(const SchemeState& s);

/// Auxiliary-variable drift monitors: pointwise V = |r - r(Q)| and
/// pointwise one-sided gradient magnitude D = |grad(r - r(Q))|.
std::pair<ScalarField, ScalarField> drift_fields(const SchemeState& s);

/// |grad(r P)| in L2 for the per-step source field r^{n+1} P(Q^n).
double grad_rp_norm(const ScalarField& r_next, const QTensorField& pn);

/// Accumulates per-step diagnostics across a run: energy identity
/// residuals, the dissipation sum, the second-level energy W_n and its
/// running supremum, and the advisory counter for steps where W_n dt > 1
/// (the regime where the drift bound's constant stops being meaningful).
class DiagnosticsTracker {
public:
    explicit DiagnosticsTracker(const SchemeState& initial);

    const DiagnosticsRecord& initial_record() const { return initial_; }
    double initial_energy() const { return initial_.E; }

    DiagnosticsRecord after_step(const SchemeState& prev,
                                 const SchemeState& next,
                                 const QTensorField& pn,
                                 const SolveReport& rep);

    double h_sum() const { return h_sum_; }
    double sup_w() const { return sup_w_; }
    /// Accumulated sum |lap Q^n|^2 dt over completed steps.
    double lap_sq_time_sum() const { return lap_sq_time_sum_; }
    long w_advisory_count() const { return w_advisories_; }

private:
    DiagnosticsRecord initial_;
    double e_prev_ = 0.0;
    double h_sum_ = 0.0;
    double w_increment_sum_ = 0.0;  // sum |grad((Q^{k+1}-Q^k)/dt)|^2 dt
    double sup_w_ = 0.0;
    double lap_sq_time_sum_ = 0.0;
    long w_advisories_ = 0;
};

/// Column header shared by writers and readers of the diagnostics CSV.
extern const char kDiagnosticsCsvHeader[];

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const DiagnosticsRecord& rec);

/// Snapshots of a run (every `stride`-th step) plus piecewise-linear
/// evaluation in time between consecutive stored steps.
class TrajectoryHistory {
public:
    TrajectoryHistory(double dt, long stride) : dt_(dt), stride_(stride) {}

    long stride() const { return stride_; }
    double dt() const { return dt_; }
    const std::vector<long>& steps() const { return steps_; }

    /// Record the state if its step index is on the stride (or is forced).
    void add(const SchemeState& s, bool force = false);

    /// Stored snapshot at exactly step n; throws StrideTooCoarseError if
    /// that step was not kept.
    const QTensorField& q_at_step(long n) const;
    const ScalarField& r_at_step(long n) const;

    /// Piecewise-linear interpolant between stored snapshots. Exactly
    /// reproduces a stored snapshot when t lands on it (no arithmetic is
    /// applied in that case). Throws std::out_of_range outside the stored
    /// time range and StrideTooCoarseError when the bracketing snapshots
    /// were not kept.
    std::pair<QTensorField, ScalarField> interpolant_eval(double t) const;

private:
    std::size_t position_of(long n) const;

    double dt_;
    long stride_;
    std::vector<long> steps_;
    std::vector<QTensorField> qs_;
    std::vector<ScalarField> rs_;
};

}  // namespace qtflow
