#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "qtflow/grid.hpp"
#include "qtflow/kernels.hpp"
#include "qtflow/model.hpp"

namespace qtflow {

/// Discrete trajectory point of the quadratized gradient flow: the tensor
/// field Q^n, the auxiliary scalar field r^n, and the time-step bookkeeping.
struct SchemeState {
    QTensorField q;
    ScalarField r;
    long step_index = 0;
    double time = 0.0;
    ModelParams params;
    double dt = 1e-3;
};

struct SolveReport {
    long iterations = 0;
    double rel_residual = 0.0;
    bool converged = true;
};

struct StepOptions {
    double cg_tol = 1e-12;   // relative residual target
    long cg_max_iter = 0;    // 0 = 10 * node count
    bool abort_on_r_loss = false;  // throw if min r^{n+1} <= 0
};

/// Linear solver hit the iteration cap without reaching the residual
/// target. Carries the report so callers can log where it stopped.
class NotConvergedError : public std::runtime_error {
public:
    NotConvergedError(const SolveReport& report, const std::string& what)
        : std::runtime_error(what), report_(report) {}

    const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

/// Initial state: r^0 is evaluated from Q^0 exactly, so the auxiliary
/// drift starts at zero by construction.
SchemeState make_state(QTensorField q0, const ModelParams& p, double dt);

/// Pointwise elliptic update operator of the implicit step,
///   A X = X - M L dt lap(X) + M dt (Pn : X) Pn,
/// with Pn = P(Q^n) frozen. Symmetric positive definite in the weighted L2
/// product: the rank-one coupling only adds M dt (Pn:X)^2 >= 0 per node.
QTensorField apply_update_operator(const QTensorField& x,
                                   const QTensorField& pn,
                                   const ModelParams& p, double dt);

/// Right-hand side of the update equation,
///   Q^n + M dt ((Pn : Q^n) - r^n) Pn,
/// obtained by eliminating r^{n+1} from the coupled update.
QTensorField build_rhs(const SchemeState& s, const QTensorField& pn);
QTensorField build_rhs(const SchemeState& s);

/// Molecular field of the freshly advanced state,
///   H^{n+1} = L lap(Q^{n+1}) - r^{n+1} Pn.
QTensorField h_field(const SchemeState& next, const QTensorField& pn);

/// Matrix-free conjugate gradients in the weighted L2 inner product.
/// Stops when the residual drops below tol * |rhs|; a converged iterate is
/// re-checked against the true residual and the solve restarts if recursion
/// drift cheated. Zero right-hand side short-circuits to the zero field.
template <class Op>
std::pair<QTensorField, SolveReport> cg_solve(Op&& apply,
                                              const QTensorField& rhs,
                                              double tol, long max_iter,
                                              const QTensorField* warm
                                              = nullptr) {
    SolveReport rep;
    const double rhs_norm = l2_norm(rhs);
    if (rhs_norm == 0.0) {
        return {QTensorField(rhs.grid), rep};
    }
    const double stop = tol * rhs_norm;

    QTensorField x = warm ? *warm : QTensorField(rhs.grid);
    QTensorField r = lin_comb(1.0, rhs, -1.0, apply(x));
    double rr = l2_norm_sq(r);
    rep.rel_residual = std::sqrt(rr) / rhs_norm;
    if (std::sqrt(rr) <= stop) {
        return {x, rep};
    }

    QTensorField p = r;
    while (rep.iterations < max_iter) {
        const QTensorField ap = apply(p);
        const double p_ap = l2_inner(p, ap);
        const double alpha = rr / p_ap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        ++rep.iterations;

        double rr_next = l2_norm_sq(r);
        if (std::sqrt(rr_next) <= stop) {
            // Guard against residual-recursion drift: accept only if the
            // true residual agrees, otherwise restart from it.
            r = lin_comb(1.0, rhs, -1.0, apply(x));
            rr_next = l2_norm_sq(r);
            rep.rel_residual = std::sqrt(rr_next) / rhs_norm;
            if (std::sqrt(rr_next) <= stop) {
                return {x, rep};
            }
            p = r;
            rr = rr_next;
            continue;
        }
        const double beta = rr_next / rr;
        p = lin_comb(1.0, r, beta, p);
        rr = rr_next;
    }
    rep.converged = false;
    rep.rel_residual = std::sqrt(rr) / rhs_norm;
    return {x, rep};
}

/// One step of the quadratized scheme with Pn = P(Q^n) precomputed by the
/// caller (so diagnostics can reuse it). Throws NotConvergedError if the
/// linear solve stalls; with abort_on_r_loss set, throws
/// RPositivityLostError when min r^{n+1} <= 0 (default is to continue and
/// let diagnostics report r_min).
std::pair<SchemeState, SolveReport> step(const SchemeState& s,
                                         const QTensorField& pn,
                                         const StepOptions& opt);

/// Convenience overloads: evaluate Pn internally / pass solver knobs
/// directly.
std::pair<SchemeState, SolveReport> step(const SchemeState& s,
                                         const StepOptions& opt = {});
std::pair<SchemeState, SolveReport> step(const SchemeState& s, double tol,
                                         long max_iter);

}  // namespace qtflow
