#include "qtflow/stepper.hpp"

#include <string>

#include "qtflow/errors.hpp"

namespace qtflow {

SchemeState make_state(QTensorField q0, const ModelParams& p, double dt) {
    SchemeState s;
    s.r = aux_value_field(q0, p);
    s.q = std::move(q0);
    s.params = p;
    s.dt = dt;
    return s;
}

QTensorField apply_update_operator(const QTensorField& x,
                                   const QTensorField& pn,
                                   const ModelParams& p, double dt) {
    require_same_grid(x, pn, "apply_update_operator");
    QTensorField out = lin_comb(1.0, x, -p.M * p.L * dt, laplacian(x));
    const ScalarField pnx = frobenius_field(pn, x);
    axpy(p.M * dt, scaled_field(pnx, pn), out);
    return out;
}

QTensorField build_rhs(const SchemeState& s, const QTensorField& pn) {
    require_same_grid(s.q, pn, "build_rhs");
    const double mdt = s.params.M * s.dt;
    // coefficient of Pn per node: M dt ((Pn : Q^n) - r^n)
    const ScalarField coef =
        lin_comb(mdt, frobenius_field(pn, s.q), -mdt, s.r);
    QTensorField rhs = s.q;
    axpy(1.0, scaled_field(coef, pn), rhs);
    return rhs;
}

QTensorField h_field(const SchemeState& next, const QTensorField& pn) {
    return lin_comb(next.params.L, laplacian(next.q), -1.0,
                    scaled_field(next.r, pn));
}

std::pair<SchemeState, SolveReport> step(const SchemeState& s,
                                         const QTensorField& pn,
                                         const StepOptions& opt) {
    const long max_iter = opt.cg_max_iter > 0
                              ? opt.cg_max_iter
                              : 10 * static_cast<long>(s.q.grid.node_count());
    const QTensorField rhs = build_rhs(s, pn);
    auto apply = [&](const QTensorField& x) {
        return apply_update_operator(x, pn, s.params, s.dt);
    };
    auto [q_next, rep] = cg_solve(apply, rhs, opt.cg_tol, max_iter, &s.q);
    if (!rep.converged) {
        throw NotConvergedError(
            rep, "update solve stalled at step " +
                     std::to_string(s.step_index + 1) + ": " +
                     std::to_string(rep.iterations) +
                     " iterations, relative residual " +
                     std::to_string(rep.rel_residual));
    }

    SchemeState next;
    next.params = s.params;
    next.dt = s.dt;
    next.step_index = s.step_index + 1;
    next.time = static_cast<double>(next.step_index) * s.dt;
    // r^{n+1} = r^n + Pn : (Q^{n+1} - Q^n)
    next.r = lin_comb(
        1.0, s.r,
        1.0, frobenius_field(pn, lin_comb(1.0, q_next, -1.0, s.q)));
    next.q = std::move(q_next);

    if (opt.abort_on_r_loss) {
        const double r_min = min_value(next.r);
        if (r_min <= 0.0) {
            throw RPositivityLostError(
                r_min, next.step_index,
                "auxiliary variable lost positivity at step " +
                    std::to_string(next.step_index) + " (min r = " +
                    std::to_string(r_min) + ")");
        }
    }
    return {std::move(next), rep};
}

std::pair<SchemeState, SolveReport> step(const SchemeState& s,
                                         const StepOptions& opt) {
    return step(s, aux_gradient_field(s.q, s.params), opt);
}

std::pair<SchemeState, SolveReport> step(const SchemeState& s, double tol,
                                         long max_iter) {
    StepOptions opt;
    opt.cg_tol = tol;
    opt.cg_max_iter = max_iter;
    return step(s, opt);
}

QTensorField build_rhs(const SchemeState& s) {
    return build_rhs(s, aux_gradient_field(s.q, s.params));
}

}  // namespace qtflow
