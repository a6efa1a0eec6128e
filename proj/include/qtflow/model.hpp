#pragma once

#include <cstdint>

#include "qtflow/errors.hpp"
#include "qtflow/qtensor.hpp"

namespace qtflow {

/// Material and scheme constants. c > 0 keeps the bulk potential bounded
/// below and A0 > 0 keeps the quadratization radicand positive; both are
/// enforced at the configuration layer, not here, so tests can probe
/// degenerate corners directly.
struct ModelParams {
    double a = -0.3;   // quadratic bulk coefficient
    double b = 1.0;    // cubic bulk coefficient
    double c = 1.0;    // quartic bulk coefficient
    double L = 0.01;   // elastic (gradient) coefficient
    double M = 1.0;    // mobility of the gradient flow
    double A0 = 1.0;   // quadratization shift

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Bulk potential density
/// F_B(Q) = a/2 tr(Q^2) - b/3 tr(Q^3) + c/4 (tr(Q^2))^2.
inline double bulk_potential(const QTensor& q, const ModelParams& p) {
    const double t2 = trace_sq(q);
    return 0.5 * p.a * t2 - p.b / 3.0 * trace_cube(q) + 0.25 * p.c * t2 * t2;
}

/// Variational derivative of the bulk potential within the symmetric
/// trace-free class: S(Q) = a Q - b (Q^2 - tr(Q^2)/3 I) + c tr(Q^2) Q.
inline QTensor bulk_gradient(const QTensor& q, const ModelParams& p) {
    const double t2 = trace_sq(q);
    QTensor s = (p.a + p.c * t2) * q;
    if (p.b != 0.0) s -= p.b * square_deviator(q);
    return s;
}

/// Auxiliary (quadratized) variable r(Q) = sqrt(2 F_B(Q) + A0).
/// Throws NonpositiveRadicandError when the shift A0 is too small; `node`
/// lets field-level callers report where it happened (-1 = pointwise).
inline double aux_value(const QTensor& q, const ModelParams& p,
                        std::ptrdiff_t node = -1) {
    const double radicand = 2.0 * bulk_potential(q, p) + p.A0;
    if (!(radicand > 0.0)) {
        throw NonpositiveRadicandError(
            radicand, node,
            "quadratization radicand 2*F_B(Q) + A0 is not positive (value " +
                std::to_string(radicand) +
                "); increase A0 or shrink the initial data");
    }
    return std::sqrt(radicand);
}

/// Gradient of the auxiliary variable, P(Q) = S(Q) / r(Q).
inline QTensor aux_gradient(const QTensor& q, const ModelParams& p,
                            std::ptrdiff_t node = -1) {
    return (1.0 / aux_value(q, p, node)) * bulk_gradient(q, p);
}

/// First-order Taylor remainder of the auxiliary variable,
/// r(B) - r(A) - P(A):(B - A). Small of second order in |B - A|.
inline double aux_taylor_remainder(const QTensor& qa, const QTensor& qb,
                                   const ModelParams& p) {
    return aux_value(qb, p) - aux_value(qa, p) -
           frobenius_dot(aux_gradient(qa, p), qb - qa);
}

/// Deterministic suggestion for the quadratization shift,
/// 1 + max(0, -2 min F_B) over the ball of tensors with Frobenius norm up
/// to `radius`: a dense uniaxial amplitude sweep (which attains the
/// constrained minimum) plus a fixed-seed cloud of random tensors as a
/// cross-check. The hard runtime guard in aux_value stays in force.
double suggest_a0(double radius, const ModelParams& p);

}  // namespace qtflow
