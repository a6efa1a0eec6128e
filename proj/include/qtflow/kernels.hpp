#pragma once

#include "qtflow/grid.hpp"
#include "qtflow/model.hpp"
#include "qtflow/qtensor.hpp"

/// Field kernels used on the hot path. All loops are OpenMP-parallel;
/// reductions accumulate fixed-size blocks that are combined in index
/// order, so every result is bit-identical for any thread count. A plain
/// serial mirror of these lives in serial_ref.hpp for testing and
/// benchmarking.
namespace qtflow {

// ----- differential operators ---------------------------------------------

/// Second-order centered Laplacian. Neumann: even reflection across the
/// boundary, giving edge rows 2(f[1]-f[0])/h^2. Dirichlet: boundary rows
/// are zero (boundary values are pinned, not evolved).
QTensorField laplacian(const QTensorField& f);
ScalarField laplacian(const ScalarField& f);

/// Squared gradient norm sum_cells h_a (d/h_a)^2 with forward differences,
/// transverse directions weighted by trapezoidal node weights. Chosen so
/// that l2_inner(laplacian(f), f) == -gradient_norm_sq(f) exactly for
/// fields satisfying the active boundary condition.
double gradient_norm_sq(const QTensorField& f);
double gradient_norm_sq(const ScalarField& f);

/// Pointwise gradient magnitude |grad f| from one-sided differences
/// (forward where a right neighbor exists, backward on the far edge).
ScalarField forward_gradient_magnitude(const ScalarField& f);

// ----- inner products and reductions ---------------------------------------

/// Trapezoidal-weighted L2 inner product (boundary nodes carry half weight
/// per axis).
double l2_inner(const QTensorField& a, const QTensorField& b);
double l2_inner(const ScalarField& a, const ScalarField& b);

double l2_norm_sq(const QTensorField& f);
double l2_norm_sq(const ScalarField& f);
double l2_norm(const QTensorField& f);
double l2_norm(const ScalarField& f);

double min_value(const ScalarField& f);
double max_value(const ScalarField& f);
double max_abs(const ScalarField& f);

/// Largest |tr| over the reconstructed 3x3 matrices of the field.
double max_trace_violation(const QTensorField& f);
/// Largest |m_ij - m_ji| over the reconstructed matrices.
double max_symmetry_violation(const QTensorField& f);

// ----- pointwise model maps -------------------------------------------------

/// r(Q) at every node; throws NonpositiveRadicandError with the node index.
ScalarField aux_value_field(const QTensorField& q, const ModelParams& p);

/// P(Q) = S(Q)/r(Q) at every node.
QTensorField aux_gradient_field(const QTensorField& q, const ModelParams& p);

/// S(Q) at every node.
QTensorField bulk_gradient_field(const QTensorField& q, const ModelParams& p);

/// Pointwise Frobenius product A:B.
ScalarField frobenius_field(const QTensorField& a, const QTensorField& b);

/// Pointwise scalar * tensor product.
QTensorField scaled_field(const ScalarField& s, const QTensorField& f);

// ----- linear combinations ---------------------------------------------------

QTensorField lin_comb(double ca, const QTensorField& a, double cb,
                      const QTensorField& b);
ScalarField lin_comb(double ca, const ScalarField& a, double cb,
                     const ScalarField& b);

/// y += alpha * x
void axpy(double alpha, const QTensorField& x, QTensorField& y);

/// Zero the boundary nodes when the grid is Dirichlet (no-op for Neumann).
/// Applied to initial data and randomized test fields so that they satisfy
/// the boundary condition the operators assume.
void project_bc(QTensorField& f);
void project_bc(ScalarField& f);

namespace detail {

/// Trapezoidal node weight along one axis: h, halved on the two end layers.
inline double axis_weight(int i, int n_cells, double h) {
    return (i == 0 || i == n_cells) ? 0.5 * h : h;
}

}  // namespace detail

}  // namespace qtflow
