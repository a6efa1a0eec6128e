#pragma once

#include "qtflow/grid.hpp"
#include "qtflow/model.hpp"

/// Plain single-threaded reference implementations of the hot-path kernels,
/// written independently of the OpenMP versions (straight nested loops,
/// sequential accumulation). Used only by tests (parity checks) and the
/// benchmark; production code always goes through kernels.hpp.
namespace qtflow::serial_ref {

QTensorField laplacian(const QTensorField& f);
ScalarField laplacian(const ScalarField& f);

double gradient_norm_sq(const QTensorField& f);
double gradient_norm_sq(const ScalarField& f);

double l2_inner(const QTensorField& a, const QTensorField& b);
double l2_inner(const ScalarField& a, const ScalarField& b);

QTensorField aux_gradient_field(const QTensorField& q, const ModelParams& p);

}  // namespace qtflow::serial_ref
