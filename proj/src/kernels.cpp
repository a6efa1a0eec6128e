#include "qtflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace qtflow {

namespace {

using std::ptrdiff_t;
using std::size_t;

inline double dot_of(double a, double b) { return a * b; }
inline double dot_of(const QTensor& a, const QTensor& b) {
    return frobenius_dot(a, b);
}
inline double norm_sq_of(double a) { return a * a; }
inline double norm_sq_of(const QTensor& a) { return norm_sq(a); }

/// Geometry unpacked once per kernel call: node counts, strides and
/// spacings for the (up to three) active axes.
struct Shape {
    int dim;
    int nodes[3];
    int cells[3];
    ptrdiff_t stride[3];
    double h[3];
    bool dirichlet;
    size_t count;

    explicit Shape(const Grid& g) {
        dim = g.dim;
        for (int a = 0; a < 3; ++a) {
            nodes[a] = g.nodes(a);
            cells[a] = g.cells[a];
            h[a] = a < dim ? g.h(a) : 1.0;
        }
        stride[2] = 1;
        stride[1] = nodes[2];
        stride[0] = static_cast<ptrdiff_t>(nodes[1]) * nodes[2];
        dirichlet = g.bc == Bc::DirichletZero;
        count = g.node_count();
    }

    void decompose(size_t idx, int c[3]) const {
        c[2] = static_cast<int>(idx % nodes[2]);
        c[1] = static_cast<int>((idx / nodes[2]) % nodes[1]);
        c[0] = static_cast<int>(idx / (static_cast<size_t>(nodes[1]) * nodes[2]));
    }

    bool on_boundary(const int c[3]) const {
        for (int a = 0; a < dim; ++a)
            if (c[a] == 0 || c[a] == cells[a]) return true;
        return false;
    }

    /// Product of trapezoidal weights over all active axes.
    double weight(const int c[3]) const {
        double w = 1.0;
        for (int a = 0; a < dim; ++a)
            w *= detail::axis_weight(c[a], cells[a], h[a]);
        return w;
    }

    /// Product of trapezoidal weights over active axes except `skip`.
    double weight_except(const int c[3], int skip) const {
        double w = 1.0;
        for (int a = 0; a < dim; ++a)
            if (a != skip) w *= detail::axis_weight(c[a], cells[a], h[a]);
        return w;
    }
};

/// Deterministic parallel sum: fixed-size blocks accumulated serially in
/// index order, so the value does not depend on the number of threads.
template <class Term>
double block_sum(size_t n, Term&& term) {
    constexpr size_t kBlock = 4096;
    const size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t b = 0; b < static_cast<ptrdiff_t>(nblocks); ++b) {
        const size_t lo = static_cast<size_t>(b) * kBlock;
        const size_t hi = std::min(n, lo + kBlock);
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += term(i);
        partial[static_cast<size_t>(b)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

template <class T>
Field<T> laplacian_impl(const Field<T>& f) {
    const Shape s(f.grid);
    Field<T> out(f.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t idx = 0; idx < static_cast<ptrdiff_t>(s.count); ++idx) {
        int c[3];
        s.decompose(static_cast<size_t>(idx), c);
        if (s.dirichlet && s.on_boundary(c)) {
            out.v[static_cast<size_t>(idx)] = T{};
            continue;
        }
        T acc{};
        const T& mid = f.v[static_cast<size_t>(idx)];
        for (int a = 0; a < s.dim; ++a) {
            // Off-grid neighbors only occur under Neumann (Dirichlet skips
            // boundary rows above); even reflection folds them back inside.
            const T& left = (c[a] > 0) ? f.v[idx - s.stride[a]]
                                       : f.v[idx + s.stride[a]];
            const T& right = (c[a] < s.cells[a]) ? f.v[idx + s.stride[a]]
                                                 : f.v[idx - s.stride[a]];
            acc += (1.0 / (s.h[a] * s.h[a])) *
                   (left + right - 2.0 * mid);
        }
        out.v[static_cast<size_t>(idx)] = acc;
    }
    return out;
}

template <class T>
double gradient_norm_sq_impl(const Field<T>& f) {
    const Shape s(f.grid);
    return block_sum(s.count, [&](size_t idx) {
        int c[3];
        s.decompose(idx, c);
        double acc = 0.0;
        for (int a = 0; a < s.dim; ++a) {
            if (c[a] >= s.cells[a]) continue;  // no forward cell on this axis
            const T diff = f.v[idx + s.stride[a]] - f.v[idx];
            acc += s.weight_except(c, a) * norm_sq_of(diff) / s.h[a];
        }
        return acc;
    });
}

template <class T>
double l2_inner_impl(const Field<T>& a, const Field<T>& b) {
    require_same_grid(a, b, "l2_inner");
    const Shape s(a.grid);
    return block_sum(s.count, [&](size_t idx) {
        int c[3];
        s.decompose(idx, c);
        return s.weight(c) * dot_of(a.v[idx], b.v[idx]);
    });
}

template <class T, class Map>
Field<T> pointwise(const Field<T>& f, Map&& map) {
    Field<T> out(f.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(f.size()); ++i)
        out.v[static_cast<size_t>(i)] = map(f.v[static_cast<size_t>(i)]);
    return out;
}

}  // namespace

// ----- differential operators ---------------------------------------------

QTensorField laplacian(const QTensorField& f) { return laplacian_impl(f); }
ScalarField laplacian(const ScalarField& f) { return laplacian_impl(f); }

double gradient_norm_sq(const QTensorField& f) {
    return gradient_norm_sq_impl(f);
}
double gradient_norm_sq(const ScalarField& f) {
    return gradient_norm_sq_impl(f);
}

ScalarField forward_gradient_magnitude(const ScalarField& f) {
    const Shape s(f.grid);
    ScalarField out(f.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t idx = 0; idx < static_cast<ptrdiff_t>(s.count); ++idx) {
        int c[3];
        s.decompose(static_cast<size_t>(idx), c);
        double acc = 0.0;
        for (int a = 0; a < s.dim; ++a) {
            const bool fwd = c[a] < s.cells[a];
            const ptrdiff_t other = fwd ? idx + s.stride[a] : idx - s.stride[a];
            const double d = (f.v[static_cast<size_t>(other)] -
                              f.v[static_cast<size_t>(idx)]) *
                             (fwd ? 1.0 : -1.0);
            acc += (d / s.h[a]) * (d / s.h[a]);
        }
        out.v[static_cast<size_t>(idx)] = std::sqrt(acc);
    }
    return out;
}

// ----- inner products and reductions ---------------------------------------

double l2_inner(const QTensorField& a, const QTensorField& b) {
    return l2_inner_impl(a, b);
}
double l2_inner(const ScalarField& a, const ScalarField& b) {
    return l2_inner_impl(a, b);
}

double l2_norm_sq(const QTensorField& f) { return l2_inner_impl(f, f); }
double l2_norm_sq(const ScalarField& f) { return l2_inner_impl(f, f); }
double l2_norm(const QTensorField& f) { return std::sqrt(l2_norm_sq(f)); }
double l2_norm(const ScalarField& f) { return std::sqrt(l2_norm_sq(f)); }

double min_value(const ScalarField& f) {
    double m = f.v.empty() ? 0.0 : f.v[0];
#pragma omp parallel for schedule(static) reduction(min : m)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(f.size()); ++i)
        m = std::min(m, f.v[static_cast<size_t>(i)]);
    return m;
}

double max_value(const ScalarField& f) {
    double m = f.v.empty() ? 0.0 : f.v[0];
#pragma omp parallel for schedule(static) reduction(max : m)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(f.size()); ++i)
        m = std::max(m, f.v[static_cast<size_t>(i)]);
    return m;
}

double max_abs(const ScalarField& f) {
    double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(f.size()); ++i)
        m = std::max(m, std::fabs(f.v[static_cast<size_t>(i)]));
    return m;
}

double max_trace_violation(const QTensorField& f) {
    double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(f.size()); ++i) {
        const auto mat = f.v[static_cast<size_t>(i)].matrix();
        m = std::max(m, std::fabs(mat[0][0] + mat[1][1] + mat[2][2]));
    }
    return m;
}

double max_symmetry_violation(const QTensorField& f) {
    double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(f.size()); ++i) {
        const auto mat = f.v[static_cast<size_t>(i)].matrix();
        for (int r = 0; r < 3; ++r)
            for (int c = r + 1; c < 3; ++c)
                m = std::max(m, std::fabs(mat[r][c] - mat[c][r]));
    }
    return m;
}

// ----- pointwise model maps --------------------------------------------------

ScalarField aux_value_field(const QTensorField& q, const ModelParams& p) {
    ScalarField out(q.grid);
    // Serial loop: aux_value throws on a bad radicand and the exception must
    // surface with the first offending node, which OpenMP cannot guarantee.
    for (size_t i = 0; i < q.size(); ++i)
        out.v[i] = aux_value(q.v[i], p, static_cast<ptrdiff_t>(i));
    return out;
}

QTensorField aux_gradient_field(const QTensorField& q, const ModelParams& p) {
    // Radicand check first (serial, see aux_value_field), then the
    // throw-free division kernel in parallel.
    const ScalarField r = aux_value_field(q, p);
    QTensorField out(q.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(q.size()); ++i)
        out.v[static_cast<size_t>(i)] =
            (1.0 / r.v[static_cast<size_t>(i)]) *
            bulk_gradient(q.v[static_cast<size_t>(i)], p);
    return out;
}

QTensorField bulk_gradient_field(const QTensorField& q, const ModelParams& p) {
    return pointwise(q, [&p](const QTensor& t) { return bulk_gradient(t, p); });
}

ScalarField frobenius_field(const QTensorField& a, const QTensorField& b) {
    require_same_grid(a, b, "frobenius_field");
    ScalarField out(a.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(a.size()); ++i)
        out.v[static_cast<size_t>(i)] = frobenius_dot(
            a.v[static_cast<size_t>(i)], b.v[static_cast<size_t>(i)]);
    return out;
}

QTensorField scaled_field(const ScalarField& s, const QTensorField& f) {
    require_same_grid(s, f, "scaled_field");
    QTensorField out(f.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(f.size()); ++i)
        out.v[static_cast<size_t>(i)] =
            s.v[static_cast<size_t>(i)] * f.v[static_cast<size_t>(i)];
    return out;
}

// ----- linear combinations ----------------------------------------------------

QTensorField lin_comb(double ca, const QTensorField& a, double cb,
                      const QTensorField& b) {
    require_same_grid(a, b, "lin_comb");
    QTensorField out(a.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(a.size()); ++i)
        out.v[static_cast<size_t>(i)] = ca * a.v[static_cast<size_t>(i)] +
                                        cb * b.v[static_cast<size_t>(i)];
    return out;
}

ScalarField lin_comb(double ca, const ScalarField& a, double cb,
                     const ScalarField& b) {
    require_same_grid(a, b, "lin_comb");
    ScalarField out(a.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(a.size()); ++i)
        out.v[static_cast<size_t>(i)] = ca * a.v[static_cast<size_t>(i)] +
                                        cb * b.v[static_cast<size_t>(i)];
    return out;
}

void axpy(double alpha, const QTensorField& x, QTensorField& y) {
    require_same_grid(x, y, "axpy");
#pragma omp parallel for schedule(static)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(x.size()); ++i)
        y.v[static_cast<size_t>(i)] += alpha * x.v[static_cast<size_t>(i)];
}

namespace {

template <class T>
void project_bc_impl(Field<T>& f) {
    if (f.grid.bc != Bc::DirichletZero) return;
    const Shape s(f.grid);
#pragma omp parallel for schedule(static)
    for (ptrdiff_t idx = 0; idx < static_cast<ptrdiff_t>(s.count); ++idx) {
        int c[3];
        s.decompose(static_cast<size_t>(idx), c);
        if (s.on_boundary(c)) f.v[static_cast<size_t>(idx)] = T{};
    }
}

}  // namespace

void project_bc(QTensorField& f) { project_bc_impl(f); }
void project_bc(ScalarField& f) { project_bc_impl(f); }

}  // namespace qtflow
