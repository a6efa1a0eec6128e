#include "qtflow/serial_ref.hpp"

#include <cmath>

namespace qtflow::serial_ref {

namespace {

// Even reflection of a node index across the ends of [0, n].
int reflect(int i, int n) {
    if (i < 0) return -i;
    if (i > n) return 2 * n - i;
    return i;
}

double w1(int i, int n, double h) {
    return (i == 0 || i == n) ? 0.5 * h : h;
}

double dot_of(double a, double b) { return a * b; }
double dot_of(const QTensor& a, const QTensor& b) { return frobenius_dot(a, b); }
double norm_sq_of(double a) { return a * a; }
double norm_sq_of(const QTensor& a) { return norm_sq(a); }

template <class T>
Field<T> laplacian_ref(const Field<T>& f) {
    const Grid& g = f.grid;
    Field<T> out(g);
    for (int i = 0; i < g.nodes(0); ++i)
        for (int j = 0; j < g.nodes(1); ++j)
            for (int k = 0; k < g.nodes(2); ++k) {
                if (g.bc == Bc::DirichletZero && g.on_boundary(i, j, k)) {
                    out.at(i, j, k) = T{};
                    continue;
                }
                T acc{};
                const int c[3] = {i, j, k};
                for (int a = 0; a < g.dim; ++a) {
                    int lo[3] = {i, j, k};
                    int hi[3] = {i, j, k};
                    lo[a] = reflect(c[a] - 1, g.cells[a]);
                    hi[a] = reflect(c[a] + 1, g.cells[a]);
                    const double h = g.h(a);
                    acc += (1.0 / (h * h)) *
                           (f.at(lo[0], lo[1], lo[2]) +
                            f.at(hi[0], hi[1], hi[2]) -
                            2.0 * f.at(i, j, k));
                }
                out.at(i, j, k) = acc;
            }
    return out;
}

template <class T>
double gradient_norm_sq_ref(const Field<T>& f) {
    const Grid& g = f.grid;
    double acc = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        const double h = g.h(a);
        for (int i = 0; i < g.nodes(0); ++i)
            for (int j = 0; j < g.nodes(1); ++j)
                for (int k = 0; k < g.nodes(2); ++k) {
                    const int c[3] = {i, j, k};
                    if (c[a] >= g.cells[a]) continue;
                    int up[3] = {i, j, k};
                    ++up[a];
                    double w = 1.0;
                    for (int b = 0; b < g.dim; ++b)
                        if (b != a) w *= w1(c[b], g.cells[b], g.h(b));
                    const T d =
                        f.at(up[0], up[1], up[2]) - f.at(i, j, k);
                    acc += w * norm_sq_of(d) / h;
                }
    }
    return acc;
}

template <class T>
double l2_inner_ref(const Field<T>& x, const Field<T>& y) {
    require_same_grid(x, y, "serial_ref::l2_inner");
    const Grid& g = x.grid;
    double acc = 0.0;
    for (int i = 0; i < g.nodes(0); ++i)
        for (int j = 0; j < g.nodes(1); ++j)
            for (int k = 0; k < g.nodes(2); ++k) {
                double w = w1(i, g.cells[0], g.h(0));
                if (g.dim >= 2) w *= w1(j, g.cells[1], g.h(1));
                if (g.dim >= 3) w *= w1(k, g.cells[2], g.h(2));
                acc += w * dot_of(x.at(i, j, k), y.at(i, j, k));
            }
    return acc;
}

}  // namespace

QTensorField laplacian(const QTensorField& f) { return laplacian_ref(f); }
ScalarField laplacian(const ScalarField& f) { return laplacian_ref(f); }

double gradient_norm_sq(const QTensorField& f) {
    return gradient_norm_sq_ref(f);
}
double gradient_norm_sq(const ScalarField& f) {
    return gradient_norm_sq_ref(f);
}

double l2_inner(const QTensorField& a, const QTensorField& b) {
    return l2_inner_ref(a, b);
}
double l2_inner(const ScalarField& a, const ScalarField& b) {
    return l2_inner_ref(a, b);
}

QTensorField aux_gradient_field(const QTensorField& q, const ModelParams& p) {
    QTensorField out(q.grid);
    for (std::size_t i = 0; i < q.size(); ++i)
        out.v[i] = aux_gradient(q.v[i], p, static_cast<std::ptrdiff_t>(i));
    return out;
}

}  // namespace qtflow::serial_ref
