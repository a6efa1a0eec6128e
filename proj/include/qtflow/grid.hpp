#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "qtflow/errors.hpp"
#include "qtflow/qtensor.hpp"

namespace qtflow {

enum class Bc {
    DirichletZero,  // boundary nodes pinned to zero
    NeumannZero,    // even reflection across the boundary
};

/// Uniform node-centered grid on an axis-aligned box in 1, 2 or 3
/// dimensions. `cells[a]` is the number of cells along axis a, so there are
/// cells[a] + 1 node layers and the spacing is extent[a] / cells[a].
/// Storage is row-major with the last active axis fastest.
struct Grid {
    int dim = 1;
    std::array<int, 3> cells = {1, 1, 1};
    std::array<double, 3> extent = {1.0, 1.0, 1.0};
    Bc bc = Bc::DirichletZero;

    double h(int axis) const { return extent[axis] / cells[axis]; }

    int nodes(int axis) const { return axis < dim ? cells[axis] + 1 : 1; }

    std::size_t node_count() const {
        std::size_t n = 1;
        for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(nodes(a));
        return n;
    }

    std::size_t index(int i, int j = 0, int k = 0) const {
        return (static_cast<std::size_t>(i) * nodes(1) + j) * nodes(2) + k;
    }

    bool on_boundary(int i, int j = 0, int k = 0) const {
        if (i == 0 || i == cells[0]) return true;
        if (dim >= 2 && (j == 0 || j == cells[1])) return true;
        if (dim >= 3 && (k == 0 || k == cells[2])) return true;
        return false;
    }

    /// Box volume (product of extents over active axes).
    double volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= extent[a];
        return v;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Same shape, BC and (up to round-off) geometry. Extents reconstructed
/// from a serialized spacing can differ by an ulp, so file round-trips are
/// checked with this rather than exact equality.
inline bool grids_compatible(const Grid& a, const Grid& b) {
    if (a.dim != b.dim || a.bc != b.bc) return false;
    for (int ax = 0; ax < a.dim; ++ax) {
        if (a.cells[ax] != b.cells[ax]) return false;
        const double d = a.extent[ax] - b.extent[ax];
        if (!(d < 1e-12 * a.extent[ax] && -d < 1e-12 * a.extent[ax]))
            return false;
    }
    return true;
}

template <class T>
struct Field {
    Grid grid;
    std::vector<T> v;

    Field() = default;
    explicit Field(const Grid& g, T fill = T{})
        : grid(g), v(g.node_count(), fill) {}

    std::size_t size() const { return v.size(); }

    T& operator[](std::size_t i) { return v[i]; }
    const T& operator[](std::size_t i) const { return v[i]; }

    T& at(int i, int j = 0, int k = 0) { return v[grid.index(i, j, k)]; }
    const T& at(int i, int j = 0, int k = 0) const {
        return v[grid.index(i, j, k)];
    }
};

using ScalarField = Field<double>;
using QTensorField = Field<QTensor>;

/// Throws GridMismatchError unless both fields live on the same grid
/// (shape, spacing and boundary condition).
template <class A, class B>
void require_same_grid(const Field<A>& a, const Field<B>& b,
                       const char* where) {
    if (!(a.grid == b.grid)) {
        throw GridMismatchError(std::string(where) +
                                ": fields live on different grids");
    }
}

}  // namespace qtflow
