#pragma once

#include <array>
#include <cmath>

namespace qtflow {

/// Symmetric trace-free 3x3 tensor stored as its five independent
/// coefficients; the (3,3) entry is reconstructed as -(q11 + q22), so
/// symmetry and zero trace hold by construction and cannot drift.
struct QTensor {
    double q11 = 0.0;
    double q12 = 0.0;
    double q13 = 0.0;
    double q22 = 0.0;
    double q23 = 0.0;

    static QTensor zero() { return {}; }

    /// Uniaxial tensor s (e ox e - I/3) with director along axis 0, 1 or 2.
    static QTensor uniaxial(double s, int axis) {
        QTensor q;
        const double d = s * (2.0 / 3.0);
        const double o = -s / 3.0;
        q.q11 = (axis == 0) ? d : o;
        q.q22 = (axis == 1) ? d : o;
        return q;
    }

    double q33() const { return -(q11 + q22); }

    /// Full 3x3 matrix; row-major. Used for display and cross-checks only,
    /// all hot-path algebra works on the five coefficients directly.
    std::array<std::array<double, 3>, 3> matrix() const {
        return {{{q11, q12, q13}, {q12, q22, q23}, {q13, q23, q33()}}};
    }

    QTensor& operator+=(const QTensor& o) {
        q11 += o.q11; q12 += o.q12; q13 += o.q13; q22 += o.q22; q23 += o.q23;
        return *this;
    }
    QTensor& operator-=(const QTensor& o) {
        q11 -= o.q11; q12 -= o.q12; q13 -= o.q13; q22 -= o.q22; q23 -= o.q23;
        return *this;
    }
    QTensor& operator*=(double s) {
        q11 *= s; q12 *= s; q13 *= s; q22 *= s; q23 *= s;
        return *this;
    }

    friend QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
    friend QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
    friend QTensor operator*(double s, QTensor a) { return a *= s; }
    friend QTensor operator*(QTensor a, double s) { return a *= s; }
    friend QTensor operator-(QTensor a) { return a *= -1.0; }

    friend bool operator==(const QTensor&, const QTensor&) = default;
};

/// Frobenius inner product A:B = sum_ij A_ij B_ij in closed form over the
/// five stored coefficients (off-diagonals twice, a33 b33 expanded).
inline double frobenius_dot(const QTensor& a, const QTensor& b) {
    return 2.0 * (a.q11 * b.q11 + a.q22 * b.q22) + a.q11 * b.q22 +
           a.q22 * b.q11 +
           2.0 * (a.q12 * b.q12 + a.q13 * b.q13 + a.q23 * b.q23);
}

inline double norm_sq(const QTensor& a) { return frobenius_dot(a, a); }
inline double norm(const QTensor& a) { return std::sqrt(norm_sq(a)); }

/// tr(Q^2), identical to the Frobenius norm squared for symmetric Q.
inline double trace_sq(const QTensor& q) { return frobenius_dot(q, q); }

/// tr(Q^3) = 3 det(Q) for trace-free Q (Cayley-Hamilton).
inline double trace_cube(const QTensor& q) {
    const double q33 = q.q33();
    const double det = q.q11 * (q.q22 * q33 - q.q23 * q.q23) -
                       q.q12 * (q.q12 * q33 - q.q23 * q.q13) +
                       q.q13 * (q.q12 * q.q23 - q.q22 * q.q13);
    return 3.0 * det;
}

/// Trace-free part of Q^2, i.e. Q^2 - (tr(Q^2)/3) I. Q^2 is symmetric, so
/// the result stays representable by five coefficients.
inline QTensor square_deviator(const QTensor& q) {
    const double q33 = q.q33();
    const double third = trace_sq(q) / 3.0;
    QTensor d;
    d.q11 = q.q11 * q.q11 + q.q12 * q.q12 + q.q13 * q.q13 - third;
    d.q12 = q.q11 * q.q12 + q.q12 * q.q22 + q.q13 * q.q23;
    d.q13 = q.q11 * q.q13 + q.q12 * q.q23 + q.q13 * q33;
    d.q22 = q.q12 * q.q12 + q.q22 * q.q22 + q.q23 * q.q23 - third;
    d.q23 = q.q12 * q.q13 + q.q22 * q.q23 + q.q23 * q33;
    return d;
}

inline double max_abs_coeff(const QTensor& q) {
    double m = std::fabs(q.q11);
    m = std::max(m, std::fabs(q.q12));
    m = std::max(m, std::fabs(q.q13));
    m = std::max(m, std::fabs(q.q22));
    m = std::max(m, std::fabs(q.q23));
    return std::max(m, std::fabs(q.q33()));
}

}  // namespace qtflow
