#pragma once

#include "spdekit/errors.hpp"
#include "spdekit/multi_index.hpp"

#include <cmath>

namespace spdekit {

/// determinant of a row-major d x d matrix, d <= 4
inline double det_small(const double* a, int d) {
    switch (d) {
        case 1: return a[0];
        case 2: return a[0] * a[3] - a[1] * a[2];
        case 3:
            return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
                   a[2] * (a[3] * a[7] - a[4] * a[6]);
        default: {
            // LU with partial pivoting
            double m[16];
            for (int i = 0; i < d * d; ++i) m[i] = a[i];
            double det = 1.0;
            for (int c = 0; c < d; ++c) {
                int piv = c;
                for (int r = c + 1; r < d; ++r)
                    if (std::abs(m[r * d + c]) > std::abs(m[piv * d + c])) piv = r;
                if (piv != c) {
                    for (int j = 0; j < d; ++j) std::swap(m[c * d + j], m[piv * d + j]);
                    det = -det;
                }
                double p = m[c * d + c];
                if (p == 0.0) return 0.0;
                det *= p;
                for (int r = c + 1; r < d; ++r) {
                    double f = m[r * d + c] / p;
                    for (int j = c; j < d; ++j) m[r * d + j] -= f * m[c * d + j];
                }
            }
            return det;
        }
    }
}

/// solve a x = b for row-major d x d a; Gaussian elimination with pivoting
inline void solve_small(const double* a, const double* b, double* x, int d) {
    double m[16], rhs[4];
    for (int i = 0; i < d * d; ++i) m[i] = a[i];
    for (int i = 0; i < d; ++i) rhs[i] = b[i];
    for (int c = 0; c < d; ++c) {
        int piv = c;
        for (int r = c + 1; r < d; ++r)
            if (std::abs(m[r * d + c]) > std::abs(m[piv * d + c])) piv = r;
        if (piv != c) {
            for (int j = 0; j < d; ++j) std::swap(m[c * d + j], m[piv * d + j]);
            std::swap(rhs[c], rhs[piv]);
        }
        double p = m[c * d + c];
        if (p == 0.0) throw NumericalError("singular matrix in small solve");
        for (int r = c + 1; r < d; ++r) {
            double f = m[r * d + c] / p;
            for (int j = c; j < d; ++j) m[r * d + j] -= f * m[c * d + j];
            rhs[r] -= f * rhs[c];
        }
    }
    for (int r = d - 1; r >= 0; --r) {
        double s = rhs[r];
        for (int j = r + 1; j < d; ++j) s -= m[r * d + j] * x[j];
        x[r] = s / m[r * d + r];
    }
}

/// inverse of row-major d x d
inline void inv_small(const double* a, double* out, int d) {
    double e[4], col[4];
    for (int c = 0; c < d; ++c) {
        for (int i = 0; i < d; ++i) e[i] = (i == c) ? 1.0 : 0.0;
        solve_small(a, e, col, d);
        for (int i = 0; i < d; ++i) out[i * d + c] = col[i];
    }
}

/// eigenvalues of a symmetric d x d matrix by cyclic Jacobi; ascending order.
/// Deterministic: fixed sweep order and iteration cap.
inline void sym_eigenvalues(const double* a_in, int d, double* eig) {
    double a[16];
    for (int i = 0; i < d * d; ++i) a[i] = a_in[i];
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
        if (off < 1e-30) break;
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                double apq = a[p * d + q];
                if (apq == 0.0) continue;
                double app = a[p * d + p], aqq = a[q * d + q];
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (int k = 0; k < d; ++k) {
                    double akp = a[k * d + p], akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    double apk = a[p * d + k], aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    for (int i = 0; i < d; ++i) eig[i] = a[i * d + i];
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (eig[j] < eig[i]) std::swap(eig[i], eig[j]);
}

/// singular values of a row-major d x m matrix (d <= 4), descending:
/// square roots of the eigenvalues of A A^T.
inline void singular_values(const double* a, int d, int m, double* sv) {
    double gram[16] = {0};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int k = 0; k < m; ++k) s += a[i * m + k] * a[j * m + k];
            gram[i * d + j] = s;
        }
    double eig[4];
    sym_eigenvalues(gram, d, eig);
    for (int i = 0; i < d; ++i) {
        double e = eig[d - 1 - i];
        sv[i] = e > 0.0 ? std::sqrt(e) : 0.0;
    }
}

} // namespace spdekit
