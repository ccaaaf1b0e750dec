#include "spdekit/grid.hpp"

#include "spdekit/errors.hpp"
#include "spdekit/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace spdekit {

namespace {

// 4th-order central stencils written as integer-weighted symmetric
// differences with a single final scaling. Odd orders cancel pairwise and
// even orders subtract the center first, so constants map to exactly zero.
//   d1: (8 (f1 - f-1) - (f2 - f-2)) / (12 h)
//   d2: (16 (f1 + f-1 - 2 f0) - (f2 + f-2 - 2 f0)) / (12 h^2)
//   d3: (-13 (f1 - f-1) + 8 (f2 - f-2) - (f3 - f-3)) / (8 h^3)
//   d4: (-39 (f1 + f-1 - 2f0) + 12 (f2 + f-2 - 2f0) - (f3 + f-3 - 2f0)) / (6 h^4)
//   kind 0 also serves order-2 first derivatives: (f1 - f-1) / (2 h)

template <typename F>
void sweep_axis(const GridSpec& spec, const double* u, int axis, int half, F&& kernel,
                double* out) {
    const int n = spec.n;
    const long total = spec.total();
    long stride = 1;
    for (int a = spec.dim - 1; a > axis; --a) stride *= n;
    const long line = stride * n;
    const long nlines = total / line * stride;

    parallel_for(static_cast<std::size_t>(nlines), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t w = b0; w < b1; ++w) {
            long block = static_cast<long>(w) / stride;
            long inner = static_cast<long>(w) % stride;
            const double* base = u + block * line + inner;
            double* obase = out + block * line + inner;
            for (int i = 0; i < n; ++i) {
                double f[7];
                if (i >= half && i < n - half) {
                    for (int k = -half; k <= half; ++k) f[k + half] = base[(i + k) * stride];
                } else {
                    for (int k = -half; k <= half; ++k) {
                        int j = i + k;
                        if (j < 0) j += n;
                        else if (j >= n) j -= n;
                        f[k + half] = base[j * stride];
                    }
                }
                obase[i * stride] = kernel(f + half);
            }
        }
    }, 4096);
}

} // namespace

void derivative_axis_raw(const GridSpec& spec, const double* u, int axis, int deriv_order,
                         double* out) {
    const double h = spec.h();
    switch (deriv_order) {
        case 1: {
            double inv = 1.0 / (12.0 * h);
            sweep_axis(spec, u, axis, 2, [inv](const double* f) {
                return (8.0 * (f[1] - f[-1]) - (f[2] - f[-2])) * inv;
            }, out);
            break;
        }
        case 2: {
            double inv = 1.0 / (12.0 * h * h);
            sweep_axis(spec, u, axis, 2, [inv](const double* f) {
                double c2 = 2.0 * f[0];
                return (16.0 * (f[1] + f[-1] - c2) - (f[2] + f[-2] - c2)) * inv;
            }, out);
            break;
        }
        case 3: {
            double inv = 1.0 / (8.0 * h * h * h);
            sweep_axis(spec, u, axis, 3, [inv](const double* f) {
                return (-13.0 * (f[1] - f[-1]) + 8.0 * (f[2] - f[-2]) - (f[3] - f[-3])) * inv;
            }, out);
            break;
        }
        case 4: {
            double inv = 1.0 / (6.0 * h * h * h * h);
            sweep_axis(spec, u, axis, 3, [inv](const double* f) {
                double c2 = 2.0 * f[0];
                return (-39.0 * (f[1] + f[-1] - c2) + 12.0 * (f[2] + f[-2] - c2) -
                        (f[3] + f[-3] - c2)) * inv;
            }, out);
            break;
        }
        default: throw ValidationError("derivative order per axis limited to 4");
    }
}

void derivative_axis(const GridField& u, int axis, int deriv_order, GridField& out) {
    if (!(out.spec == u.spec)) out = GridField(u.spec);
    derivative_axis_raw(u.spec, u.v.data(), axis, deriv_order, out.v.data());
}

GridField derivative(const GridField& u, const MultiIndex& alpha) {
    int total_order = 0;
    for (int a = 0; a < u.spec.dim; ++a) total_order += alpha[a];
    if (total_order > 4) throw ValidationError("derivative: |alpha| exceeds stencil limit 4");
    GridField cur = u;
    GridField tmp(u.spec);
    for (int a = 0; a < u.spec.dim; ++a) {
        if (alpha[a] == 0) continue;
        derivative_axis(cur, a, alpha[a], tmp);
        std::swap(cur, tmp);
    }
    return cur;
}

void derivative_axis_o2(const GridField& u, int axis, GridField& out) {
    if (!(out.spec == u.spec)) out = GridField(u.spec);
    double inv = 1.0 / (2.0 * u.spec.h());
    sweep_axis(u.spec, u.v.data(), axis, 1, [inv](const double* f) {
        return (f[1] - f[-1]) * inv;
    }, out.v.data());
}

namespace {

inline void cr_weights(double f, double* w) {
    w[0] = ((-0.5 * f + 1.0) * f - 0.5) * f;
    w[1] = (1.5 * f - 2.5) * f * f + 1.0;
    w[2] = ((-1.5 * f + 2.0) * f + 0.5) * f;
    w[3] = (0.5 * f - 0.5) * f * f;
}

} // namespace

double interp_cubic_raw(const GridSpec& spec, const double* u, const double* x) {
    const int d = spec.dim;
    const int n = spec.n;
    int base[kMaxDim];
    double w[kMaxDim][4];
    for (int a = 0; a < d; ++a) {
        double s = (x[a] - spec.lo) / spec.h();
        double fl = std::floor(s);
        double f = s - fl;
        int i0 = static_cast<int>(fl);
        i0 %= n;
        if (i0 < 0) i0 += n;
        base[a] = i0;
        cr_weights(f, w[a]);
    }
    long strides[kMaxDim];
    long s = 1;
    for (int a = d - 1; a >= 0; --a) {
        strides[a] = s;
        s *= n;
    }
    int taps[kMaxDim] = {0, 0, 0, 0};
    double acc = 0.0;
    for (;;) {
        double ww = 1.0;
        long off = 0;
        for (int a = 0; a < d; ++a) {
            int idx = base[a] + taps[a] - 1;
            if (idx < 0) idx += n;
            else if (idx >= n) idx -= n;
            ww *= w[a][taps[a]];
            off += idx * strides[a];
        }
        acc += ww * u[off];
        int a = d - 1;
        while (a >= 0 && ++taps[a] == 4) {
            taps[a] = 0;
            --a;
        }
        if (a < 0) break;
    }
    return acc;
}

double interp_cubic(const GridField& u, const double* x) {
    return interp_cubic_raw(u.spec, u.v.data(), x);
}

double integral(const GridField& u) {
    double s = 0.0;
    for (double v : u.v) s += v;
    return s * std::pow(u.spec.h(), u.spec.dim);
}

double inner(const GridField& u, const GridField& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.v.size(); ++i) s += u.v[i] * w.v[i];
    return s * std::pow(u.spec.h(), u.spec.dim);
}

double norm_l2(const GridField& u) {
    double s = 0.0;
    for (double v : u.v) s += v * v;
    return std::sqrt(s * std::pow(u.spec.h(), u.spec.dim));
}

double max_abs(const GridField& u) {
    double m = 0.0;
    for (double v : u.v) m = std::max(m, std::abs(v));
    return m;
}

double seam_max_abs(const GridField& u) {
    const int d = u.spec.dim;
    double m = 0.0;
    int idx[kMaxDim];
    for (long f = 0; f < u.spec.total(); ++f) {
        u.spec.unpack(f, idx);
        bool seam = false;
        for (int a = 0; a < d; ++a)
            if (idx[a] == 0) seam = true;
        if (seam) m = std::max(m, std::abs(u[f]));
    }
    return m;
}

} // namespace spdekit
