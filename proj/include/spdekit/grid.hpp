#pragma once

#include "spdekit/multi_index.hpp"

#include <span>
#include <vector>

namespace spdekit {

/// Uniform periodic lattice on the cube [lo, lo + side)^dim, n nodes per
/// axis, identical spacing h = side/n on every axis. Flat index: first axis
/// slowest, last axis contiguous.
struct GridSpec {
    int dim = 1;
    double lo = -1.0;
    double side = 2.0;
    int n = 16;

    double h() const { return side / n; }
    long total() const {
        long t = 1;
        for (int i = 0; i < dim; ++i) t *= n;
        return t;
    }
    double coord(int i) const { return lo + i * h(); }

    long index(const int* idx) const {
        long f = 0;
        for (int a = 0; a < dim; ++a) f = f * n + idx[a];
        return f;
    }
    void unpack(long flat, int* idx) const {
        for (int a = dim - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % n);
            flat /= n;
        }
    }
    void node_coords(long flat, double* x) const {
        for (int a = dim - 1; a >= 0; --a) {
            x[a] = coord(static_cast<int>(flat % n));
            flat /= n;
        }
    }
    bool operator==(const GridSpec& o) const {
        return dim == o.dim && lo == o.lo && side == o.side && n == o.n;
    }
};

/// scalar samples on a GridSpec lattice
struct GridField {
    GridSpec spec;
    std::vector<double> v;

    GridField() = default;
    explicit GridField(const GridSpec& s) : spec(s), v(static_cast<std::size_t>(s.total()), 0.0) {}

    double& operator[](long i) { return v[static_cast<std::size_t>(i)]; }
    double operator[](long i) const { return v[static_cast<std::size_t>(i)]; }
    long size() const { return spec.total(); }
};

/// d-vector samples on a lattice, component-major: comp(i) is a contiguous
/// block of spec.total() values
struct GridVectorField {
    GridSpec spec;
    int dim = 0;
    std::vector<double> v;

    GridVectorField() = default;
    GridVectorField(const GridSpec& s, int d)
        : spec(s), dim(d), v(static_cast<std::size_t>(s.total()) * static_cast<std::size_t>(d), 0.0) {}

    double* comp(int i) { return v.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(spec.total()); }
    const double* comp(int i) const {
        return v.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(spec.total());
    }
};

/// single-axis periodic derivative, 4th-order central stencils, deriv order 1..4
void derivative_axis(const GridField& u, int axis, int deriv_order, GridField& out);
/// same on a raw buffer sharing u's spec
void derivative_axis_raw(const GridSpec& spec, const double* u, int axis, int deriv_order,
                         double* out);

/// D^alpha by composing per-axis stencils; requires |alpha| <= 4
GridField derivative(const GridField& u, const MultiIndex& alpha);

/// Second-order central first derivative along an axis (used by the discrete
/// bracket identity, whose tolerance is stated at order h^2).
void derivative_axis_o2(const GridField& u, int axis, GridField& out);

/// periodic tensor cubic (Catmull-Rom) interpolation; exact at nodes
double interp_cubic(const GridField& u, const double* x);
double interp_cubic_raw(const GridSpec& spec, const double* u, const double* x);

/// lattice quadrature sum(u) h^d
double integral(const GridField& u);
/// h^d sum(u w)
double inner(const GridField& u, const GridField& w);
double norm_l2(const GridField& u);
double max_abs(const GridField& u);

/// max |u| over the wrap seam (nodes with any index component 0)
double seam_max_abs(const GridField& u);

} // namespace spdekit
