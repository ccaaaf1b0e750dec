#pragma once

#include "spdekit/errors.hpp"
#include "spdekit/multi_index.hpp"

#include <cmath>
#include <cstring>
#include <vector>

namespace spdekit {

// Raw kernels on coefficient buffers (length table.size(), entries are the
// derivative values D^alpha). The compiled expression evaluator runs on these
// directly; the Jet class below is the convenient wrapper.
namespace jetk {

inline void mul(const MultiIndexTable& t, const double* a, const double* b, double* out) {
    int n = t.size();
    for (int i = 0; i < n; ++i) out[i] = 0.0;
    for (const auto& p : t.prod_terms()) out[p.out] += p.w * a[p.a] * b[p.b];
}

/// out = sum_j coeff[j] * (inner - inner[0])^j, Horner. coeff[j] must be the
/// univariate Taylor coefficient phi^(j)(inner[0]) / j!. delta and tmp are
/// caller-provided buffers of table size; none of the buffers may alias.
inline void compose(const MultiIndexTable& t, const double* inner, const double* coeff,
                    double* out, double* delta, double* tmp) {
    int n = t.size();
    int order = t.order();
    std::memcpy(delta, inner, sizeof(double) * static_cast<std::size_t>(n));
    delta[0] = 0.0;
    for (int i = 0; i < n; ++i) out[i] = 0.0;
    out[0] = coeff[order];
    for (int j = order - 1; j >= 0; --j) {
        mul(t, out, delta, tmp);
        std::memcpy(out, tmp, sizeof(double) * static_cast<std::size_t>(n));
        out[0] += coeff[j];
    }
}

// Univariate Taylor coefficient sequences phi^(j)(u0)/j!, j = 0..order.

inline void coeff_sin(double u0, int order, double* c) {
    double table[4] = {std::sin(u0), std::cos(u0), -std::sin(u0), -std::cos(u0)};
    double fact = 1.0;
    for (int j = 0; j <= order; ++j) {
        if (j > 0) fact *= j;
        c[j] = table[j & 3] / fact;
    }
}

inline void coeff_cos(double u0, int order, double* c) {
    double table[4] = {std::cos(u0), -std::sin(u0), -std::cos(u0), std::sin(u0)};
    double fact = 1.0;
    for (int j = 0; j <= order; ++j) {
        if (j > 0) fact *= j;
        c[j] = table[j & 3] / fact;
    }
}

inline void coeff_exp(double u0, int order, double* c) {
    double e = std::exp(u0);
    c[0] = e;
    for (int j = 1; j <= order; ++j) c[j] = c[j - 1] / j;
}

inline void coeff_sqrt(double u0, int order, double* c) {
    if (!(u0 > 0.0)) throw NumericalError("sqrt of nonpositive value in jet evaluation");
    c[0] = std::sqrt(u0);
    for (int j = 1; j <= order; ++j) c[j] = c[j - 1] * (1.5 - j) / (j * u0);
}

inline void coeff_recip(double u0, int order, double* c) {
    if (u0 == 0.0) throw NumericalError("division by zero in jet evaluation");
    c[0] = 1.0 / u0;
    for (int j = 1; j <= order; ++j) c[j] = -c[j - 1] / u0;
}

/// tanh via the series recurrence for y' = 1 - y^2:
/// (j+1) c[j+1] = -sum_i c[i] c[j-i] for j >= 1, c[1] = 1 - c[0]^2.
inline void coeff_tanh(double u0, int order, double* c) {
    c[0] = std::tanh(u0);
    if (order >= 1) c[1] = 1.0 - c[0] * c[0];
    for (int j = 1; j < order; ++j) {
        double conv = 0.0;
        for (int i = 0; i <= j; ++i) conv += c[i] * c[j - i];
        c[j + 1] = -conv / (j + 1);
    }
}

} // namespace jetk

/// Truncated Taylor expansion of a scalar quantity at a point: entry alpha is
/// the derivative value D^alpha evaluated there, |alpha| <= order. Immutable
/// in spirit; arithmetic returns new values.
class Jet {
public:
    Jet(int dim, int order)
        : tab_(&MultiIndexTable::get(dim, order)), c_(static_cast<std::size_t>(tab_->size()), 0.0) {}

    static Jet constant(int dim, int order, double v) {
        Jet j(dim, order);
        j.c_[0] = v;
        return j;
    }

    static Jet variable(int dim, int order, int axis, double v) {
        Jet j(dim, order);
        j.c_[0] = v;
        if (order >= 1) {
            MultiIndex e{};
            e[axis] = 1;
            j.c_[static_cast<std::size_t>(j.tab_->index_of(e))] = 1.0;
        }
        return j;
    }

    int dim() const { return tab_->dim(); }
    int order() const { return tab_->order(); }
    int size() const { return tab_->size(); }
    const MultiIndexTable& table() const { return *tab_; }

    double value() const { return c_[0]; }

    double deriv(const MultiIndex& a) const {
        int i = tab_->index_of(a);
        if (i < 0) throw ValidationError("jet: multi-index outside stored order");
        return c_[static_cast<std::size_t>(i)];
    }

    double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
    double* data() { return c_.data(); }
    const double* data() const { return c_.data(); }

    /// jet of D_axis(this) at one order lower
    Jet shifted(int axis) const {
        Jet out(dim(), order() - 1);
        const auto& sh = tab_->shifted(axis);
        for (std::size_t i = 0; i < sh.size(); ++i) out.c_[i] = c_[static_cast<std::size_t>(sh[i])];
        return out;
    }

    /// prefix truncation to order q <= order()
    Jet truncated(int q) const {
        Jet out(dim(), q);
        std::memcpy(out.c_.data(), c_.data(), sizeof(double) * out.c_.size());
        return out;
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet& operator*=(double s) {
        for (double& v : c_) v *= s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator-(Jet a) {
        for (double& v : a.c_) v = -v;
        return a;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet out(a.dim(), a.order());
        jetk::mul(*a.tab_, a.data(), b.data(), out.data());
        return out;
    }

private:
    const MultiIndexTable* tab_;
    std::vector<double> c_;
};

inline Jet jet_compose(const Jet& inner, const double* coeff) {
    Jet out(inner.dim(), inner.order());
    std::vector<double> scratch(2 * static_cast<std::size_t>(inner.size()));
    jetk::compose(inner.table(), inner.data(), coeff, out.data(), scratch.data(),
                  scratch.data() + inner.size());
    return out;
}

inline Jet jet_sin(const Jet& f) {
    std::vector<double> c(static_cast<std::size_t>(f.order()) + 1);
    jetk::coeff_sin(f.value(), f.order(), c.data());
    return jet_compose(f, c.data());
}
inline Jet jet_cos(const Jet& f) {
    std::vector<double> c(static_cast<std::size_t>(f.order()) + 1);
    jetk::coeff_cos(f.value(), f.order(), c.data());
    return jet_compose(f, c.data());
}
inline Jet jet_exp(const Jet& f) {
    std::vector<double> c(static_cast<std::size_t>(f.order()) + 1);
    jetk::coeff_exp(f.value(), f.order(), c.data());
    return jet_compose(f, c.data());
}
inline Jet jet_tanh(const Jet& f) {
    std::vector<double> c(static_cast<std::size_t>(f.order()) + 1);
    jetk::coeff_tanh(f.value(), f.order(), c.data());
    return jet_compose(f, c.data());
}
inline Jet jet_sqrt(const Jet& f) {
    std::vector<double> c(static_cast<std::size_t>(f.order()) + 1);
    jetk::coeff_sqrt(f.value(), f.order(), c.data());
    return jet_compose(f, c.data());
}
inline Jet jet_recip(const Jet& f) {
    std::vector<double> c(static_cast<std::size_t>(f.order()) + 1);
    jetk::coeff_recip(f.value(), f.order(), c.data());
    return jet_compose(f, c.data());
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * jet_recip(b); }

inline Jet jet_pow_int(const Jet& base, int n) {
    if (n < 0) return jet_recip(jet_pow_int(base, -n));
    Jet acc = Jet::constant(base.dim(), base.order(), 1.0);
    Jet p = base;
    int e = n;
    while (e > 0) {
        if (e & 1) acc = acc * p;
        p = p * p;
        e >>= 1;
    }
    return acc;
}

} // namespace spdekit
