#include "spdekit/transforms.hpp"

#include "spdekit/errors.hpp"
#include "spdekit/linalg.hpp"
#include "spdekit/parallel.hpp"

namespace spdekit {

GridField apply_L(const VectorField& sigma, const GridField& u, double t) {
    if (sigma.dim() != u.spec.dim)
        throw ValidationError("apply_L: field dimension does not match grid dimension");
    GridVectorField s = sample_field(sigma, u.spec, t);
    GridField out(u.spec), scratch(u.spec);
    apply_L_grid(s, u, out, scratch);
    return out;
}

void apply_L_grid(const GridVectorField& sigma, const GridField& u, GridField& out,
                  GridField& scratch) {
    const int d = u.spec.dim;
    if (!(out.spec == u.spec)) out = GridField(u.spec);
    if (!(scratch.spec == u.spec)) scratch = GridField(u.spec);
    std::fill(out.v.begin(), out.v.end(), 0.0);
    const long total = u.spec.total();
    for (int a = 0; a < d; ++a) {
        const double* sa = sigma.comp(a);
        // skip identically-zero components (degenerate directions stay free)
        bool zero = true;
        for (long i = 0; i < total && zero; ++i) zero = sa[i] == 0.0;
        if (zero) continue;
        derivative_axis(u, a, 1, scratch);
        parallel_for(u.v.size(), [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) out.v[i] += sa[i] * scratch.v[i];
        }, 8192);
    }
}

GridField hat_pullback(const GridField& phi, const FlowSnapshot& flow) {
    GridField out(flow.spec);
    const long total = flow.spec.total();
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        double x[kMaxDim], xf[kMaxDim];
        for (std::size_t i = i0; i < i1; ++i) {
            flow.spec.node_coords(static_cast<long>(i), x);
            flow.eval_X(x, xf);
            out.v[i] = interp_cubic(phi, xf);
        }
    }, 2048);
    return out;
}

GridField check_pushforward(const GridField& phi, const FlowSnapshot& flow,
                            const FlowInverter& inv) {
    GridField out(flow.spec);
    const long total = flow.spec.total();
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        double y[kMaxDim], x[kMaxDim];
        for (std::size_t i = i0; i < i1; ++i) {
            flow.spec.node_coords(static_cast<long>(i), y);
            inv.invert(y, x);
            out.v[i] = interp_cubic(phi, x);
        }
    }, 512);
    return out;
}

GridVectorField bar_transform(const VectorField& sigma, const FlowSnapshot& flow, double t) {
    const int d = flow.dim;
    if (sigma.dim() != d) throw ValidationError("bar_transform: dimension mismatch");
    if (flow.min_det_direct() <= 1e-10)
        throw NumericalError("bar_transform: Jacobian determinant below 1e-10");
    GridVectorField out(flow.spec, d);
    const long total = flow.spec.total();
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        double x[kMaxDim], xf[kMaxDim], dx[16], bar[kMaxDim];
        for (std::size_t i = i0; i < i1; ++i) {
            flow.spec.node_coords(static_cast<long>(i), x);
            for (int c = 0; c < d; ++c)
                xf[c] = x[c] + flow.disp[static_cast<std::size_t>(c) * total + i];
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c)
                    dx[r * d + c] = (r == c ? 1.0 : 0.0) +
                                    flow.dxmi[static_cast<std::size_t>(r * d + c) * total + i];
            auto v = sigma.value(t, std::span<const double>(xf, static_cast<std::size_t>(d)));
            solve_small(dx, v.data(), bar, d);
            for (int c = 0; c < d; ++c) out.comp(c)[i] = bar[c];
        }
    }, 1024);
    return out;
}

GridVectorField lie_bracket_grid(const GridVectorField& a, const GridVectorField& b) {
    const int d = a.dim;
    const GridSpec& spec = a.spec;
    GridVectorField out(spec, d);
    GridField comp(spec), der(spec);
    // [a,b]^i = a^j D_j b^i - b^j D_j a^i
    for (int i = 0; i < d; ++i) {
        std::copy(b.comp(i), b.comp(i) + spec.total(), comp.v.begin());
        for (int j = 0; j < d; ++j) {
            derivative_axis_o2(comp, j, der);
            const double* aj = a.comp(j);
            double* oi = out.comp(i);
            for (long q = 0; q < spec.total(); ++q) oi[q] += aj[q] * der.v[static_cast<std::size_t>(q)];
        }
        std::copy(a.comp(i), a.comp(i) + spec.total(), comp.v.begin());
        for (int j = 0; j < d; ++j) {
            derivative_axis_o2(comp, j, der);
            const double* bj = b.comp(j);
            double* oi = out.comp(i);
            for (long q = 0; q < spec.total(); ++q) oi[q] -= bj[q] * der.v[static_cast<std::size_t>(q)];
        }
    }
    return out;
}

GridVectorField sample_field(const VectorField& f, const GridSpec& spec, double t) {
    GridVectorField out(spec, f.dim());
    const long total = spec.total();
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        double x[kMaxDim];
        for (std::size_t i = i0; i < i1; ++i) {
            spec.node_coords(static_cast<long>(i), x);
            auto v = f.value(t, std::span<const double>(x, static_cast<std::size_t>(spec.dim)));
            for (int c = 0; c < f.dim(); ++c) out.comp(c)[i] = v[static_cast<std::size_t>(c)];
        }
    }, 2048);
    return out;
}

GridField sample_scalar(const SegmentedExpr& e, const GridSpec& spec, double t,
                        const VectorFieldSet* bump_from) {
    GridField out(spec);
    if (e.empty()) return out;
    const long total = spec.total();
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        double x[kMaxDim];
        for (std::size_t i = i0; i < i1; ++i) {
            spec.node_coords(static_cast<long>(i), x);
            std::span<const double> xs(x, static_cast<std::size_t>(spec.dim));
            double factor = bump_from ? bump_from->source_factor(xs) : 1.0;
            out.v[i] = factor == 0.0 ? 0.0 : factor * e.eval(t, xs);
        }
    }, 2048);
    return out;
}

} // namespace spdekit
