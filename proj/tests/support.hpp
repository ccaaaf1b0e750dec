#pragma once

#include "spdekit/rng.hpp"
#include "spdekit/scenario.hpp"
#include "spdekit/spde.hpp"
#include "spdekit/vector_field.hpp"

#include <functional>
#include <string>
#include <vector>

namespace testkit {

using namespace spdekit;

// ---------------------------------------------------------------------------
// finite-difference oracles (independent of the jet machinery)
// ---------------------------------------------------------------------------

inline double fd_partial(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> x, int axis, double h) {
    x[static_cast<std::size_t>(axis)] += h;
    double fp = f(x);
    x[static_cast<std::size_t>(axis)] -= 2 * h;
    double fm = f(x);
    return (fp - fm) / (2 * h);
}

inline double fd_second(const std::function<double(const std::vector<double>&)>& f,
                        std::vector<double> x, int i, int j, double h) {
    if (i == j) {
        double f0 = f(x);
        x[static_cast<std::size_t>(i)] += h;
        double fp = f(x);
        x[static_cast<std::size_t>(i)] -= 2 * h;
        double fm = f(x);
        return (fp - 2 * f0 + fm) / (h * h);
    }
    auto g = [&](std::vector<double> y, double si, double sj) {
        y[static_cast<std::size_t>(i)] += si * h;
        y[static_cast<std::size_t>(j)] += sj * h;
        return f(y);
    };
    return (g(x, 1, 1) - g(x, 1, -1) - g(x, -1, 1) + g(x, -1, -1)) / (4 * h * h);
}

// ---------------------------------------------------------------------------
// deterministic random inputs
// ---------------------------------------------------------------------------

/// tame random expression: bounded coefficients, mild nonlinearity
inline std::string random_expr(Rng& rng, int d) {
    auto coef = [&] {
        double c = rng.uniform(-1.0, 1.0);
        char buf[40];
        snprintf(buf, sizeof(buf), "%.6f", c);
        std::string s(buf);
        if (!s.empty() && s[0] == '-') return "(0 - " + s.substr(1) + ")";
        return s;
    };
    auto var = [&] { return "x" + std::to_string(1 + static_cast<int>(rng.uniform() * d)); };
    std::string s = coef();
    int terms = 1 + static_cast<int>(rng.uniform() * 3);
    for (int i = 0; i < terms; ++i) {
        double pick = rng.uniform();
        if (pick < 0.35)
            s += " + " + coef() + "*" + var();
        else if (pick < 0.6)
            s += " + " + coef() + "*sin(" + var() + ")";
        else if (pick < 0.8)
            s += " + " + coef() + "*cos(" + var() + "*" + var() + ")";
        else
            s += " + " + coef() + "*" + var() + "*" + var();
    }
    return s;
}

inline SegmentedExpr expr(const std::string& src, int d) {
    return SegmentedExpr(ExprTree::parse(src, d));
}

inline VectorField random_field(Rng& rng, int d, const std::string& label) {
    std::vector<SegmentedExpr> comps;
    for (int i = 0; i < d; ++i) comps.push_back(expr(random_expr(rng, d), d));
    return VectorField::from_expressions(std::move(comps), label);
}

/// field set from component source strings; empty string means zero
inline VectorFieldSet make_set(int d, int d1, int d2, double R0,
                               const std::vector<std::vector<std::string>>& sigma,
                               bool cutoff = true, const std::string& c = "",
                               const std::string& f = "",
                               const std::vector<std::string>& nu = {},
                               const std::vector<std::string>& g = {}) {
    std::vector<std::vector<SegmentedExpr>> sig;
    for (const auto& comps : sigma) {
        std::vector<SegmentedExpr> row;
        for (const auto& src : comps)
            row.push_back(src.empty() ? SegmentedExpr(ExprTree::constant(d, 0.0)) : expr(src, d));
        sig.push_back(std::move(row));
    }
    std::vector<SegmentedExpr> nus, gs;
    for (int k = 0; k < d1; ++k) {
        std::string ns = k < static_cast<int>(nu.size()) ? nu[static_cast<std::size_t>(k)] : "";
        std::string gsrc = k < static_cast<int>(g.size()) ? g[static_cast<std::size_t>(k)] : "";
        nus.push_back(ns.empty() ? SegmentedExpr() : expr(ns, d));
        gs.push_back(gsrc.empty() ? SegmentedExpr() : expr(gsrc, d));
    }
    return make_field_set(d, d1, d2, R0, std::move(sig),
                          c.empty() ? SegmentedExpr() : expr(c, d), std::move(nus),
                          f.empty() ? SegmentedExpr() : expr(f, d), std::move(gs), cutoff);
}

inline SpdeProblem make_problem(VectorFieldSet set, const std::string& u0, double T, double dt,
                                int nodes) {
    SpdeProblem p;
    int d = set.d;
    double R0 = set.R0;
    p.set = std::move(set);
    p.u0 = expr(u0, d);
    p.T = T;
    p.dt = dt;
    p.grid = SpdeProblem::box_grid(d, R0, nodes);
    return p;
}

/// least-squares slope of log(err) against log(scale)
inline double fit_order(const std::vector<double>& scales, const std::vector<double>& errs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = static_cast<int>(scales.size());
    for (int i = 0; i < n; ++i) {
        double x = std::log(scales[static_cast<std::size_t>(i)]);
        double y = std::log(std::max(errs[static_cast<std::size_t>(i)], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace testkit
