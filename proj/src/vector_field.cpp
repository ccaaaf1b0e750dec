#include "spdekit/vector_field.hpp"

#include "spdekit/errors.hpp"

#include <cmath>

namespace spdekit {

VectorField VectorField::from_expressions(std::vector<SegmentedExpr> comps, std::string label) {
    if (comps.empty()) throw ValidationError("vector field needs at least one component");
    int dim = comps.front().dim();
    for (const auto& c : comps)
        if (c.dim() != dim) throw ValidationError("vector field components disagree on dimension");
    auto shared = std::make_shared<std::vector<SegmentedExpr>>(std::move(comps));
    return VectorField(dim, std::move(label),
                       [shared, dim](double t, const double* x, int order, Jet* out) {
                           for (int i = 0; i < dim; ++i)
                               out[i] = (*shared)[static_cast<std::size_t>(i)].eval_jet(
                                   t, std::span<const double>(x, static_cast<std::size_t>(dim)),
                                   order);
                       });
}

VectorField VectorField::zero(int dim, std::string label) {
    return VectorField(dim, std::move(label), [dim](double, const double*, int order, Jet* out) {
        for (int i = 0; i < dim; ++i) out[i] = Jet(dim, order);
    });
}

std::vector<Jet> VectorField::jets(double t, std::span<const double> x, int order) const {
    std::vector<Jet> out(static_cast<std::size_t>(dim_), Jet(dim_, order));
    fn_(t, x.data(), order, out.data());
    return out;
}

std::vector<double> VectorField::value(double t, std::span<const double> x) const {
    auto j = jets(t, x, 0);
    std::vector<double> v(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) v[static_cast<std::size_t>(i)] = j[static_cast<std::size_t>(i)].value();
    return v;
}

std::vector<double> VectorField::jacobian(double t, std::span<const double> x) const {
    auto j = jets(t, x, 1);
    std::vector<double> m(static_cast<std::size_t>(dim_ * dim_));
    for (int i = 0; i < dim_; ++i) {
        for (int a = 0; a < dim_; ++a) {
            MultiIndex e{};
            e[a] = 1;
            m[static_cast<std::size_t>(i * dim_ + a)] = j[static_cast<std::size_t>(i)].deriv(e);
        }
    }
    return m;
}

VectorField lie_bracket(const VectorField& a, const VectorField& b) {
    if (a.dim() != b.dim())
        throw ValidationError("lie_bracket: dimension mismatch between " + a.label() + " and " +
                              b.label());
    int d = a.dim();
    std::string label = "[" + a.label() + "," + b.label() + "]";
    auto pa = std::make_shared<VectorField>(a);
    auto pb = std::make_shared<VectorField>(b);
    return VectorField(d, label, [pa, pb, d](double t, const double* x, int order, Jet* out) {
        std::vector<Jet> ja(static_cast<std::size_t>(d), Jet(d, order + 1));
        std::vector<Jet> jb(static_cast<std::size_t>(d), Jet(d, order + 1));
        pa->eval_jets(t, x, order + 1, ja.data());
        pb->eval_jets(t, x, order + 1, jb.data());
        std::vector<Jet> ta, tb;
        ta.reserve(static_cast<std::size_t>(d));
        tb.reserve(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            ta.push_back(ja[static_cast<std::size_t>(j)].truncated(order));
            tb.push_back(jb[static_cast<std::size_t>(j)].truncated(order));
        }
        for (int i = 0; i < d; ++i) {
            Jet acc(d, order);
            for (int j = 0; j < d; ++j) {
                acc += ta[static_cast<std::size_t>(j)] * jb[static_cast<std::size_t>(i)].shifted(j);
                acc -= tb[static_cast<std::size_t>(j)] * ja[static_cast<std::size_t>(i)].shifted(j);
            }
            out[i] = acc;
        }
    });
}

namespace {

// p(s) = exp(-1/s) for s > 0. Below s_eps the value underflows to exactly 0,
// so the transition branches are cut there to keep jet arithmetic finite.
constexpr double kCutoffEps = 2e-3;

} // namespace

double cutoff_value(double rho, double r0, double rcut) {
    double denom = rcut * rcut - r0 * r0;
    double s = (rcut * rcut - rho) / denom;
    if (s >= 1.0 - kCutoffEps) return 1.0;
    if (s <= kCutoffEps) return 0.0;
    double ps = std::exp(-1.0 / s);
    double qs = std::exp(-1.0 / (1.0 - s));
    return ps / (ps + qs);
}

Jet cutoff_jet(int dim, int order, const double* x, double r0, double rcut) {
    double rho = 0.0;
    for (int i = 0; i < dim; ++i) rho += x[i] * x[i];
    double denom = rcut * rcut - r0 * r0;
    double s0 = (rcut * rcut - rho) / denom;
    if (s0 >= 1.0 - kCutoffEps) return Jet::constant(dim, order, 1.0);
    if (s0 <= kCutoffEps) return Jet(dim, order);

    // jet of s = (rcut^2 - |x|^2)/denom: quadratic, written directly
    Jet s(dim, order);
    s[0] = s0;
    const auto& tab = s.table();
    if (order >= 1) {
        for (int i = 0; i < dim; ++i) {
            MultiIndex e{};
            e[i] = 1;
            s[tab.index_of(e)] = -2.0 * x[i] / denom;
        }
    }
    if (order >= 2) {
        for (int i = 0; i < dim; ++i) {
            MultiIndex e{};
            e[i] = 2;
            s[tab.index_of(e)] = -2.0 / denom;
        }
    }
    Jet one_minus_s = Jet::constant(dim, order, 1.0) - s;
    Jet ps = jet_exp(-jet_recip(s));
    Jet qs = jet_exp(-jet_recip(one_minus_s));
    return ps / (ps + qs);
}

int cutoff_jet_into(const MultiIndexTable& tab, const double* x, double r0, double rcut,
                    double* out, double* work) {
    const int d = tab.dim();
    const int order = tab.order();
    const int n = tab.size();
    double rho = 0.0;
    for (int i = 0; i < d; ++i) rho += x[i] * x[i];
    double denom = rcut * rcut - r0 * r0;
    double s0 = (rcut * rcut - rho) / denom;
    if (s0 >= 1.0 - kCutoffEps) return +1;
    if (s0 <= kCutoffEps) return -1;

    // work layout: s | oms | ps | qs | delta | tmp | coeff
    double* s = work;
    double* oms = work + n;
    double* ps = work + 2 * n;
    double* qs = work + 3 * n;
    double* delta = work + 4 * n;
    double* tmp = work + 5 * n;
    double* coeff = work + 6 * n;

    for (int i = 0; i < n; ++i) s[i] = 0.0;
    s[0] = s0;
    if (order >= 1)
        for (int i = 0; i < d; ++i) s[1 + i] = -2.0 * x[i] / denom; // e_i sits at index 1+i
    if (order >= 2) {
        for (int i = 0; i < d; ++i) {
            MultiIndex e{};
            e[i] = 2;
            s[tab.index_of(e)] = -2.0 / denom;
        }
    }
    for (int i = 0; i < n; ++i) oms[i] = -s[i];
    oms[0] = 1.0 - s0;

    // ps = exp(-1/s)
    jetk::coeff_recip(s[0], order, coeff);
    jetk::compose(tab, s, coeff, tmp, delta, ps); // tmp = 1/s (ps used as scratch)
    for (int i = 0; i < n; ++i) tmp[i] = -tmp[i];
    jetk::coeff_exp(tmp[0], order, coeff);
    jetk::compose(tab, tmp, coeff, ps, delta, qs); // ps = exp(-1/s)
    // qs = exp(-1/(1-s))
    jetk::coeff_recip(oms[0], order, coeff);
    jetk::compose(tab, oms, coeff, tmp, delta, qs);
    for (int i = 0; i < n; ++i) tmp[i] = -tmp[i];
    jetk::coeff_exp(tmp[0], order, coeff);
    jetk::compose(tab, tmp, coeff, qs, delta, oms); // qs = exp(-1/(1-s)); oms now scratch
    // out = ps / (ps + qs)
    for (int i = 0; i < n; ++i) tmp[i] = ps[i] + qs[i];
    jetk::coeff_recip(tmp[0], order, coeff);
    jetk::compose(tab, tmp, coeff, oms, delta, s); // oms = 1/(ps+qs)
    jetk::mul(tab, ps, oms, out);
    return 0;
}

VectorField with_cutoff(const VectorField& raw, double r0, double rcut) {
    int d = raw.dim();
    auto praw = std::make_shared<VectorField>(raw);
    return VectorField(d, raw.label(), [praw, d, r0, rcut](double t, const double* x, int order,
                                                           Jet* out) {
        double rho = 0.0;
        for (int i = 0; i < d; ++i) rho += x[i] * x[i];
        double denom = rcut * rcut - r0 * r0;
        double s = (rcut * rcut - rho) / denom;
        if (s <= kCutoffEps) {
            for (int i = 0; i < d; ++i) out[i] = Jet(d, order);
            return;
        }
        praw->eval_jets(t, x, order, out);
        if (s >= 1.0 - kCutoffEps) return;
        Jet zeta = cutoff_jet(d, order, x, r0, rcut);
        for (int i = 0; i < d; ++i) out[i] = out[i] * zeta;
    });
}

double VectorFieldSet::source_factor(std::span<const double> x) const {
    if (!cutoff_enabled) return 1.0;
    double rho = 0.0;
    for (double v : x) rho += v * v;
    return cutoff_value(rho, R0, Rcut);
}

void VectorFieldSet::validate(double T) const {
    const int probes = 5;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<Jet> jets(static_cast<std::size_t>(d), Jet(d, 1));
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (double t : {0.0, 0.5 * T, T}) {
        std::fill(idx.begin(), idx.end(), 0);
        for (;;) {
            for (int i = 0; i < d; ++i)
                x[static_cast<std::size_t>(i)] =
                    -2.0 * R0 + 4.0 * R0 * idx[static_cast<std::size_t>(i)] / (probes - 1);
            for (std::size_t k = 0; k < sigma.size(); ++k) {
                try {
                    sigma[k].eval_jets(t, x.data(), 1, jets.data());
                } catch (const std::exception& e) {
                    throw ValidationError("field sigma" + std::to_string(k) +
                                          " not evaluable on the enclosing box: " + e.what());
                }
            }
            auto check_scalar = [&](const SegmentedExpr& s, const std::string& name) {
                if (s.empty()) return;
                try {
                    s.eval(t, x);
                } catch (const std::exception& e) {
                    throw ValidationError("field " + name +
                                          " not evaluable on the enclosing box: " + e.what());
                }
            };
            check_scalar(c, "c");
            check_scalar(f, "f");
            for (std::size_t k = 0; k < nu.size(); ++k)
                check_scalar(nu[k], "nu" + std::to_string(k + 1));
            for (std::size_t k = 0; k < g.size(); ++k)
                check_scalar(g[k], "g" + std::to_string(k + 1));
            int axis = 0;
            while (axis < d && ++idx[static_cast<std::size_t>(axis)] == probes) {
                idx[static_cast<std::size_t>(axis)] = 0;
                ++axis;
            }
            if (axis == d) break;
        }
    }
}

VectorFieldSet make_field_set(int d, int d1, int d2, double R0,
                              std::vector<std::vector<SegmentedExpr>> sigma_components,
                              SegmentedExpr c, std::vector<SegmentedExpr> nu, SegmentedExpr f,
                              std::vector<SegmentedExpr> g, bool cutoff) {
    if (d < 1 || d > kMaxDim) throw ValidationError("field set: d outside supported range");
    if (d1 < 1 || d2 < 1) throw ValidationError("field set: d1 and d2 must be >= 1");
    if (static_cast<int>(sigma_components.size()) != d1 + d2 + 1)
        throw ValidationError("field set: expected " + std::to_string(d1 + d2 + 1) +
                              " sigma fields, got " + std::to_string(sigma_components.size()));
    if (static_cast<int>(nu.size()) != d1)
        throw ValidationError("field set: expected " + std::to_string(d1) + " nu entries");
    if (static_cast<int>(g.size()) != d1)
        throw ValidationError("field set: expected " + std::to_string(d1) + " g entries");
    if (!(R0 > 0.0)) throw ValidationError("field set: R0 must be positive");

    VectorFieldSet set;
    set.d = d;
    set.d1 = d1;
    set.d2 = d2;
    set.R0 = R0;
    set.Rcut = 2.0 * R0;
    set.cutoff_enabled = cutoff;
    set.c = std::move(c);
    set.nu = std::move(nu);
    set.f = std::move(f);
    set.g = std::move(g);

    for (int k = 0; k <= d1 + d2; ++k) {
        auto& comps = sigma_components[static_cast<std::size_t>(k)];
        if (static_cast<int>(comps.size()) != d)
            throw ValidationError("field set: sigma" + std::to_string(k) + " needs " +
                                  std::to_string(d) + " components");
        VectorField raw = VectorField::from_expressions(comps, "s" + std::to_string(k));
        set.sigma_raw.push_back(raw);
        set.sigma.push_back(cutoff ? with_cutoff(raw, set.R0, set.Rcut) : raw);
        set.sigma_exprs.push_back(std::move(comps));
    }
    return set;
}

VectorField drift_correction(const VectorFieldSet& set) {
    int d = set.d;
    int d1 = set.d1;
    auto sigmas = std::make_shared<std::vector<VectorField>>(set.sigma.begin(),
                                                             set.sigma.begin() + d1 + 1);
    return VectorField(d, "b", [sigmas, d, d1](double t, const double* x, int order, Jet* out) {
        std::vector<Jet> s0(static_cast<std::size_t>(d), Jet(d, order));
        (*sigmas)[0].eval_jets(t, x, order, s0.data());
        for (int i = 0; i < d; ++i) out[i] = s0[static_cast<std::size_t>(i)];
        std::vector<Jet> sk(static_cast<std::size_t>(d), Jet(d, order + 1));
        for (int k = 1; k <= d1; ++k) {
            (*sigmas)[static_cast<std::size_t>(k)].eval_jets(t, x, order + 1, sk.data());
            for (int i = 0; i < d; ++i) {
                Jet acc(d, order);
                for (int j = 0; j < d; ++j)
                    acc += sk[static_cast<std::size_t>(j)].truncated(order) *
                           sk[static_cast<std::size_t>(i)].shifted(j);
                out[i] -= 0.5 * acc;
            }
        }
    });
}

} // namespace spdekit
