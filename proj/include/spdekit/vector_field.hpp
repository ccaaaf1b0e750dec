#pragma once

#include "spdekit/expr.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace spdekit {

/// R^d-valued field on (t, x), evaluated as jets of any requested order so
/// that derived fields (brackets, drift corrections, cutoff products) stay
/// exactly differentiable to the order downstream consumers ask for.
///
/// Jacobian convention: J[i*d + j] = D_j comp_i.
class VectorField {
public:
    using EvalFn = std::function<void(double t, const double* x, int order, Jet* out)>;

    VectorField() = default;
    VectorField(int dim, std::string label, EvalFn fn)
        : dim_(dim), label_(std::move(label)), fn_(std::move(fn)) {}

    static VectorField from_expressions(std::vector<SegmentedExpr> comps, std::string label);
    static VectorField zero(int dim, std::string label = "0");

    int dim() const { return dim_; }
    const std::string& label() const { return label_; }
    bool valid() const { return static_cast<bool>(fn_); }

    /// fills out[0..dim) with order-`order` jets of the components at (t, x)
    void eval_jets(double t, const double* x, int order, Jet* out) const {
        fn_(t, x, order, out);
    }

    std::vector<Jet> jets(double t, std::span<const double> x, int order) const;
    std::vector<double> value(double t, std::span<const double> x) const;
    /// row-major d x d, entry (i, j) = D_j comp_i
    std::vector<double> jacobian(double t, std::span<const double> x) const;

private:
    int dim_ = 0;
    std::string label_;
    EvalFn fn_;
};

/// [a, b]^i = a^j D_j b^i - b^j D_j a^i, computed through jets one order above
/// the requested one; nesting to any depth stays exact.
VectorField lie_bracket(const VectorField& a, const VectorField& b);

/// Smooth radial cutoff: 1 on |x| <= r0, 0 on |x| >= rcut, built from the
/// exp(-1/s) profile as a function of |x|^2 so jets are exact everywhere.
double cutoff_value(double rho, double r0, double rcut); // rho = |x|^2
Jet cutoff_jet(int dim, int order, const double* x, double r0, double rcut);

/// Kernel form of cutoff_jet writing into out (table size for (dim, order))
/// using work (>= 6 * table size + order + 1 doubles). Returns +1 if the
/// point is in the identity region (out untouched), -1 in the zero region
/// (out untouched), 0 if out holds the transition jet.
int cutoff_jet_into(const MultiIndexTable& tab, const double* x, double r0, double rcut,
                    double* out, double* work);

/// field multiplied by the radial cutoff; evaluation short-circuits outside
/// the support so the raw field is never touched there
VectorField with_cutoff(const VectorField& raw, double r0, double rcut);

/// Coefficient family of the model equation: sigma^0..sigma^{d1+d2}, c,
/// nu^k, f, g^k on a ball of radius R0. When cutoff is enabled, every sigma
/// (and, at sampling time, f and g) is multiplied by the bump that is 1 on
/// B_{R0} and 0 outside B_{Rcut}, Rcut = 2 R0.
struct VectorFieldSet {
    int d = 0, d1 = 0, d2 = 0;
    double R0 = 1.0;
    double Rcut = 2.0;
    bool cutoff_enabled = true;

    std::vector<VectorField> sigma;     // size d1 + d2 + 1, cutoff applied
    std::vector<VectorField> sigma_raw; // same, before cutoff
    std::vector<std::vector<SegmentedExpr>> sigma_exprs; // raw component expressions
    SegmentedExpr c;
    std::vector<SegmentedExpr> nu; // size d1
    SegmentedExpr f;
    std::vector<SegmentedExpr> g; // size d1

    const VectorField& sig(int k) const { return sigma[static_cast<std::size_t>(k)]; }

    /// bump factor applied to source terms f, g at sampling points
    double source_factor(std::span<const double> x) const;

    /// evaluates every field at a coarse sweep of the enclosing box and
    /// [0, T]; throws ValidationError naming the offending field on failure
    void validate(double T) const;
};

VectorFieldSet make_field_set(int d, int d1, int d2, double R0,
                              std::vector<std::vector<SegmentedExpr>> sigma_components,
                              SegmentedExpr c, std::vector<SegmentedExpr> nu, SegmentedExpr f,
                              std::vector<SegmentedExpr> g, bool cutoff = true);

/// flow drift b = sigma^0 - (1/2) sum_{k=1}^{d1} (D sigma^k) sigma^k,
/// built from the set's cutoff fields
VectorField drift_correction(const VectorFieldSet& set);

} // namespace spdekit
