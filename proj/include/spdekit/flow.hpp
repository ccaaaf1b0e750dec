#pragma once

#include "spdekit/brownian.hpp"
#include "spdekit/grid.hpp"
#include "spdekit/vector_field.hpp"

#include <memory>

namespace spdekit {

/// Lattice snapshot of the flow map at one time: displacement form so the
/// periodic interpolant sees compactly supported data (X = x outside B_rcut).
struct FlowSnapshot {
    GridSpec spec;
    double t = 0.0;
    double rcut = 0.0;
    int dim = 0;
    std::vector<double> disp;        // dim x total, comp-major: X(x) - x
    std::vector<double> dxmi;        // dim^2 x total, entry r*dim+c: DX - I
    std::vector<double> det_direct;  // total
    std::vector<double> det_formula; // total

    void eval_X(const double* x, double* out) const;
    void eval_DX(const double* x, double* out) const; // row-major dim x dim
    double min_det_direct() const;
    double min_det_formula() const;
    /// lattice minimum over nodes of the smallest singular value of DX
    double min_singular_value() const;
};

/// Newton inversion of a snapshot's flow map, seeded from a scatter grid of
/// lattice preimages. Queries with |y| >= rcut return y.
class FlowInverter {
public:
    explicit FlowInverter(const FlowSnapshot& snap, double tol = 1e-10, int max_iter = 50);
    /// solves X(x) = y; throws NumericalError on stagnation
    void invert(const double* y, double* x_out) const;
    /// rho(y) = 1 / det DX(X^{-1}(y))
    double rho(const double* y) const;

private:
    const FlowSnapshot& snap_;
    double tol_;
    int max_iter_;
    std::vector<long> seed_of_cell_; // lattice node index per cell
};

/// Euler-Maruyama integration of the characteristic flow
///   X_{m+1} = X_m - sum_k sigma^k(t_m, X_m) dw^k - b(t_m, X_m) dt
/// together with its exact discrete Jacobian (the differentiated update),
/// the running integrals I = int tr Dsigma^k dw^k and
/// J = int [tr Db + (1/2) sum_k tr((Dsigma^k)^2)] ds, and both determinant
/// routes: det_direct = det DX and det_formula = exp(-I - J).
class FlowIntegrator {
public:
    /// points: npts x dim, row-major initial positions; start_step lets a
    /// run resume from a stored state, consuming the remaining increments
    FlowIntegrator(const VectorFieldSet& set, const BrownianPath& path,
                   std::vector<double> points, int start_step = 0);
    /// lattice constructor; snapshots carry the spec
    FlowIntegrator(const VectorFieldSet& set, const BrownianPath& path, const GridSpec& spec);

    int dim() const { return d_; }
    long npoints() const { return npts_; }
    int step_index() const { return m_; }
    double time() const { return m_ * path_->dt(); }
    const BrownianPath& path() const { return *path_; }

    /// one EM step; throws NumericalError carrying the time node on blowup
    void step();
    void run_to_end() {
        while (m_ < path_->steps()) step();
    }

    const double* X(long i) const { return X_.data() + static_cast<std::size_t>(i) * d_; }
    const double* DX(long i) const { return DX_.data() + static_cast<std::size_t>(i) * d_ * d_; }
    double det_direct(long i) const;
    double det_formula(long i) const;
    double I_acc(long i) const { return I_[static_cast<std::size_t>(i)]; }
    double J_acc(long i) const { return J_[static_cast<std::size_t>(i)]; }

    double min_det_direct() const;
    double min_singular_value() const;

    /// lattice-mode snapshot of the current state
    FlowSnapshot snapshot() const;

    /// sigma_bar(x) = DX(x)^{-1} sigma(t, X(x)) sampled at the lattice
    /// points, sigma taken from the set (cutoff applied by value)
    void bar_sample(int sigma_index, double t, GridVectorField& out) const;
    /// hat-pullback sample of a scalar expression: out(x) = s(t, X(x)),
    /// optionally multiplied by the source bump at X(x)
    void hat_sample(const SegmentedExpr& s, double t, bool bump, GridField& out) const;

private:
    void init(const VectorFieldSet& set, std::vector<double> points);

    const VectorFieldSet* set_ = nullptr;
    std::shared_ptr<const BrownianPath> path_;
    bool has_spec_ = false;
    GridSpec spec_;
    int d_ = 0, d1_ = 0;
    long npts_ = 0;
    int m_ = 0;
    std::vector<double> X_, DX_, I_, J_;

    // raw expression tapes of sigma^0..sigma^{d1}; cutoff handled explicitly
    std::vector<std::vector<SegmentedExpr>> drive_;
    bool cutoff_ = true;
    double r0_ = 0.0, rcut_ = 0.0;
};

/// convenience: integrate to T and return the final snapshot
FlowSnapshot integrate_flow(const VectorFieldSet& set, const BrownianPath& path,
                            const GridSpec& spec);

} // namespace spdekit
