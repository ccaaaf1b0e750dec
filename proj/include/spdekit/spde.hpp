#pragma once

#include "spdekit/brownian.hpp"
#include "spdekit/flow.hpp"
#include "spdekit/grid.hpp"
#include "spdekit/transforms.hpp"
#include "spdekit/vector_field.hpp"

#include <optional>
#include <vector>

namespace spdekit {

struct SolverOptions {
    bool semi_implicit = true;
    double bicg_tol = 1e-10;
    int bicg_max_iter = 400;
    double blowup_factor = 10.0;
};

/// The model problem on the periodic enclosing box (side 4 R0): initial data
/// u0 supported in B_{R0}, coefficients from the field set, horizon T,
/// uniform step dt.
struct SpdeProblem {
    VectorFieldSet set;
    SegmentedExpr u0;
    double T = 1.0;
    double dt = 1e-3;
    GridSpec grid;
    SolverOptions opt;

    void validate() const;
    /// grid covering [-2 R0, 2 R0)^d with n nodes per axis
    static GridSpec box_grid(int d, double R0, int n);
};

struct Trajectory {
    GridSpec spec;
    std::vector<double> times;
    std::vector<GridField> snaps;

    const GridField& at_time(double t) const;
};

/// One Euler-Maruyama step of the direct equation
///   du = (L u + c u + f) dt + (L_{sigma^k} u + nu^k u + g^k) dw^k,
/// L = (1/2) sum_{k=1}^{d1+d2} L^2_{sigma^k} + L_{sigma^0}.
/// The second-order composition A2 = (1/2) sum L^2 is treated implicitly
/// with coefficients lagged at t_m (BiCGStab to the configured residual);
/// first-order, zero-order and stochastic parts are explicit.
class DirectStepper {
public:
    DirectStepper(const SpdeProblem& problem, const BrownianPath& path);

    void step();
    int step_index() const { return m_; }
    double time() const { return m_ * path_->dt(); }
    const GridField& u() const { return u_; }
    GridField& u_mutable() { return u_; }

    /// A2 v with the samples currently loaded (time t_m)
    void apply_A2(const GridField& v, GridField& out);
    /// refresh coefficient samples for time t (no-op when cached)
    void load_samples(double t);

    const GridVectorField& sigma_samples(int k) const {
        return sig_s_[static_cast<std::size_t>(k)];
    }
    const GridField& c_samples() const { return c_s_; }
    const GridField& f_samples() const { return f_s_; }
    const GridField& nu_samples(int k) const { return nu_s_[static_cast<std::size_t>(k - 1)]; }
    const GridField& g_samples(int k) const { return g_s_[static_cast<std::size_t>(k - 1)]; }
    bool sigma_is_zero(int k) const { return sig_zero_[static_cast<std::size_t>(k)]; }

private:
    void check_boundary() const;

    const SpdeProblem* prob_;
    std::shared_ptr<const BrownianPath> path_;
    GridField u_;
    int m_ = 0;

    std::vector<GridVectorField> sig_s_;
    std::vector<char> sig_zero_;
    GridField c_s_, f_s_;
    std::vector<GridField> nu_s_, g_s_;
    bool coeffs_time_dep_ = false;
    double samples_t_ = -1.0;

    // work buffers (xsol_ is the BiCG iterate; w1_/w2_/scratch_ belong to apply_A2)
    GridField e_, w1_, w2_, scratch_, r_, rhat_, p_, v_, s_, t_, q_, xsol_;
};

/// Wentzell-reduced deterministic solver: pulls u0 back through the flow of
/// sigma^0..sigma^{d1}, integrates
///   d u_hat = [(1/2) sum_{k=1}^{d2} L^2_{sigma_bar^{d1+k}} u_hat
///              + c_hat u_hat + f_hat] dt
/// with per-step grid-sampled barred fields, and pushes forward through the
/// inverse flow at output times. Requires nu = g = 0 on B_{R0}.
class ReducedStepper {
public:
    ReducedStepper(const SpdeProblem& problem, const BrownianPath& path);

    void step();
    int step_index() const { return m_; }
    double time() const { return m_ * path_->dt(); }
    /// transported state in flow coordinates
    const GridField& u_hat() const { return u_; }
    /// physical-coordinates solution at the current time (flow inversion)
    GridField u_physical() const;

    const FlowIntegrator& flow() const { return flow_; }
    double min_det_seen() const { return min_det_seen_; }

private:
    void apply_A2(const GridField& v, GridField& out);

    const SpdeProblem* prob_;
    std::shared_ptr<const BrownianPath> path_;
    FlowIntegrator flow_;
    GridField u_;
    int m_ = 0;
    double min_det_seen_ = 1e300;

    std::vector<GridVectorField> bar_;
    GridField chat_, fhat_;
    GridField e_, w1_, w2_, scratch_, r_, rhat_, p_, v_, s_, t_, q_, xsol_;
};

struct FlowHealth {
    double min_det = 0.0;
    double min_singular_value = 0.0;
};

Trajectory solve_direct(const SpdeProblem& problem, const BrownianPath& path,
                        const std::vector<double>& output_times);
Trajectory solve_reduced(const SpdeProblem& problem, const BrownianPath& path,
                         const std::vector<double>& output_times, FlowHealth* health = nullptr);

/// relative L2 distance on matching grids
double relative_l2_gap(const GridField& a, const GridField& b);

/// Discrete residual of the integrated pairing identity for the direct
/// trajectory under the random change of coordinates: for each test function
/// phi,
///   (u_T, phi_check rho)_T - (u_0, phi)_0
///     - sum_m (drift integrand, phi_check rho)_m dt
///     - sum_{m,k} (diffusion integrand^k, phi_check rho)_m dw^k_m,
/// every pairing evaluated in flow coordinates via
/// (v, phi_check rho) = h^d sum_y v(X(y)) phi(y).
struct IwResult {
    std::vector<double> residuals;  // per phi
    std::vector<double> pairing_0;  // (u_0, phi)
    std::vector<double> pairing_T;  // (u_T, phi_check rho)
};

IwResult ito_wentzell_residual(const SpdeProblem& problem, const BrownianPath& path,
                               const std::vector<GridField>& phis);

/// deterministic bump test functions supported in B_{R0}
std::vector<GridField> make_bump_test_functions(const GridSpec& spec, double R0, int count);

} // namespace spdekit
