#pragma once

#include "spdekit/flow.hpp"
#include "spdekit/grid.hpp"
#include "spdekit/vector_field.hpp"

namespace spdekit {

/// L_sigma u = Du . sigma with 4th-order central differences; sigma sampled
/// at the lattice nodes
GridField apply_L(const VectorField& sigma, const GridField& u, double t);
/// same with a grid-sampled field
void apply_L_grid(const GridVectorField& sigma, const GridField& u, GridField& out,
                  GridField& scratch);

/// hat: phi_hat(x) = phi(X_t(x)), by cubic interpolation of the grid field
GridField hat_pullback(const GridField& phi, const FlowSnapshot& flow);
/// check: phi_check(x) = phi(X_t^{-1}(x)), Newton inversion per node
GridField check_pushforward(const GridField& phi, const FlowSnapshot& flow,
                            const FlowInverter& inv);

/// bar: sigma_bar(x) = (DX_t(x))^{-1} sigma(t, X_t(x)) sampled on the lattice
GridVectorField bar_transform(const VectorField& sigma, const FlowSnapshot& flow, double t);

/// [a, b] with finite-difference Jacobians of grid-sampled fields
/// (2nd-order central stencils, matching the h^2 tolerance of the discrete
/// bracket identity)
GridVectorField lie_bracket_grid(const GridVectorField& a, const GridVectorField& b);

/// samples a vector field at the lattice nodes
GridVectorField sample_field(const VectorField& f, const GridSpec& spec, double t);
/// samples a scalar expression at the lattice nodes (optional bump factor)
GridField sample_scalar(const SegmentedExpr& e, const GridSpec& spec, double t,
                        const VectorFieldSet* bump_from = nullptr);

} // namespace spdekit
