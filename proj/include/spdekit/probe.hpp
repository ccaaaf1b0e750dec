#pragma once

#include "spdekit/spde.hpp"

#include <vector>

namespace spdekit {

/// Interior window for smoothness probes: [s0, t0] inside (0, T), ball of
/// radius r < R0, derivative list, Sobolev orders. Every listed alpha must
/// satisfy 2 (l - |alpha| - 2) > d + 1.
struct ProbeWindow {
    double s0 = 0.1, t0 = 0.4;
    double r = 1.0;
    std::vector<MultiIndex> alphas;
    int l = 5;
    double m = 0.0;

    void validate(int d, double T, double R0) const;
};

struct ProbeResult {
    std::vector<double> sup;   // per alpha: sup over window of |D^alpha u|
    double denom = 0.0;        // int_0^T (||f zeta||_{H^l}^2 + ||u zeta||_{H^m}^2) dt
    std::vector<double> ratio; // sup^2 / denom
};

/// sup over stored times in [s0, t0] and nodes in B_r of |D^alpha u|;
/// requires at least 20 stored samples inside the window
std::vector<double> sup_derivative(const Trajectory& traj, const ProbeWindow& window);

/// Ratio statistic shaped like the a priori estimate: numerator from
/// sup_derivative, denominator the time-quadrature of the weighted Sobolev
/// norms with the smooth space-time cutoff that is 1 on the window. The f
/// norms come from the problem's source expression.
ProbeResult probe_run(const SpdeProblem& problem, const Trajectory& traj,
                      const ProbeWindow& window);

} // namespace spdekit
