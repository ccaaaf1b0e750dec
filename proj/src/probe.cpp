#include "spdekit/probe.hpp"

#include "spdekit/errors.hpp"
#include "spdekit/spectral.hpp"
#include "spdekit/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace spdekit {

void ProbeWindow::validate(int d, double T, double R0) const {
    if (!(0.0 < s0 && s0 < t0 && t0 < T))
        throw ValidationError("probe window [s0, t0] must sit strictly inside (0, T)");
    if (!(r > 0.0 && r < R0)) throw ValidationError("probe window radius must satisfy 0 < r < R0");
    if (alphas.empty()) throw ValidationError("probe window needs at least one multi-index");
    for (const auto& a : alphas) {
        int mag = 0;
        for (int i = 0; i < d; ++i) mag += a[i];
        if (2 * (l - mag - 2) <= d + 1)
            throw ValidationError("probe window: order l violates 2(l - |alpha| - 2) > d + 1");
        if (mag > 4) throw ValidationError("probe window: |alpha| exceeds stencil limit 4");
    }
}

std::vector<double> sup_derivative(const Trajectory& traj, const ProbeWindow& window) {
    int inside = 0;
    for (double t : traj.times)
        if (t >= window.s0 - 1e-12 && t <= window.t0 + 1e-12) ++inside;
    if (inside < 20)
        throw ValidationError("sup_derivative: trajectory stores only " + std::to_string(inside) +
                              " samples in the window (need >= 20)");

    const GridSpec& spec = traj.spec;
    std::vector<char> in_ball(static_cast<std::size_t>(spec.total()), 0);
    double x[kMaxDim];
    for (long i = 0; i < spec.total(); ++i) {
        spec.node_coords(i, x);
        double rho = 0.0;
        for (int a = 0; a < spec.dim; ++a) rho += x[a] * x[a];
        if (rho <= window.r * window.r) in_ball[static_cast<std::size_t>(i)] = 1;
    }

    std::vector<double> sup(window.alphas.size(), 0.0);
    for (std::size_t ti = 0; ti < traj.times.size(); ++ti) {
        double t = traj.times[ti];
        if (t < window.s0 - 1e-12 || t > window.t0 + 1e-12) continue;
        for (std::size_t ai = 0; ai < window.alphas.size(); ++ai) {
            GridField d = derivative(traj.snaps[ti], window.alphas[ai]);
            double m = 0.0;
            for (long i = 0; i < spec.total(); ++i)
                if (in_ball[static_cast<std::size_t>(i)]) m = std::max(m, std::abs(d[i]));
            sup[ai] = std::max(sup[ai], m);
        }
    }
    return sup;
}

namespace {

/// smooth scalar step built from the cutoff profile: 1 on [a1, b1], 0
/// outside (a0, b0)
double time_window_weight(double t, double a0, double a1, double b1, double b0) {
    auto rise = [](double s) {
        // 0 at s<=0, 1 at s>=1, smooth in between
        if (s <= 2e-3) return 0.0;
        if (s >= 1.0 - 2e-3) return 1.0;
        double p = std::exp(-1.0 / s);
        double q = std::exp(-1.0 / (1.0 - s));
        return p / (p + q);
    };
    double up = rise((t - a0) / (a1 - a0));
    double down = rise((b0 - t) / (b0 - b1));
    return up * down;
}

} // namespace

ProbeResult probe_run(const SpdeProblem& problem, const Trajectory& traj,
                      const ProbeWindow& window) {
    window.validate(problem.set.d, problem.T, problem.set.R0);
    ProbeResult res;
    res.sup = sup_derivative(traj, window);

    const GridSpec& spec = traj.spec;
    // spatial cutoff: 1 on B_r, 0 outside B_{(r + R0)/2 .. R0}
    double mid = 0.5 * (window.r + problem.set.R0);
    GridField zeta(spec);
    double x[kMaxDim];
    for (long i = 0; i < spec.total(); ++i) {
        spec.node_coords(i, x);
        double rho = 0.0;
        for (int a = 0; a < spec.dim; ++a) rho += x[a] * x[a];
        zeta[i] = cutoff_value(rho, window.r, mid);
    }
    // time cutoff: supported in (0, T), equal to 1 on [s0, t0]
    double a0 = 0.5 * window.s0;
    double b0 = 0.5 * (window.t0 + problem.T);

    // trapezoid quadrature over the stored trajectory times
    double denom = 0.0;
    GridField wu(spec), wf(spec);
    std::vector<double> vals(traj.times.size(), 0.0);
    for (std::size_t ti = 0; ti < traj.times.size(); ++ti) {
        double t = traj.times[ti];
        double eta = time_window_weight(t, a0, window.s0, window.t0, b0);
        double v = 0.0;
        if (eta > 0.0) {
            for (long i = 0; i < spec.total(); ++i)
                wu[i] = eta * zeta[i] * traj.snaps[ti][i];
            double un = sobolev_norm(wu, window.m);
            double fn = 0.0;
            if (!problem.set.f.empty()) {
                GridField fs = sample_scalar(problem.set.f, spec, t, &problem.set);
                for (long i = 0; i < spec.total(); ++i) wf[i] = eta * zeta[i] * fs[i];
                fn = sobolev_norm(wf, static_cast<double>(window.l));
            }
            v = fn * fn + un * un;
        }
        vals[ti] = v;
    }
    for (std::size_t ti = 0; ti + 1 < traj.times.size(); ++ti)
        denom += 0.5 * (vals[ti] + vals[ti + 1]) * (traj.times[ti + 1] - traj.times[ti]);
    res.denom = denom;
    if (denom <= 0.0) throw NumericalError("probe: degenerate run, zero denominator");

    res.ratio.resize(res.sup.size());
    for (std::size_t i = 0; i < res.sup.size(); ++i)
        res.ratio[i] = res.sup[i] * res.sup[i] / denom;
    return res;
}

} // namespace spdekit
