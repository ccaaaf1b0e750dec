#include "doctest.h"
#include "support.hpp"

#include "spdekit/probe.hpp"
#include "spdekit/transforms.hpp"

#include <cmath>

using namespace spdekit;
using namespace testkit;

namespace {

MultiIndex mi1(int a0) {
    MultiIndex m{};
    m[0] = static_cast<std::uint8_t>(a0);
    return m;
}

std::vector<double> dense_times(double T, double dt, int n) {
    std::vector<double> out;
    for (int i = 0; i <= n; ++i) {
        double t = T * i / n;
        out.push_back(std::llround(t / dt) * dt);
    }
    return out;
}

} // namespace

TEST_CASE("sup_derivative of a constant trajectory is zero") {
    GridSpec spec{1, -1.0, 2.0, 64};
    Trajectory traj;
    traj.spec = spec;
    for (int i = 0; i <= 30; ++i) {
        traj.times.push_back(0.01 * i);
        GridField u(spec);
        std::fill(u.v.begin(), u.v.end(), 1.0);
        traj.snaps.push_back(std::move(u));
    }
    ProbeWindow w;
    w.s0 = 0.05;
    w.t0 = 0.25;
    w.r = 0.3;
    w.alphas = {mi1(1), mi1(2)};
    w.l = 5;
    auto sup = sup_derivative(traj, w);
    CHECK(sup[0] == 0.0);
    CHECK(sup[1] == 0.0);
}

TEST_CASE("sup_derivative requires dense coverage") {
    GridSpec spec{1, -1.0, 2.0, 32};
    Trajectory traj;
    traj.spec = spec;
    traj.times = {0.1, 0.2};
    traj.snaps.assign(2, GridField(spec));
    ProbeWindow w;
    w.s0 = 0.05;
    w.t0 = 0.25;
    w.r = 0.3;
    w.alphas = {mi1(1)};
    CHECK_THROWS_AS(sup_derivative(traj, w), ValidationError);
}

TEST_CASE("heat-mode run: sup |D1 u| matches the analytic decay") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}}, false);
    SpdeProblem prob = make_problem(std::move(set), "sin(3.14159265358979324*x1)", 0.2, 1e-4, 128);
    BrownianPath path(3, 1, prob.T, prob.dt);
    auto times = dense_times(prob.T, prob.dt, 100);
    Trajectory traj = solve_direct(prob, path, times);
    ProbeWindow w;
    w.s0 = 0.1;
    w.t0 = 0.15;
    w.r = 0.4;
    w.alphas = {mi1(1)};
    w.l = 5;
    auto sup = sup_derivative(traj, w);
    const double xi = 3.14159265358979324;
    // the decreasing mode attains its sup at s0
    double expect = xi * std::exp(-xi * xi * w.s0 / 2.0);
    CHECK(std::abs(sup[0] - expect) / expect < 1e-3);
}

TEST_CASE("bound_ratio is invariant under joint scaling of u0 and f") {
    auto run = [&](double lambda) {
        char u0[96], fsrc[96];
        snprintf(u0, sizeof(u0), "%.17g*exp(-(x1^2)/0.01)", lambda);
        snprintf(fsrc, sizeof(fsrc), "%.17g*exp(-(x1^2)/0.02)", 0.5 * lambda);
        VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}}, false, "", fsrc);
        SpdeProblem prob = make_problem(std::move(set), u0, 0.2, 1e-3, 128);
        BrownianPath path(5, 1, prob.T, prob.dt);
        auto times = dense_times(prob.T, prob.dt, 100);
        Trajectory traj = solve_direct(prob, path, times);
        ProbeWindow w;
        w.s0 = 0.06;
        w.t0 = 0.14;
        w.r = 0.3;
        w.alphas = {mi1(1)};
        w.l = 5;
        w.m = 0.0;
        return probe_run(prob, traj, w).ratio[0];
    };
    double r1 = run(1.0);
    double r3 = run(3.0);
    CHECK(std::abs(r1 - r3) / r1 <= 1e-10);
}

TEST_CASE("enlarging the window never decreases the sup") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}}, false);
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.005)", 0.2, 1e-3, 128);
    BrownianPath path(4, 1, prob.T, prob.dt);
    auto times = dense_times(prob.T, prob.dt, 100);
    Trajectory traj = solve_direct(prob, path, times);
    ProbeWindow small, big;
    small.s0 = 0.08;
    small.t0 = 0.12;
    small.r = 0.2;
    small.alphas = {mi1(1)};
    big = small;
    big.s0 = 0.05;
    big.t0 = 0.18;
    big.r = 0.4;
    auto s1 = sup_derivative(traj, small);
    auto s2 = sup_derivative(traj, big);
    CHECK(s2[0] >= s1[0]);
}

TEST_CASE("window validation enforces the order inequality and interiority") {
    ProbeWindow w;
    w.s0 = 0.1;
    w.t0 = 0.2;
    w.r = 0.3;
    w.alphas = {mi1(1)};
    w.l = 3; // too small: 2(3 - 1 - 2) = 0 <= d + 1
    CHECK_THROWS_AS(w.validate(1, 0.5, 0.5), ValidationError);
    w.l = 5;
    w.t0 = 0.9;
    CHECK_THROWS_AS(w.validate(1, 0.5, 0.5), ValidationError);
    w.t0 = 0.2;
    w.r = 0.8;
    CHECK_THROWS_AS(w.validate(1, 0.5, 0.5), ValidationError);
}
