#include "doctest.h"
#include "support.hpp"

#include "spdekit/spde.hpp"
#include "spdekit/spectral.hpp"

#include <cmath>

using namespace spdekit;
using namespace testkit;

TEST_CASE("zero coefficients freeze the initial data") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {""}});
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.02)", 0.1, 1e-3, 64);
    BrownianPath path(1, 1, prob.T, prob.dt);
    Trajectory traj = solve_direct(prob, path, {0.0, 0.05, 0.1});
    REQUIRE(traj.snaps.size() == 3);
    for (long i = 0; i < traj.spec.total(); ++i) {
        CHECK(traj.snaps[1][i] == doctest::Approx(traj.snaps[0][i]).epsilon(1e-14));
        CHECK(traj.snaps[2][i] == doctest::Approx(traj.snaps[0][i]).epsilon(1e-14));
    }
}

TEST_CASE("heat equation mode decay matches exp(-xi^2 t / 2)") {
    // d = d2 = 1, sigma^2 = 1 globally (cutoff disabled), no transport noise:
    // du = 1/2 u_xx dt; single periodic mode decays by exp(-xi^2 t / 2)
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}}, /*cutoff=*/false);
    SpdeProblem prob = make_problem(std::move(set), "sin(3.14159265358979324*x1)", 0.1, 1e-4, 128);
    BrownianPath path(3, 1, prob.T, prob.dt);
    Trajectory traj = solve_direct(prob, path, {0.1});
    const double xi = 3.14159265358979324; // box side 2, mode k = 1
    double decay = std::exp(-xi * xi * 0.1 / 2.0);
    double maxerr = 0.0;
    for (long i = 0; i < traj.spec.total(); ++i) {
        double x = traj.spec.coord(static_cast<int>(i));
        double expect = decay * std::sin(xi * x);
        maxerr = std::max(maxerr, std::abs(traj.snaps[0][i] - expect));
    }
    CHECK(maxerr / decay < 1e-3);
}

TEST_CASE("mass is conserved by the constant-coefficient diffusion") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}}, false);
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.02)", 0.25, 1e-3, 128);
    BrownianPath path(1, 1, prob.T, prob.dt);
    Trajectory traj = solve_direct(prob, path, {0.0, 0.25});
    double m0 = integral(traj.snaps[0]);
    double m1 = integral(traj.snaps[1]);
    CHECK(std::abs(m1 - m0) <= 1e-8 * 0.25 * std::max(1.0, std::abs(m0)));
}

TEST_CASE("heat runs keep nonnegative data above -1e-8") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}}, false);
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.01)", 0.1, 1e-3, 128);
    BrownianPath path(1, 1, prob.T, prob.dt);
    Trajectory traj = solve_direct(prob, path, {0.1});
    double mn = 0.0;
    for (long i = 0; i < traj.spec.total(); ++i) mn = std::min(mn, traj.snaps[0][i]);
    CHECK(mn >= -1e-8);
}

TEST_CASE("degenerate reduction: zero driving fields make the solvers identical") {
    VectorFieldSet set = make_set(2, 1, 1, 0.5,
                                  {{"", ""}, {"", ""}, {"0.6", "0.2"}},
                                  true, "0 - 0.4");
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2 + x2^2)/0.01)", 0.05, 1e-3, 64);
    BrownianPath path(7, 1, prob.T, prob.dt);
    Trajectory td = solve_direct(prob, path, {0.05});
    Trajectory tr = solve_reduced(prob, path, {0.05});
    double gap = relative_l2_gap(td.snaps[0], tr.snaps[0]);
    CHECK(gap <= 1e-10);
}

TEST_CASE("pure stochastic transport: direct solution is u0 shifted by s w_t") {
    // d = d1 = 1, sigma^1 = s constant, d2-field zero: u_t(x) = u0(x + s w_t)
    const double s = 0.4;
    VectorFieldSet set = make_set(1, 1, 1, 0.75, {{""}, {"0.4"}, {""}});
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.02)", 0.1, 1e-4, 256);
    BrownianPath path(21, 1, prob.T, prob.dt);
    Trajectory td = solve_direct(prob, path, {0.1});
    double w = path.w_at(path.steps(), 0);
    double maxerr = 0.0, scale = 0.0;
    for (long i = 0; i < td.spec.total(); ++i) {
        double x = td.spec.coord(static_cast<int>(i));
        double expect = std::exp(-std::pow(x + s * w, 2) / 0.02);
        maxerr = std::max(maxerr, std::abs(td.snaps[0][i] - expect));
        scale = std::max(scale, std::abs(expect));
    }
    CHECK(maxerr / scale < 0.05);

    // the reduced route must reproduce it: zero right side, flow carries all
    Trajectory tr = solve_reduced(prob, path, {0.1});
    CHECK(relative_l2_gap(td.snaps[0], tr.snaps[0]) < 0.05);
}

TEST_CASE("reduced solver rejects nonvanishing nu or g on the ball") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {"0.2"}, {""}}, true, "", "",
                                  {"0.3"}, {});
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.02)", 0.05, 1e-3, 64);
    BrownianPath path(2, 1, prob.T, prob.dt);
    CHECK_THROWS_AS(solve_reduced(prob, path, {0.05}), ValidationError);
}

TEST_CASE("explicit scheme enforces its stability bound") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}}, false);
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.02)", 0.1, 1e-3, 128);
    prob.opt.semi_implicit = false;
    // h = 2/128, bound = h^2/(2 d a) with a = 1/2: dt_max ~ 2.4e-4 < 1e-3
    BrownianPath path(1, 1, prob.T, prob.dt);
    CHECK_THROWS_AS(DirectStepper(prob, path), ValidationError);
}

TEST_CASE("problem validation catches mismatched inputs") {
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"1"}});
    SpdeProblem prob = make_problem(std::move(set), "x1", 0.1, 3e-4, 64);
    BrownianPath path(1, 1, 0.1, 1e-3); // dt mismatch
    CHECK_THROWS_AS(solve_direct(prob, path, {0.1}), ValidationError);
}

TEST_CASE("support reaching the boundary aborts the run") {
    // constant initial data violates the compact-support contract
    VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {""}, {"0.5"}});
    SpdeProblem prob = make_problem(std::move(set), "1", 0.01, 1e-3, 64);
    BrownianPath path(1, 1, prob.T, prob.dt);
    CHECK_THROWS_AS(solve_direct(prob, path, {0.01}), NumericalError);
}

TEST_CASE("Ito-Wentzell residual: zero driving fields reduce to the scheme residual") {
    VectorFieldSet set = make_set(2, 1, 1, 0.5, {{"", ""}, {"", ""}, {"0.5", "0.3"}}, true,
                                  "0 - 0.2", "0.3*exp(-(x1^2+x2^2)/0.01)");
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2 + x2^2)/0.01)", 0.05, 1e-3, 64);
    BrownianPath path(17, 1, prob.T, prob.dt);
    auto phis = make_bump_test_functions(prob.grid, 0.5, 5);
    IwResult res = ito_wentzell_residual(prob, path, phis);
    for (double r : res.residuals) CHECK(std::abs(r) <= 1e-8);
}

TEST_CASE("Ito-Wentzell residual shrinks under joint refinement for transport") {
    std::vector<double> dts, errs;
    for (int level = 0; level < 3; ++level) {
        int n = 32 << level;
        double dt = 1.6e-3 / std::pow(4.0, level);
        VectorFieldSet set = make_set(1, 1, 1, 0.5, {{""}, {"0.4"}, {""}});
        SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2)/0.02)", 0.064, dt, n);
        BrownianPath path(9, 1, prob.T, prob.dt);
        auto phis = make_bump_test_functions(prob.grid, 0.5, 3);
        IwResult res = ito_wentzell_residual(prob, path, phis);
        double worst = 0.0;
        for (double r : res.residuals) worst = std::max(worst, std::abs(r));
        dts.push_back(dt);
        errs.push_back(worst);
    }
    CHECK(fit_order(dts, errs) >= 0.4);
    CHECK(errs[2] < errs[0]);
}

TEST_CASE("trajectory lookup by time") {
    Trajectory t;
    t.times = {0.0, 0.5, 1.0};
    t.snaps.resize(3);
    t.snaps[1].v = {42.0};
    CHECK(t.at_time(0.49).v[0] == 42.0);
    Trajectory empty;
    CHECK_THROWS_AS(empty.at_time(0.0), ValidationError);
}

TEST_CASE("hypoelliptic run smooths: interior Sobolev norms decrease in time") {
    // shear + degenerate diffusion spreading a narrow state: from t = 0.1 on,
    // every tracked norm of the spreading solution decays
    VectorFieldSet set = make_set(2, 1, 1, 4.0,
                                  {{"", "-x1"}, {"", ""}, {"1", ""}},
                                  /*cutoff=*/false);
    SpdeProblem prob = make_problem(std::move(set), "exp(-(x1^2 + x2^2)/0.08)", 0.5, 5e-4, 128);
    BrownianPath path(2, 1, prob.T, prob.dt);
    Trajectory traj = solve_direct(prob, path, {0.1, 0.2, 0.3, 0.4, 0.5});
    for (double m : {2.0, 4.0}) {
        double prev = 1e300;
        for (const auto& snap : traj.snaps) {
            double norm = sobolev_norm(snap, m);
            CHECK(std::isfinite(norm));
            CHECK(norm < prev);
            prev = norm;
        }
    }
}
