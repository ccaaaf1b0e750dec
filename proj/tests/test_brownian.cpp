#include "doctest.h"
#include "support.hpp"

#include "spdekit/brownian.hpp"

#include <cmath>

using namespace spdekit;

TEST_CASE("same seed reproduces increments bit for bit") {
    BrownianPath a(1, 2, 1.0, 1e-2);
    BrownianPath b(1, 2, 1.0, 1e-2);
    for (int m = 0; m < a.steps(); ++m)
        for (int k = 0; k < 2; ++k) CHECK(a.dw(m, k) == b.dw(m, k));
}

TEST_CASE("increment sample variance sits in the 3-sigma band") {
    const double dt = 1e-3;
    BrownianPath p(12345, 1, 100.0, dt); // 1e5 increments
    double mean = 0.0, var = 0.0;
    int n = p.steps();
    for (int m = 0; m < n; ++m) mean += p.dw(m, 0);
    mean /= n;
    for (int m = 0; m < n; ++m) {
        double d = p.dw(m, 0) - mean;
        var += d * d;
    }
    var /= (n - 1);
    // var of the variance estimator is 2 dt^2 / n
    double band = 3.0 * dt * std::sqrt(2.0 / n);
    CHECK(std::abs(var - dt) <= band);
    CHECK(std::abs(mean) <= 3.0 * std::sqrt(dt / n));
}

TEST_CASE("bridge refinement sums back to the coarse increments exactly") {
    BrownianPath coarse(77, 2, 0.5, 1e-2);
    BrownianPath fine = coarse.refine();
    CHECK(fine.steps() == 2 * coarse.steps());
    CHECK(fine.dt() == doctest::Approx(coarse.dt() / 2).epsilon(1e-15));
    for (int m = 0; m < coarse.steps(); ++m)
        for (int k = 0; k < 2; ++k)
            CHECK(fine.dw(2 * m, k) + fine.dw(2 * m + 1, k) == coarse.dw(m, k));
}

TEST_CASE("double refinement stays nested") {
    BrownianPath coarse(9, 1, 0.25, 5e-3);
    BrownianPath f1 = coarse.refine();
    BrownianPath f2 = f1.refine();
    for (int m = 0; m < coarse.steps(); ++m) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += f2.dw(4 * m + j, 0);
        CHECK(s == doctest::Approx(coarse.dw(m, 0)).epsilon(1e-14));
    }
}

TEST_CASE("path construction validates its inputs") {
    CHECK_THROWS_AS(BrownianPath(1, 0, 1.0, 1e-2), ValidationError);
    CHECK_THROWS_AS(BrownianPath(1, 1, 1.0, 3e-3), ValidationError); // dt does not divide T
    CHECK_THROWS_AS(BrownianPath(1, 1, -1.0, 1e-2), ValidationError);
}

TEST_CASE("w_at accumulates increments") {
    BrownianPath p(3, 1, 0.1, 1e-2);
    double s = 0.0;
    for (int m = 0; m < 5; ++m) s += p.dw(m, 0);
    CHECK(p.w_at(5, 0) == doctest::Approx(s).epsilon(1e-15));
    CHECK(p.w_at(0, 0) == 0.0);
}
