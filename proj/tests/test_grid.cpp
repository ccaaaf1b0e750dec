#include "doctest.h"
#include "support.hpp"

#include "spdekit/grid.hpp"

#include <cmath>

using namespace spdekit;
using namespace testkit;

namespace {

MultiIndex mi2(int a0, int a1) {
    MultiIndex m{};
    m[0] = static_cast<std::uint8_t>(a0);
    m[1] = static_cast<std::uint8_t>(a1);
    return m;
}

} // namespace

TEST_CASE("derivative of a constant is exactly zero") {
    GridSpec spec{2, -1.0, 2.0, 32};
    GridField u(spec);
    std::fill(u.v.begin(), u.v.end(), 3.25);
    GridField d = derivative(u, mi2(1, 0));
    for (long i = 0; i < spec.total(); ++i) CHECK(d[i] == 0.0);
}

TEST_CASE("second derivative of a periodic mode is spectrally tight") {
    GridSpec spec{1, -2.0, 4.0, 128};
    GridField u(spec);
    double xi = 2.0 * 3.14159265358979323846 / spec.side;
    for (int i = 0; i < spec.n; ++i) u.v[static_cast<std::size_t>(i)] = std::sin(xi * spec.coord(i));
    MultiIndex m{};
    m[0] = 2;
    GridField d = derivative(u, m);
    for (int i = 0; i < spec.n; ++i) {
        double expect = -xi * xi * std::sin(xi * spec.coord(i));
        CHECK(std::abs(d.v[static_cast<std::size_t>(i)] - expect) < 1e-6);
    }
}

TEST_CASE("mixed derivative of x1*x2 is 1 on the interior") {
    GridSpec spec{2, -1.0, 2.0, 64};
    GridField u(spec);
    double x[2];
    for (long i = 0; i < spec.total(); ++i) {
        spec.node_coords(i, x);
        u[i] = x[0] * x[1];
    }
    GridField d = derivative(u, mi2(1, 1));
    int idx[kMaxDim];
    for (long i = 0; i < spec.total(); ++i) {
        spec.unpack(i, idx);
        bool interior = idx[0] > 2 && idx[0] < spec.n - 3 && idx[1] > 2 && idx[1] < spec.n - 3;
        if (interior) CHECK(d[i] == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("derivative order limit is enforced") {
    GridSpec spec{1, -1.0, 2.0, 16};
    GridField u(spec);
    MultiIndex m{};
    m[0] = 5;
    CHECK_THROWS_AS(derivative(u, m), ValidationError);
}

TEST_CASE("third and fourth derivative stencils reproduce polynomials") {
    GridSpec spec{1, -1.0, 2.0, 64};
    GridField u(spec);
    for (int i = 0; i < spec.n; ++i) {
        double x = spec.coord(i);
        u.v[static_cast<std::size_t>(i)] = x * x * x * x;
    }
    MultiIndex m3{}, m4{};
    m3[0] = 3;
    m4[0] = 4;
    GridField d3 = derivative(u, m3);
    GridField d4 = derivative(u, m4);
    for (int i = 8; i < spec.n - 8; ++i) {
        double x = spec.coord(i);
        CHECK(d3.v[static_cast<std::size_t>(i)] == doctest::Approx(24.0 * x).epsilon(1e-7));
        CHECK(d4.v[static_cast<std::size_t>(i)] == doctest::Approx(24.0).epsilon(1e-7));
    }
}

TEST_CASE("cubic interpolation is exact at nodes and third order between") {
    auto smooth = [](double x, double y) {
        return std::sin(3.14159265358979 * x) * std::cos(2 * 3.14159265358979 * y);
    };
    std::vector<double> hs, errs;
    for (int n : {32, 64, 128}) {
        GridSpec spec{2, -1.0, 2.0, n};
        GridField u(spec);
        double x[2];
        for (long i = 0; i < spec.total(); ++i) {
            spec.node_coords(i, x);
            u[i] = smooth(x[0], x[1]);
        }
        // exact at nodes
        double xq[2] = {spec.coord(5), spec.coord(9)};
        CHECK(interp_cubic(u, xq) == doctest::Approx(u[5 * n + 9]).epsilon(1e-14));
        // error at offset points
        Rng rng(123);
        double maxe = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            double p[2] = {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
            maxe = std::max(maxe, std::abs(interp_cubic(u, p) - smooth(p[0], p[1])));
        }
        hs.push_back(spec.h());
        errs.push_back(maxe);
    }
    double order = fit_order(hs, errs);
    CHECK(order >= 2.5);
}

TEST_CASE("periodic wrap of interpolation and stencils") {
    GridSpec spec{1, -1.0, 2.0, 32};
    GridField u(spec);
    double xi = 2.0 * 3.14159265358979323846 / spec.side;
    for (int i = 0; i < spec.n; ++i) u.v[static_cast<std::size_t>(i)] = std::cos(xi * spec.coord(i));
    // query just past the seam
    double left[1] = {-0.999};
    double right[1] = {0.997};
    CHECK(interp_cubic(u, left) == doctest::Approx(std::cos(xi * -0.999)).epsilon(1e-3));
    CHECK(interp_cubic(u, right) == doctest::Approx(std::cos(xi * 0.997)).epsilon(1e-3));
    // derivative at the seam stays accurate (periodic data)
    GridField d(spec);
    derivative_axis(u, 0, 1, d);
    CHECK(d.v[0] == doctest::Approx(-xi * std::sin(xi * spec.coord(0))).epsilon(1e-6));
}

TEST_CASE("quadrature and norms") {
    GridSpec spec{2, -1.0, 2.0, 32};
    GridField u(spec);
    std::fill(u.v.begin(), u.v.end(), 2.0);
    CHECK(integral(u) == doctest::Approx(8.0)); // 2 * box area 4
    CHECK(norm_l2(u) == doctest::Approx(4.0));  // sqrt(4 * area)
    CHECK(max_abs(u) == doctest::Approx(2.0));
}
