#include "doctest.h"
#include "support.hpp"

#include "spdekit/transforms.hpp"
#include "spdekit/vector_field.hpp"

#include <cmath>

using namespace spdekit;
using namespace testkit;

namespace {

VectorField field2(const std::string& c1, const std::string& c2, const std::string& label) {
    std::vector<SegmentedExpr> comps{expr(c1, 2), expr(c2, 2)};
    return VectorField::from_expressions(std::move(comps), label);
}

bool interior(const GridSpec& spec, long i, int margin) {
    int idx[kMaxDim];
    spec.unpack(i, idx);
    for (int a = 0; a < spec.dim; ++a)
        if (idx[a] < margin || idx[a] >= spec.n - margin) return false;
    return true;
}

} // namespace

TEST_CASE("apply_L: directional derivative of a coordinate is 1") {
    GridSpec spec{2, -1.0, 2.0, 64};
    GridField u(spec);
    double x[2];
    for (long i = 0; i < spec.total(); ++i) {
        spec.node_coords(i, x);
        u[i] = x[0];
    }
    GridField out = apply_L(field2("1", "0", "e1"), u, 0.0);
    for (long i = 0; i < spec.total(); ++i)
        if (interior(spec, i, 3)) CHECK(out[i] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("apply_L: zero field gives zero") {
    GridSpec spec{2, -1.0, 2.0, 32};
    GridField u(spec);
    for (long i = 0; i < spec.total(); ++i) u[i] = std::sin(static_cast<double>(i % 7));
    GridField out = apply_L(VectorField::zero(2), u, 0.0);
    for (long i = 0; i < spec.total(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("apply_L: rotation field is tangent to circles") {
    GridSpec spec{2, -1.0, 2.0, 64};
    GridField u(spec);
    double x[2];
    for (long i = 0; i < spec.total(); ++i) {
        spec.node_coords(i, x);
        u[i] = x[0] * x[0] + x[1] * x[1];
    }
    GridField out = apply_L(field2("x2", "0 - x1", "rot"), u, 0.0);
    for (long i = 0; i < spec.total(); ++i)
        if (interior(spec, i, 3)) CHECK(std::abs(out[i]) < 1e-10);
}

TEST_CASE("apply_L rejects dimension mismatch") {
    GridSpec spec{2, -1.0, 2.0, 16};
    GridField u(spec);
    std::vector<SegmentedExpr> comps{expr("x1", 1)};
    VectorField f1 = VectorField::from_expressions(std::move(comps), "f1");
    CHECK_THROWS_AS(apply_L(f1, u, 0.0), ValidationError);
}

TEST_CASE("Heisenberg bracket is the constant field (0,0,1)") {
    std::vector<SegmentedExpr> a{expr("1", 3), expr("0", 3), expr("0", 3)};
    std::vector<SegmentedExpr> b{expr("0", 3), expr("1", 3), expr("x1", 3)};
    VectorField alpha = VectorField::from_expressions(std::move(a), "a");
    VectorField beta = VectorField::from_expressions(std::move(b), "b");
    VectorField br = lie_bracket(alpha, beta);
    CHECK(br.label() == "[a,b]");
    double x[3] = {0.4, -0.7, 0.9};
    auto v = br.value(0.0, {x, 3});
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(1.0));
}

TEST_CASE("self-bracket vanishes identically") {
    Rng rng(5);
    VectorField f = random_field(rng, 2, "f");
    VectorField br = lie_bracket(f, f);
    for (int trial = 0; trial < 5; ++trial) {
        double x[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        auto v = br.value(0.0, {x, 2});
        CHECK(std::abs(v[0]) < 1e-14);
        CHECK(std::abs(v[1]) < 1e-14);
    }
}

TEST_CASE("pinned bracket value: [(x2,0), (0,x1)] at (1,2) is (-1, 2)") {
    // hand oracle: D beta . alpha - D alpha . beta with
    // D alpha = [[0,1],[0,0]], D beta = [[0,0],[1,0]]
    VectorField alpha = field2("x2", "0", "a");
    VectorField beta = field2("0", "x1", "b");
    VectorField br = lie_bracket(alpha, beta);
    double x[2] = {1.0, 2.0};
    auto v = br.value(0.0, {x, 2});
    CHECK(v[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("bracket antisymmetry is exact to roundoff") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        VectorField a = random_field(rng, 2, "a");
        VectorField b = random_field(rng, 2, "b");
        VectorField ab = lie_bracket(a, b);
        VectorField ba = lie_bracket(b, a);
        for (int p = 0; p < 5; ++p) {
            double x[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            auto v1 = ab.value(0.0, {x, 2});
            auto v2 = ba.value(0.0, {x, 2});
            for (int c = 0; c < 2; ++c) CHECK(std::abs(v1[c] + v2[c]) <= 1e-12);
        }
    }
}

TEST_CASE("Jacobi identity holds to nested-jet roundoff") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        VectorField a = random_field(rng, 2, "a");
        VectorField b = random_field(rng, 2, "b");
        VectorField c = random_field(rng, 2, "c");
        VectorField j1 = lie_bracket(a, lie_bracket(b, c));
        VectorField j2 = lie_bracket(b, lie_bracket(c, a));
        VectorField j3 = lie_bracket(c, lie_bracket(a, b));
        for (int p = 0; p < 5; ++p) {
            double x[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            auto v1 = j1.value(0.0, {x, 2});
            auto v2 = j2.value(0.0, {x, 2});
            auto v3 = j3.value(0.0, {x, 2});
            for (int cc = 0; cc < 2; ++cc) CHECK(std::abs(v1[cc] + v2[cc] + v3[cc]) <= 1e-9);
        }
    }
}

TEST_CASE("drift correction: constant transport fields leave sigma0") {
    VectorFieldSet set = make_set(2, 2, 1, 1.0,
                                  {{"x2", "x1"}, {"0.7", "0.3"}, {"0.2", "0.5"}, {"1", ""}});
    VectorField b = drift_correction(set);
    // inside B_{R0} the cutoff is identically 1 and the sigma^k are constant,
    // so b = sigma^0 = (x2, x1)
    double x[2] = {0.2, -0.3};
    auto v = b.value(0.0, {x, 2});
    CHECK(v[0] == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("drift correction: linear field gives b = -x/2") {
    VectorFieldSet set = make_set(1, 1, 1, 2.0, {{"0"}, {"x1"}, {"1"}});
    VectorField b = drift_correction(set);
    for (double xv : {-0.9, 0.1, 1.2}) {
        double x[1] = {xv};
        auto v = b.value(0.0, {x, 1});
        CHECK(v[0] == doctest::Approx(-xv / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("drift correction matches finite-difference reconstruction") {
    Rng rng(17);
    std::vector<std::vector<std::string>> sigma;
    for (int k = 0; k <= 2; ++k)
        sigma.push_back({random_expr(rng, 2), random_expr(rng, 2)});
    VectorFieldSet set = make_set(2, 1, 1, 1.0, sigma);
    VectorField b = drift_correction(set);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};
        auto vb = b.value(0.0, {x.data(), 2});
        // rebuild: sigma0 - 1/2 (D sigma1) sigma1, Jacobian by differences of values
        auto s0 = set.sig(0).value(0.0, {x.data(), 2});
        auto s1 = set.sig(1).value(0.0, {x.data(), 2});
        const double h = 1e-6;
        for (int i = 0; i < 2; ++i) {
            double corr = 0.0;
            for (int j = 0; j < 2; ++j) {
                auto f = [&](const std::vector<double>& p) {
                    return set.sig(1).value(0.0, {p.data(), 2})[static_cast<std::size_t>(i)];
                };
                corr += fd_partial(f, x, j, h) * s1[static_cast<std::size_t>(j)];
            }
            double expect = s0[static_cast<std::size_t>(i)] - 0.5 * corr;
            CHECK(std::abs(vb[static_cast<std::size_t>(i)] - expect) <= 1e-8);
        }
    }
}

TEST_CASE("cutoff equals 1 inside, 0 outside, and has accurate jets between") {
    double r0 = 1.0, rcut = 2.0;
    CHECK(cutoff_value(0.25, r0, rcut) == 1.0);
    CHECK(cutoff_value(1.0 * 1.0, r0, rcut) == 1.0);
    CHECK(cutoff_value(4.0, r0, rcut) == 0.0);
    CHECK(cutoff_value(9.0, r0, rcut) == 0.0);
    double mid = cutoff_value(2.25, r0, rcut); // |x| = 1.5
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);

    double x[2] = {1.1, 0.8};
    Jet z = cutoff_jet(2, 2, x, r0, rcut);
    auto f = [&](const std::vector<double>& p) {
        return cutoff_value(p[0] * p[0] + p[1] * p[1], r0, rcut);
    };
    std::vector<double> xv{x[0], x[1]};
    for (int a = 0; a < 2; ++a) {
        MultiIndex m{};
        m[a] = 1;
        CHECK(std::abs(z.deriv(m) - fd_partial(f, xv, a, 1e-5)) < 1e-5);
    }
}

TEST_CASE("cutoff field vanishes outside and matches raw inside") {
    VectorFieldSet set = make_set(2, 1, 1, 1.0, {{"0", "0"}, {"x2", "x1"}, {"1", "0"}});
    double inside[2] = {0.3, 0.2};
    auto vi = set.sig(1).value(0.0, {inside, 2});
    CHECK(vi[0] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(vi[1] == doctest::Approx(0.3).epsilon(1e-14));
    double outside[2] = {2.5, 0.0};
    auto vo = set.sig(1).value(0.0, {outside, 2});
    CHECK(vo[0] == 0.0);
    CHECK(vo[1] == 0.0);
}

TEST_CASE("field set construction validates counts") {
    CHECK_THROWS_AS(make_set(2, 1, 1, 1.0, {{"0", "0"}, {"1", "0"}}), ValidationError);
    CHECK_THROWS_AS(make_set(2, 1, 1, -1.0, {{"0", "0"}, {"1", "0"}, {"0", "1"}}),
                    ValidationError);
}
