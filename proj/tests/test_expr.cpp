#include "doctest.h"
#include "support.hpp"

#include "spdekit/expr.hpp"

#include <cmath>

using namespace spdekit;
using namespace testkit;

TEST_CASE("parse accepts the grammar") {
    ExprTree e = ExprTree::parse("x1*x2 + sin(t)", 2);
    double x[2] = {2.0, 3.0};
    CHECK(e.eval(0.5, {x, 2}) == doctest::Approx(6.0 + std::sin(0.5)));
    CHECK(e.depends_on_time());

    ExprTree r = ExprTree::parse("1/(1+x1^2)", 1);
    double y[1] = {2.0};
    CHECK(r.eval(0.0, {y, 1}) == doctest::Approx(0.2));
    CHECK_FALSE(r.depends_on_time());
}

TEST_CASE("variable index out of range is rejected") {
    CHECK_THROWS_AS(ExprTree::parse("x3", 2), ValidationError);
    CHECK_THROWS_WITH_AS(ExprTree::parse("x3 + 1", 2),
                         doctest::Contains("out of range"), ValidationError);
}

TEST_CASE("syntax errors carry a position") {
    CHECK_THROWS_WITH_AS(ExprTree::parse("x1 + ", 1), doctest::Contains("position"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(ExprTree::parse("foo(x1)", 1), doctest::Contains("unknown identifier"),
                         ValidationError);
    CHECK_THROWS_AS(ExprTree::parse("x1 x2", 2), ValidationError);
    CHECK_THROWS_AS(ExprTree::parse("", 1), ValidationError);
    CHECK_THROWS_AS(ExprTree::parse("sin x1", 1), ValidationError);
    CHECK_THROWS_AS(ExprTree::parse("x1^x1", 1), ValidationError);
}

TEST_CASE("precedence and associativity") {
    double x[1] = {0.0};
    CHECK(ExprTree::parse("2+3*4^2", 1).eval(0, {x, 1}) == doctest::Approx(50.0));
    CHECK(ExprTree::parse("8-4-2", 1).eval(0, {x, 1}) == doctest::Approx(2.0));
    CHECK(ExprTree::parse("8/4/2", 1).eval(0, {x, 1}) == doctest::Approx(1.0));
    CHECK(ExprTree::parse("2^-2", 1).eval(0, {x, 1}) == doctest::Approx(0.25));
    double y[1] = {2.0};
    // leading minus binds the first term only
    CHECK(ExprTree::parse("-x1^2+3", 1).eval(0, {y, 1}) == doctest::Approx(-1.0));
    CHECK(ExprTree::parse("( - x1 + 1 ) * 2", 1).eval(0, {y, 1}) == doctest::Approx(-2.0));
}

TEST_CASE("whitespace is insignificant") {
    double x[2] = {1.5, -0.5};
    double a = ExprTree::parse("x1*x2+cos(x1)", 2).eval(0, {x, 2});
    double b = ExprTree::parse("  x1 * x2   +cos( x1 )  ", 2).eval(0, {x, 2});
    CHECK(a == b);
}

TEST_CASE("segmented expressions switch at interval boundaries") {
    std::vector<SegmentedExpr::Segment> segs;
    segs.push_back({0.0, 0.5, ExprTree::parse("x1", 1)});
    segs.push_back({0.5, 1.0, ExprTree::parse("2*x1", 1)});
    SegmentedExpr se(std::move(segs));
    double x[1] = {3.0};
    CHECK(se.eval(0.2, {x, 1}) == doctest::Approx(3.0));
    CHECK(se.eval(0.7, {x, 1}) == doctest::Approx(6.0));
    CHECK(se.eval(1.0, {x, 1}) == doctest::Approx(6.0));
    CHECK(se.depends_on_time());
}

TEST_CASE("evaluation is deterministic") {
    Rng rng(99);
    std::string src = random_expr(rng, 3);
    ExprTree e = ExprTree::parse(src, 3);
    double x[3] = {0.3, -0.2, 0.9};
    double a = e.eval(0.1, {x, 3});
    double b = e.eval(0.1, {x, 3});
    CHECK(a == b);
}

TEST_CASE("division by zero at evaluation reports the expression") {
    ExprTree e = ExprTree::parse("1/x1", 1);
    double x[1] = {0.0};
    CHECK_THROWS_AS(e.eval(0, {x, 1}), NumericalError);
}
