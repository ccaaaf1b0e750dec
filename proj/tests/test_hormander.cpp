#include "doctest.h"
#include "support.hpp"

#include "spdekit/hormander.hpp"

#include <cmath>

using namespace spdekit;
using namespace testkit;

namespace {

// Heisenberg triple: diffusion fields (1,0,0) and (0,1,x1) in d = 3
VectorFieldSet heisenberg() {
    return make_set(3, 1, 2, 2.0,
                    {{"", "", ""}, {"", "", ""}, {"1", "", ""}, {"", "1", "x1"}});
}

} // namespace

TEST_CASE("hull at depth 0 is exactly the diffusion fields") {
    VectorFieldSet set = heisenberg();
    BracketHull hull = generate_hull(set, 0);
    CHECK(hull.members.size() == 2);
    CHECK(hull.members[0].field.label() == "s2");
    CHECK(hull.members[1].field.label() == "s3");
}

TEST_CASE("depth-1 hull drops self-brackets and mirror pairs") {
    VectorFieldSet set = heisenberg();
    BracketHull hull = generate_hull(set, 1);
    // s2, s3, and the single canonical [s2,s3]
    CHECK(hull.members.size() == 3);
    CHECK(hull.count_at_depth(0) == 2);
    CHECK(hull.members[2].field.label() == "[s2,s3]");
}

TEST_CASE("Heisenberg bracket yields rank 3 at depth 1, everywhere") {
    VectorFieldSet set = heisenberg();
    HormanderGrid grid;
    grid.radius = 1.0;
    grid.nodes_per_axis = 5;
    grid.t_begin = 0.0;
    grid.t_end = 0.5;
    grid.time_nodes = 2;
    HormanderReport rep = check_condition(set, grid, 3);
    CHECK(rep.satisfied);
    CHECK(rep.global_minimal_n == 1);
    for (const auto& node : rep.nodes) {
        CHECK(node.minimal_n <= 1);
        CHECK(node.rank == 3);
    }
}

TEST_CASE("elliptic constant frame needs no brackets") {
    VectorFieldSet set = make_set(2, 1, 2, 1.0, {{"", ""}, {"", ""}, {"1", ""}, {"", "1"}});
    HormanderGrid grid;
    grid.radius = 0.8;
    grid.nodes_per_axis = 5;
    grid.t_end = 1.0;
    HormanderReport rep = check_condition(set, grid, 2);
    CHECK(rep.satisfied);
    CHECK(rep.global_minimal_n == 0);
}

TEST_CASE("commuting constant pair stays rank 2 at every depth") {
    VectorFieldSet set = make_set(3, 1, 2, 1.0,
                                  {{"", "", ""}, {"", "", ""}, {"1", "", ""}, {"", "1", ""}});
    BracketHull hull = generate_hull(set, 5);
    double x[3] = {0.1, -0.2, 0.3};
    for (int n = 0; n <= 5; ++n) {
        RankResult r = rank_at(hull, n, {x, 3}, 0.0);
        CHECK(r.rank == 2);
    }
}

TEST_CASE("Grushin pair: bracket restores rank on the degenerate line") {
    VectorFieldSet set = make_set(2, 1, 2, 1.0, {{"", ""}, {"", ""}, {"1", ""}, {"", "x1"}});
    BracketHull hull = generate_hull(set, 1);
    // [s2, s3] = (0, 1): rank 2 everywhere at depth 1
    double origin[2] = {0.0, 0.0};
    RankResult r0 = rank_at(hull, 0, {origin, 2}, 0.0);
    CHECK(r0.rank == 1);
    RankResult r1 = rank_at(hull, 1, {origin, 2}, 0.0);
    CHECK(r1.rank == 2);
    // off the line depth 0 already spans
    double off[2] = {0.5, 0.0};
    CHECK(rank_at(hull, 0, {off, 2}, 0.0).rank == 2);

    HormanderGrid grid;
    grid.radius = 0.8;
    grid.nodes_per_axis = 9; // odd: contains x1 = 0
    grid.t_end = 1.0;
    HormanderReport rep = check_condition(set, grid, 3);
    CHECK(rep.satisfied);
    CHECK(rep.global_minimal_n == 1);
}

TEST_CASE("rank is monotone in depth and invariant under positive scaling") {
    Rng rng(3);
    VectorFieldSet set = make_set(2, 1, 2, 1.0,
                                  {{"", ""},
                                   {"", ""},
                                   {random_expr(rng, 2), random_expr(rng, 2)},
                                   {random_expr(rng, 2), random_expr(rng, 2)}});
    VectorFieldSet scaled = make_set(2, 1, 2, 1.0,
                                     {{"", ""},
                                      {"", ""},
                                      {"3*(" + set.sigma_exprs[2][0].segments()[0].tree.source() + ")",
                                       "3*(" + set.sigma_exprs[2][1].segments()[0].tree.source() + ")"},
                                      {"3*(" + set.sigma_exprs[3][0].segments()[0].tree.source() + ")",
                                       "3*(" + set.sigma_exprs[3][1].segments()[0].tree.source() + ")"}});
    BracketHull h1 = generate_hull(set, 2);
    BracketHull h2 = generate_hull(scaled, 2);
    for (int trial = 0; trial < 10; ++trial) {
        double x[2] = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
        int prev = 0;
        for (int n = 0; n <= 2; ++n) {
            int r = rank_at(h1, n, {x, 2}, 0.0).rank;
            CHECK(r >= prev);
            prev = r;
            CHECK(rank_at(h2, n, {x, 2}, 0.0).rank == r);
        }
    }
}

TEST_CASE("reports are deterministic") {
    VectorFieldSet set = heisenberg();
    HormanderGrid grid;
    grid.radius = 1.0;
    grid.nodes_per_axis = 3;
    grid.t_end = 0.5;
    HormanderReport a = check_condition(set, grid, 2);
    HormanderReport b = check_condition(set, grid, 2);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].minimal_n == b.nodes[i].minimal_n);
        CHECK(a.nodes[i].rank == b.nodes[i].rank);
        for (std::size_t s = 0; s < a.nodes[i].singular_values.size(); ++s)
            CHECK(a.nodes[i].singular_values[s] == b.nodes[i].singular_values[s]);
    }
}

TEST_CASE("member cap overflow raises an explicit error") {
    Rng rng(8);
    VectorFieldSet set = make_set(2, 1, 2, 1.0,
                                  {{"", ""},
                                   {"", ""},
                                   {random_expr(rng, 2), random_expr(rng, 2)},
                                   {random_expr(rng, 2), random_expr(rng, 2)}});
    HullOptions opt;
    opt.member_cap = 4;
    CHECK_THROWS_AS(generate_hull(set, 3, opt), NumericalError);
}

TEST_CASE("check_condition rejects a ball larger than R0") {
    VectorFieldSet set = heisenberg();
    HormanderGrid grid;
    grid.radius = 5.0;
    CHECK_THROWS_AS(check_condition(set, grid, 1), ValidationError);
}
