#pragma once

#include "spdekit/vector_field.hpp"

#include <string>
#include <vector>

namespace spdekit {

/// Bracket hull L_0, L_1, ... generated from the diffusion fields
/// sigma^{d1+1}..sigma^{d1+d2}:
///   L_0     = { sigma^{d1+1}, ..., sigma^{d1+d2} }
///   L_{n+1} = L_n  u  { [sigma^{d1+k}, M] : k = 1..d2, M in L_n }.
/// sigma^0 is not included. Members are deduplicated by bracket word;
/// self-brackets and mirror pairs of generators are dropped (zero fields or
/// sign flips, neither of which changes spans).
struct BracketHull {
    struct Member {
        VectorField field;
        int generation = 0;      // first n at which the member appears
        int generator = -1;      // k of the generating [sigma^{d1+k}, .]
        std::string parent_word; // word of M, empty for generation 0
    };
    int depth = 0;
    std::vector<Member> members;

    /// number of members with generation <= n
    int count_at_depth(int n) const;
};

struct HullOptions {
    int member_cap = 4096;
};

BracketHull generate_hull(const VectorFieldSet& set, int n_max, const HullOptions& opt = {});

struct RankResult {
    int rank = 0;
    std::vector<double> singular_values; // size d, descending
};

/// Pointwise rank of the d x |members <= depth| matrix of member values at
/// (t, point): count of singular values above tol * s_max.
RankResult rank_at(const BracketHull& hull, int depth, std::span<const double> point, double t,
                   double tol = 1e-8);

struct HormanderNode {
    double t = 0.0;
    std::vector<double> x;
    int minimal_n = -1; // -1: rank d never reached up to n_max
    int rank = 0;       // at minimal_n, or at n_max on failure
    std::vector<double> singular_values;
};

struct HormanderReport {
    int d = 0;
    int n_max = 0;
    double radius = 0.0;
    double tol = 1e-8;
    std::vector<HormanderNode> nodes;
    bool satisfied = false;
    int global_minimal_n = -1; // max over nodes of minimal_n when satisfied
    std::vector<std::size_t> failing_nodes;
};

struct HormanderGrid {
    double radius = 1.0;  // ball B_r, r <= R0
    int nodes_per_axis = 9;
    double t_begin = 0.0, t_end = 1.0;
    int time_nodes = 3;
};

HormanderReport check_condition(const VectorFieldSet& set, const HormanderGrid& grid, int n_max,
                                double tol = 1e-8, const HullOptions& opt = {});

} // namespace spdekit
