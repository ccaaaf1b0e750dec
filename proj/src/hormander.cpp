#include "spdekit/hormander.hpp"

#include "spdekit/errors.hpp"
#include "spdekit/linalg.hpp"
#include "spdekit/parallel.hpp"

#include <algorithm>
#include <set>

namespace spdekit {

int BracketHull::count_at_depth(int n) const {
    int c = 0;
    for (const auto& m : members)
        if (m.generation <= n) ++c;
    return c;
}

BracketHull generate_hull(const VectorFieldSet& set, int n_max, const HullOptions& opt) {
    if (n_max < 0) throw ValidationError("generate_hull: n_max must be >= 0");
    if (set.d2 < 1) throw ValidationError("generate_hull: d2 must be >= 1");

    BracketHull hull;
    hull.depth = n_max;
    std::set<std::string> words;

    std::vector<VectorField> generators;
    for (int k = 1; k <= set.d2; ++k)
        generators.push_back(set.sig(set.d1 + k));

    for (int k = 0; k < set.d2; ++k) {
        BracketHull::Member m;
        m.field = generators[static_cast<std::size_t>(k)];
        m.generation = 0;
        m.generator = k + 1;
        hull.members.push_back(std::move(m));
        words.insert(generators[static_cast<std::size_t>(k)].label());
    }

    // only brackets against the previous generation can be new words
    std::size_t prev_begin = 0;
    for (int n = 1; n <= n_max; ++n) {
        std::size_t gen_end = hull.members.size();
        for (int k = 0; k < set.d2; ++k) {
            const VectorField& g = generators[static_cast<std::size_t>(k)];
            for (std::size_t mi = prev_begin; mi < gen_end; ++mi) {
                const auto& m = hull.members[mi];
                const std::string& mw = m.field.label();
                if (mw == g.label()) continue; // [X, X] = 0
                bool m_is_generator = m.generation == 0;
                std::string word;
                const VectorField* left = &g;
                const VectorField* right = &m.field;
                if (m_is_generator && g.label() > mw) {
                    // mirror pair of two generators: keep the canonical
                    // orientation, the sign does not affect rank
                    word = "[" + mw + "," + g.label() + "]";
                    left = &m.field;
                    right = &g;
                } else {
                    word = "[" + g.label() + "," + mw + "]";
                }
                if (words.count(word)) continue;
                if (static_cast<int>(hull.members.size()) >= opt.member_cap)
                    throw NumericalError("bracket hull overflow: more than " +
                                         std::to_string(opt.member_cap) + " members at depth " +
                                         std::to_string(n));
                BracketHull::Member nm;
                nm.field = lie_bracket(*left, *right);
                nm.generation = n;
                nm.generator = k + 1;
                nm.parent_word = mw;
                hull.members.push_back(std::move(nm));
                words.insert(word);
            }
        }
        if (hull.members.size() == gen_end) break; // nothing new, hull saturated
        prev_begin = gen_end;
    }
    return hull;
}

RankResult rank_at(const BracketHull& hull, int depth, std::span<const double> point, double t,
                   double tol) {
    int d = hull.members.empty() ? 0 : hull.members.front().field.dim();
    std::vector<double> cols;
    int m = 0;
    for (const auto& mem : hull.members) {
        if (mem.generation > depth) continue;
        auto v = mem.field.value(t, point);
        cols.insert(cols.end(), v.begin(), v.end());
        ++m;
    }
    // cols is m x d row-major; singular_values wants d x m
    std::vector<double> a(static_cast<std::size_t>(d) * m);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < m; ++j)
            a[static_cast<std::size_t>(i) * m + j] = cols[static_cast<std::size_t>(j) * d + i];
    RankResult r;
    r.singular_values.assign(static_cast<std::size_t>(d), 0.0);
    if (m == 0) return r;
    singular_values(a.data(), d, m, r.singular_values.data());
    double smax = r.singular_values[0];
    if (smax <= 0.0) return r;
    for (int i = 0; i < d; ++i)
        if (r.singular_values[static_cast<std::size_t>(i)] > tol * smax) ++r.rank;
    return r;
}

HormanderReport check_condition(const VectorFieldSet& set, const HormanderGrid& grid, int n_max,
                                double tol, const HullOptions& opt) {
    if (grid.radius > set.R0 + 1e-12)
        throw ValidationError("check_condition: ball radius exceeds R0");
    BracketHull hull = generate_hull(set, n_max, opt);

    HormanderReport rep;
    rep.d = set.d;
    rep.n_max = n_max;
    rep.radius = grid.radius;
    rep.tol = tol;

    // lattice over [-r, r]^d restricted to the closed ball
    const int nn = grid.nodes_per_axis;
    std::vector<std::vector<double>> points;
    std::vector<int> idx(static_cast<std::size_t>(set.d), 0);
    for (;;) {
        std::vector<double> x(static_cast<std::size_t>(set.d));
        double rho = 0.0;
        for (int a = 0; a < set.d; ++a) {
            double c = nn == 1 ? 0.0
                               : -grid.radius + 2.0 * grid.radius * idx[static_cast<std::size_t>(a)] /
                                     (nn - 1);
            x[static_cast<std::size_t>(a)] = c;
            rho += c * c;
        }
        if (rho <= grid.radius * grid.radius + 1e-12) points.push_back(std::move(x));
        int a = 0;
        while (a < set.d && ++idx[static_cast<std::size_t>(a)] == nn) {
            idx[static_cast<std::size_t>(a)] = 0;
            ++a;
        }
        if (a == set.d) break;
    }
    std::vector<double> times;
    for (int i = 0; i < grid.time_nodes; ++i)
        times.push_back(grid.time_nodes == 1
                            ? grid.t_begin
                            : grid.t_begin + (grid.t_end - grid.t_begin) * i / (grid.time_nodes - 1));

    rep.nodes.resize(points.size() * times.size());
    std::vector<std::pair<std::size_t, std::size_t>> cases;
    for (std::size_t ti = 0; ti < times.size(); ++ti)
        for (std::size_t pi = 0; pi < points.size(); ++pi) cases.push_back({ti, pi});

    parallel_for(cases.size(), [&](std::size_t c0, std::size_t c1) {
        for (std::size_t ci = c0; ci < c1; ++ci) {
            auto [ti, pi] = cases[ci];
            HormanderNode node;
            node.t = times[ti];
            node.x = points[pi];
            for (int n = 0; n <= n_max; ++n) {
                RankResult r = rank_at(hull, n, node.x, node.t, tol);
                node.rank = r.rank;
                node.singular_values = r.singular_values;
                if (r.rank == set.d) {
                    node.minimal_n = n;
                    break;
                }
            }
            rep.nodes[ci] = std::move(node);
        }
    }, 1);

    rep.satisfied = true;
    rep.global_minimal_n = 0;
    for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
        if (rep.nodes[i].minimal_n < 0) {
            rep.satisfied = false;
            rep.failing_nodes.push_back(i);
        } else {
            rep.global_minimal_n = std::max(rep.global_minimal_n, rep.nodes[i].minimal_n);
        }
    }
    if (!rep.satisfied) rep.global_minimal_n = -1;
    return rep;
}

} // namespace spdekit
