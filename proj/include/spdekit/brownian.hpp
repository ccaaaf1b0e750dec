#pragma once

#include <cstdint>
#include <vector>

namespace spdekit {

/// Seeded d1-dimensional Wiener increments on a uniform grid over [0, T].
/// Increment (m, k) lives at dw[m * d1 + k]. Regenerating from the same seed
/// reproduces the array bit-for-bit; refine() splits each increment by a
/// Brownian bridge so paths at successive step sizes are nested.
class BrownianPath {
public:
    BrownianPath(std::uint64_t seed, int d1, double T, double dt);

    std::uint64_t seed() const { return seed_; }
    int level() const { return level_; }
    int d1() const { return d1_; }
    double T() const { return T_; }
    double dt() const { return dt_; }
    int steps() const { return steps_; }

    double dw(int m, int k) const { return dw_[static_cast<std::size_t>(m) * d1_ + k]; }

    /// w^k at node m (prefix sums from 0)
    double w_at(int m, int k) const;

    /// same path at half the step: pairwise sums of the result's increments
    /// reproduce this path's increments exactly
    BrownianPath refine() const;

private:
    BrownianPath() = default;
    static double quantize(double v, int level);

    std::uint64_t seed_ = 0;
    int level_ = 0;
    int d1_ = 1;
    double T_ = 1.0;
    double dt_ = 1e-3;
    int steps_ = 0;
    std::vector<double> dw_;
};

} // namespace spdekit
