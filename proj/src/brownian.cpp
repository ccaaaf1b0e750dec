#include "spdekit/brownian.hpp"

#include "spdekit/errors.hpp"
#include "spdekit/rng.hpp"

#include <cmath>

namespace spdekit {

BrownianPath::BrownianPath(std::uint64_t seed, int d1, double T, double dt)
    : seed_(seed), d1_(d1), T_(T), dt_(dt) {
    if (d1 < 1) throw ValidationError("brownian path: d1 must be >= 1");
    if (!(dt > 0.0) || !(T > 0.0)) throw ValidationError("brownian path: T and dt must be positive");
    double ratio = T / dt;
    steps_ = static_cast<int>(std::llround(ratio));
    if (std::abs(ratio - steps_) > 1e-9 * ratio + 1e-12)
        throw ValidationError("brownian path: dt must divide T");
    Rng rng(seed);
    double sd = std::sqrt(dt);
    dw_.resize(static_cast<std::size_t>(steps_) * d1_);
    for (int m = 0; m < steps_; ++m)
        for (int k = 0; k < d1_; ++k)
            dw_[static_cast<std::size_t>(m) * d1_ + k] = quantize(sd * rng.normal(), 0);
}

// Increments of a level-l path live on the dyadic grid 2^(-41-l). The
// perturbation is ~5e-13 relative to typical increments, and it makes every
// bridge split sum back to the parent increment with no rounding at all:
// halves and quantized noise are exact multiples of the next grid.
double BrownianPath::quantize(double v, int level) {
    double scale = std::ldexp(1.0, 41 + level);
    return std::nearbyint(v * scale) / scale;
}

double BrownianPath::w_at(int m, int k) const {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += dw(i, k);
    return s;
}

BrownianPath BrownianPath::refine() const {
    BrownianPath fine;
    fine.seed_ = seed_;
    fine.level_ = level_ + 1;
    fine.d1_ = d1_;
    fine.T_ = T_;
    fine.dt_ = dt_ / 2.0;
    fine.steps_ = steps_ * 2;
    fine.dw_.resize(static_cast<std::size_t>(fine.steps_) * d1_);

    // Midpoint split: dw = dw/2 + xi and dw/2 - xi with xi ~ N(0, dt/4),
    // drawn from a stream derived from (seed, level) so refinement is
    // reproducible and independent of the base draw.
    std::uint64_t state = seed_;
    std::uint64_t derived = splitmix64(state);
    for (int l = 0; l <= level_; ++l) derived = splitmix64(state);
    Rng rng(derived);
    double sd = std::sqrt(dt_ / 4.0);
    for (int m = 0; m < steps_; ++m) {
        for (int k = 0; k < d1_; ++k) {
            double w = dw(m, k);
            // 0.5 w and the quantized noise are exact multiples of the fine
            // grid, so first + second == w holds with no rounding
            double xi = quantize(sd * rng.normal(), fine.level_);
            double first = 0.5 * w + xi;
            double second = 0.5 * w - xi;
            fine.dw_[static_cast<std::size_t>(2 * m) * d1_ + k] = first;
            fine.dw_[static_cast<std::size_t>(2 * m + 1) * d1_ + k] = second;
        }
    }
    return fine;
}

} // namespace spdekit
