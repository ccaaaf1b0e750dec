#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spdekit {

/// splitmix64 step; used to derive substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic RNG. mt19937_64 has a standard-pinned sequence; the
/// uniform/normal transforms below are written out explicitly so draws are
/// reproducible across standard libraries (std distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// uniform on [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// standard normal via Box-Muller, pairs cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double c = std::cos(6.283185307179586476925286766559 * u2);
        double s = std::sin(6.283185307179586476925286766559 * u2);
        spare_ = r * s;
        have_spare_ = true;
        return r * c;
    }

    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace spdekit
