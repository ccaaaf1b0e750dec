#include "spdekit/spectral.hpp"

#include "spdekit/errors.hpp"

#include <cmath>

namespace spdekit {

void fft_inplace(std::complex<double>* a, int n, int sign) {
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (int len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * pi / len;
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

std::vector<std::complex<double>> dft_field(const GridField& u) {
    const GridSpec& spec = u.spec;
    if (!power_of_two(spec.n))
        throw ValidationError("spectral operations need a power-of-two node count per axis");
    const int n = spec.n;
    const long total = spec.total();
    std::vector<std::complex<double>> a(static_cast<std::size_t>(total));
    for (long i = 0; i < total; ++i) a[static_cast<std::size_t>(i)] = u[i];

    std::vector<std::complex<double>> line(static_cast<std::size_t>(n));
    for (int axis = 0; axis < spec.dim; ++axis) {
        long stride = 1;
        for (int t = spec.dim - 1; t > axis; --t) stride *= n;
        long lineblock = stride * n;
        long nblocks = total / lineblock;
        for (long b = 0; b < nblocks; ++b) {
            for (long inner = 0; inner < stride; ++inner) {
                std::complex<double>* base = a.data() + b * lineblock + inner;
                for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = base[i * stride];
                fft_inplace(line.data(), n, -1);
                for (int i = 0; i < n; ++i) base[i * stride] = line[static_cast<std::size_t>(i)];
            }
        }
    }
    return a;
}

double sobolev_norm(const GridField& u, double m) {
    const GridSpec& spec = u.spec;
    auto a = dft_field(u);
    const int n = spec.n;
    const double two_pi_over_l = 2.0 * 3.14159265358979323846 / spec.side;
    const long total = spec.total();

    double sum = 0.0;
    for (long f = 0; f < total; ++f) {
        long r = f;
        double xi2 = 0.0;
        for (int axis = spec.dim - 1; axis >= 0; --axis) {
            int k = static_cast<int>(r % n);
            r /= n;
            if (k >= n / 2) k -= n;
            double xi = two_pi_over_l * k;
            xi2 += xi * xi;
        }
        double amp2 = std::norm(a[static_cast<std::size_t>(f)]);
        sum += std::pow(1.0 + xi2, m) * amp2;
    }
    // Parseval: h^d sum|u|^2 = h^d / N^d * sum |uhat|^2
    double cell = std::pow(spec.h(), spec.dim);
    double scale = cell / static_cast<double>(total);
    return std::sqrt(sum * scale);
}

} // namespace spdekit
