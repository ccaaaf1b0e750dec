#pragma once

#include "spdekit/grid.hpp"

#include <complex>
#include <vector>

namespace spdekit {

/// in-place radix-2 complex FFT, n a power of two; sign = -1 forward
void fft_inplace(std::complex<double>* a, int n, int sign);

/// forward DFT of a real lattice field along every axis (n power of two)
std::vector<std::complex<double>> dft_field(const GridField& u);

/// Sobolev norm of real order m on the periodic box, computed spectrally:
/// || (1 - Laplace)^{m/2} u ||_{L2} with physical wavenumbers 2 pi k / side.
/// m = 0 reduces to the plain lattice L2 norm.
double sobolev_norm(const GridField& u, double m);

} // namespace spdekit
