#pragma once

#include "diraclab/field.hpp"

namespace diraclab {

// Lattice Fourier transform, sign convention f^(k) = sum_x f(x) exp(+i k.x)
// (so the gradient becomes -ik) and inverse f(x) = N^-1 sum_k f^(k) exp(-i k.x).
// Parseval: sum_x |f|^2 = N^-1 sum_k |f^|^2.

SpinorSpectrum fft_forward(const ComplexSpinorField& psi);
ComplexSpinorField fft_inverse(const SpinorSpectrum& spectrum);

RealSpinorSpectrum fft_forward(const RealSpinorField& r);
/// Inverse transform keeping the real part; the spectrum must be Hermitian-symmetric.
RealSpinorField fft_inverse_real(const RealSpinorSpectrum& spectrum);

/// In-place transforms of `count` consecutive planes of grid.size() values.
void fft_forward_planes(const PeriodicGrid& grid, cd* planes, int count);
void fft_inverse_planes(const PeriodicGrid& grid, cd* planes, int count);

}  // namespace diraclab
