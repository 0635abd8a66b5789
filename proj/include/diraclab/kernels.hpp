#pragma once

// Data-parallel inner loops. Every kernel here has an OpenMP implementation
// used by the library and a plain serial reference in kernels::reference that
// the tests and the benchmark compare against.

#include <cstddef>
#include <span>
#include <vector>

#include "diraclab/field.hpp"

namespace diraclab::kernels {

/// Block length of the deterministic reductions. Partial sums over fixed
/// blocks are combined in block order, so results do not depend on the
/// thread count.
inline constexpr std::size_t reduction_block = 2048;

double sum_squares(std::span<const cd> v);
double sum_squares(std::span<const double> v);
cd conj_dot(std::span<const cd> a, std::span<const cd> b);
double dot(std::span<const double> a, std::span<const double> b);

/// Per-mode scalars of the free propagator at time t:
/// cos(omega t) and sin(omega t) / omega.
struct FreePhases {
    std::vector<double> cos_wt;
    std::vector<double> sinc_wt;
};

FreePhases free_phases(const PeriodicGrid& grid, double mass, double t);

/// psi^(k) <- [cos(omega t) - i H0^(k) sin(omega t)/omega] psi^(k), in place.
void apply_free_propagator(const FreePhases& phases, double mass, SpinorSpectrum& spectrum);
/// Same, computing the phases on the fly.
void apply_free_propagator(double mass, double t, SpinorSpectrum& spectrum);

/// psi(x) <- diag(d(x)) psi(x); d holds 4 entries per site (site-major).
void apply_site_diagonal(std::span<const cd> diagonal, ComplexSpinorField& field);
/// psi(x) <- M(x) psi(x) for general 4x4 matrices.
void apply_site_matrices(std::span<const Mat4> matrices, ComplexSpinorField& field);

/// r^(k) <- M(k) r^(k) for 8x8 mode matrices.
void apply_mode_matrices(std::span<const Mat8> matrices, RealSpinorSpectrum& spectrum);

namespace reference {

double sum_squares(std::span<const cd> v);
cd conj_dot(std::span<const cd> a, std::span<const cd> b);
void apply_free_propagator(double mass, double t, SpinorSpectrum& spectrum);
void apply_site_diagonal(std::span<const cd> diagonal, ComplexSpinorField& field);
void apply_site_matrices(std::span<const Mat4> matrices, ComplexSpinorField& field);
void apply_mode_matrices(std::span<const Mat8> matrices, RealSpinorSpectrum& spectrum);

}  // namespace reference

}  // namespace diraclab::kernels
