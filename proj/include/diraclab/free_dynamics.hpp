#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "diraclab/field.hpp"
#include "diraclab/kernels.hpp"

namespace diraclab {

/// Free Dirac group U0(t) on one grid at one time. The per-mode phases are
/// computed at construction; the 4x4 and 8x8 per-mode matrices are exposed
/// on demand (the real-form table is built once, lazily, and kept).
class FreePropagator {
public:
    FreePropagator(const PeriodicGrid& grid, double mass, double t);

    const PeriodicGrid& grid() const { return grid_; }
    double mass() const { return mass_; }
    double time() const { return t_; }

    /// exp(i(alpha.k - beta m)t) at mode `site`.
    Mat4 matrix_complex(std::size_t site) const;
    /// G_t(k) = cos(omega t) - P^(k) sin(omega t)/omega at mode `site`.
    Mat8 matrix_real(std::size_t site) const;
    const std::vector<Mat8>& real_table() const;

    ComplexSpinorField apply(const ComplexSpinorField& psi) const;
    void apply_spectral(SpinorSpectrum& spectrum) const;
    RealSpinorField apply_real(const RealSpinorField& r) const;

private:
    PeriodicGrid grid_;
    double mass_;
    double t_;
    kernels::FreePhases phases_;
    DiracMatrixSet dirac_;
    LambdaSet lambdas_;
    mutable std::once_flag table_once_;
    mutable std::vector<Mat8> real_table_;
};

/// U0(t) psi0.
ComplexSpinorField evolve_free(const ComplexSpinorField& psi0, double mass, double t);
/// G_t * R psi0, computed per mode with the 8x8 real-form symbol.
RealSpinorField evolve_free_real(const RealSpinorField& r0, double mass, double t);
/// Dual group U0'(t) = U0(-t); generator alpha.grad + i beta m.
ComplexSpinorField dual_evolve_free(const ComplexSpinorField& phi, double mass, double t);

}  // namespace diraclab
