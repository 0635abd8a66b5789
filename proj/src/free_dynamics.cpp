#include "diraclab/free_dynamics.hpp"

#include <cmath>

#include "diraclab/fft.hpp"

namespace diraclab {

FreePropagator::FreePropagator(const PeriodicGrid& grid, double mass, double t)
    : grid_(grid),
      mass_(mass),
      t_(t),
      phases_(kernels::free_phases(grid, mass, t)),
      dirac_(build_dirac_matrices(mass)),
      lambdas_(build_lambda_set())
{
    if (!std::isfinite(t)) throw InvalidParameter("FreePropagator: time must be finite");
}

Mat4 FreePropagator::matrix_complex(std::size_t site) const
{
    const Mat4 h = free_hamiltonian_symbol(dirac_, grid_.symbol_wavevector(site));
    return phases_.cos_wt[site] * Mat4::Identity() - cd{0.0, phases_.sinc_wt[site]} * h;
}

Mat8 FreePropagator::matrix_real(std::size_t site) const
{
    const Mat8 p = symbol_P(lambdas_, grid_.symbol_wavevector(site), mass_);
    return phases_.cos_wt[site] * Mat8::Identity() - phases_.sinc_wt[site] * p;
}

const std::vector<Mat8>& FreePropagator::real_table() const
{
    std::call_once(table_once_, [this] {
        real_table_.resize(grid_.size());
        const auto sn = static_cast<std::ptrdiff_t>(grid_.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t s = 0; s < sn; ++s)
            real_table_[static_cast<std::size_t>(s)] = matrix_real(static_cast<std::size_t>(s));
    });
    return real_table_;
}

ComplexSpinorField FreePropagator::apply(const ComplexSpinorField& psi) const
{
    require_same_grid(grid_, psi.grid(), "FreePropagator::apply");
    SpinorSpectrum hat = fft_forward(psi);
    apply_spectral(hat);
    return fft_inverse(hat);
}

void FreePropagator::apply_spectral(SpinorSpectrum& spectrum) const
{
    require_same_grid(grid_, spectrum.grid(), "FreePropagator::apply_spectral");
    kernels::apply_free_propagator(phases_, mass_, spectrum);
}

RealSpinorField FreePropagator::apply_real(const RealSpinorField& r) const
{
    require_same_grid(grid_, r.grid(), "FreePropagator::apply_real");
    RealSpinorSpectrum hat = fft_forward(r);
    kernels::apply_mode_matrices(real_table(), hat);
    return fft_inverse_real(hat);
}

ComplexSpinorField evolve_free(const ComplexSpinorField& psi0, double mass, double t)
{
    if (t == 0.0) {
        build_dirac_matrices(mass);
        return psi0;
    }
    SpinorSpectrum hat = fft_forward(psi0);
    build_dirac_matrices(mass);
    kernels::apply_free_propagator(mass, t, hat);
    return fft_inverse(hat);
}

RealSpinorField evolve_free_real(const RealSpinorField& r0, double mass, double t)
{
    if (t == 0.0) {
        build_dirac_matrices(mass);
        return r0;
    }
    return FreePropagator(r0.grid(), mass, t).apply_real(r0);
}

ComplexSpinorField dual_evolve_free(const ComplexSpinorField& phi, double mass, double t)
{
    return evolve_free(phi, mass, -t);
}

}  // namespace diraclab
