#include "diraclab/scattering.hpp"

#include <algorithm>
#include <cmath>

#include "diraclab/fft.hpp"
#include "diraclab/free_dynamics.hpp"

namespace diraclab {

ComplexSpinorField ScatteringSetup::project(const ComplexSpinorField& psi) const
{
    return decomp ? project_continuous(psi, *decomp) : psi;
}

namespace {

const LatticePotential& potential_of(const ScatteringSetup& setup)
{
    if (!setup.potential) throw InvalidParameter("scattering: setup has no potential");
    return *setup.potential;
}

// Strang step of the evolution inside a wave-operator run.
double evolution_step(const WaveOperatorResult& w)
{
    if (!(w.dt > 0.0)) throw InvalidParameter("scattering: wave-operator result carries no time step");
    return w.dt;
}

}  // namespace

WaveOperatorResult wave_operator(const ComplexSpinorField& phi, const ScatteringSetup& setup,
                                 const WaveOperatorOptions& options)
{
    const LatticePotential& V = potential_of(setup);
    require_same_grid(phi.grid(), V.grid, "wave_operator");
    const auto& grid = phi.grid();
    if (!(options.t_max > 0.0)) throw InvalidParameter("wave_operator: t_max must be positive");
    if (!(options.t_max < 0.5 * grid.extent()))
        throw RefusedRun("wave_operator: t_max must stay below L/2 (recurrence window)");
    if (options.substeps < 1) throw InvalidParameter("wave_operator: substeps must be at least 1");
    const int coarse = step_count(options.t_max, options.dtau);
    if (coarse < 1) throw InvalidParameter("wave_operator: dtau larger than t_max");
    const int nodes = 2 * coarse;
    const double h = 0.5 * options.dtau;

    WaveOperatorResult out;
    out.t_max = options.t_max;
    out.dtau = options.dtau;
    out.dt = h / options.substeps;
    out.pc_phi = setup.project(phi);
    out.w_phi = out.pc_phi;

    const PerturbedPropagator backward(V, setup.mass, -out.dt);
    SpinorSpectrum fine(grid), coarse_acc(grid);
    ComplexSpinorField psi = out.pc_phi;
    for (int j = 0; j <= nodes; ++j) {
        const double tau = j * h;
        out.tau.push_back(tau);
        if (V.is_zero()) {
            out.integrand_norm.push_back(0.0);
            continue;
        }
        ComplexSpinorField f = V.apply(psi);
        f *= cd{0.0, 1.0};
        out.integrand_norm.push_back(norm(f));
        SpinorSpectrum hat = fft_forward(f);
        // U0'(-tau) = U0(tau) = exp(-i H0 tau)
        kernels::apply_free_propagator(setup.mass, tau, hat);
        const double edge = (j == 0 || j == nodes) ? 0.5 : 1.0;
        const auto src = hat.values();
        auto dst_f = fine.values();
        for (std::size_t i = 0; i < src.size(); ++i) dst_f[i] += (edge * h) * src[i];
        if (j % 2 == 0) {
            auto dst_c = coarse_acc.values();
            for (std::size_t i = 0; i < src.size(); ++i) dst_c[i] += (edge * options.dtau) * src[i];
        }
        if (j < nodes) backward.advance(psi, options.substeps);
    }

    const double phi_norm = norm(phi);
    if (!V.is_zero()) {
        const ComplexSpinorField integral = fft_inverse(fine);
        SpinorSpectrum diff = fine;
        diff -= coarse_acc;
        out.quadrature_error = phi_norm > 0.0 ? norm(fft_inverse(diff)) / phi_norm : 0.0;
        out.w_phi += integral;
    }
    out.quadrature_ok = out.quadrature_error < options.tolerance;

    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < out.tau.size(); ++j) {
        const double tau = out.tau[j];
        const double g = out.integrand_norm[j];
        if (tau >= options.fit_t1 - 1e-12) out.c_fit = std::max(out.c_fit, g * std::pow(1.0 + tau, 1.5));
        if (tau >= options.fit_t0 && tau <= options.fit_t1 + 1e-12 && g > 0.0) {
            xs.push_back(1.0 + tau);
            ys.push_back(g);
        }
    }
    out.tail_bound = 2.0 * out.c_fit / std::sqrt(1.0 + options.t_max);
    if (xs.size() >= 2) {
        out.integrand_fit = fit_loglog(xs, ys);
        out.decaying = out.integrand_fit.slope <= options.slope_threshold;
    }
    return out;
}

WaveOperatorResult wave_operator(const TestFunction& phi, const ScatteringSetup& setup,
                                 const WaveOperatorOptions& options)
{
    return wave_operator(phi.field, setup, options);
}

RemainderSeries remainder_series(const ComplexSpinorField& phi, const ScatteringSetup& setup,
                                 const WaveOperatorResult& w, const std::vector<double>& times, bool keep_fields)
{
    const LatticePotential& V = potential_of(setup);
    require_same_grid(phi.grid(), V.grid, "remainder_series");
    const double dt = evolution_step(w);
    if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0))
        throw InvalidParameter("remainder_series: times must be nonnegative and increasing");
    if (!times.empty() && times.back() > w.t_max + 1e-12)
        throw InvalidParameter("remainder_series: t must not exceed the quadrature cutoff t_max");

    RemainderSeries out;
    const PerturbedPropagator backward(V, setup.mass, -dt);
    ComplexSpinorField psi = setup.project(phi);
    int done = 0;
    for (const double t : times) {
        const int target = step_count(t, dt);
        backward.advance(psi, target - done);
        done = target;
        // P_c U'(t) phi - U0'(t) W phi, with U0'(t) = U0(-t).
        ComplexSpinorField r = psi - evolve_free(w.w_phi, setup.mass, -t);
        out.times.push_back(t);
        out.norms.push_back(norm(r));
        if (keep_fields) out.fields.push_back(std::move(r));
    }
    return out;
}

ComplexSpinorField remainder(const ComplexSpinorField& phi, const ScatteringSetup& setup,
                             const WaveOperatorResult& w, double t)
{
    auto series = remainder_series(phi, setup, w, {t}, true);
    return std::move(series.fields.front());
}

PairingBound mean_square_pairing_bound(const CovarianceSpectrum& q0, double l1, const ComplexSpinorField& r)
{
    require_same_grid(q0.grid(), r.grid(), "mean_square_pairing_bound");
    PairingBound b;
    b.l1 = l1;
    b.r_norm_sq = charge(r);
    b.exact = quadratic_form(q0, r);
    b.bound = l1 * b.r_norm_sq;
    return b;
}

PairingBound mean_square_pairing_bound(const CovarianceSpectrum& q0, const ComplexSpinorField& r)
{
    return mean_square_pairing_bound(q0, l1_norm(to_realspace(q0)), r);
}

ScalarStats empirical_mean_square_pairing(const Ensemble& ens, const ComplexSpinorField& r)
{
    require_same_grid(ens.grid(), r.grid(), "empirical_mean_square_pairing");
    const RealSpinorField rr = realify(r);
    const auto rows = per_sample(ens, [&](std::size_t, const RealSpinorField& psi) {
        const double p = pairing(psi, rr);
        return std::vector<double>{p * p};
    });
    return column_stats(rows).front();
}

double limit_functional(const ComplexSpinorField& w_phi, const CovarianceSpectrum& q0, double mass)
{
    require_same_grid(q0.grid(), w_phi.grid(), "limit_functional");
    return std::exp(-0.5 * quadratic_form(qhat_limit(q0, mass), w_phi));
}

double limit_functional(const WaveOperatorResult& w, const CovarianceSpectrum& q0, double mass)
{
    return limit_functional(w.w_phi, q0, mass);
}

}  // namespace diraclab
