#pragma once

#include <vector>

#include "diraclab/covariance.hpp"
#include "diraclab/potential.hpp"
#include "diraclab/random_ensemble.hpp"
#include "diraclab/test_functions.hpp"

namespace diraclab {

/// Everything that fixes the perturbed problem: V, m and the bound states
/// removed by P_c (null decomp: none).
struct ScatteringSetup {
    const LatticePotential* potential = nullptr;
    double mass = 1.0;
    const SpectralDecomposition* decomp = nullptr;

    ComplexSpinorField project(const ComplexSpinorField& psi) const;
};

struct WaveOperatorOptions {
    double t_max = 15.0;
    /// Coarse quadrature step; the integrand is sampled every dtau / 2.
    double dtau = 0.05;
    /// Strang steps between consecutive samples.
    int substeps = 1;
    /// Largest accepted ||W_dtau phi - W_{dtau/2} phi|| / ||phi||.
    double tolerance = 1e-6;
    /// Window of the log-log integrand fit.
    double fit_t0 = 2.0;
    double fit_t1 = 10.0;
    /// The integrand counts as decaying when its fitted slope is at most this.
    double slope_threshold = -1.2;
};

struct WaveOperatorResult {
    /// W phi = P_c phi + int_0^t_max U0'(-tau) iV P_c U'(tau) phi dtau.
    ComplexSpinorField w_phi;
    ComplexSpinorField pc_phi;
    double t_max = 0.0;
    double dtau = 0.0;
    /// Strang step of the underlying evolution.
    double dt = 0.0;
    /// 2 C_fit (1 + t_max)^-1/2 with C_fit = max ||integrand|| (1 + tau)^3/2 over
    /// the late window fit_t1 <= tau <= t_max, the part closest to the tail.
    double tail_bound = 0.0;
    double c_fit = 0.0;
    /// ||W_dtau phi - W_{dtau/2} phi|| / ||phi||.
    double quadrature_error = 0.0;
    bool quadrature_ok = true;
    std::vector<double> tau;
    std::vector<double> integrand_norm;
    LineFit integrand_fit;
    /// False flags an integrand that does not decay inside the window.
    bool decaying = true;
};

/// Cook-method wave operator by composite trapezoid with a step-halving
/// check. The integrand is accumulated in Fourier space, so each node costs
/// one transform. Throws RefusedRun when t_max >= L/2.
WaveOperatorResult wave_operator(const ComplexSpinorField& phi, const ScatteringSetup& setup,
                                 const WaveOperatorOptions& options = {});
WaveOperatorResult wave_operator(const TestFunction& phi, const ScatteringSetup& setup,
                                 const WaveOperatorOptions& options = {});

/// r(t) phi = P_c U'(t) phi - U0'(t) W phi, for 0 <= t <= t_max.
ComplexSpinorField remainder(const ComplexSpinorField& phi, const ScatteringSetup& setup,
                             const WaveOperatorResult& w, double t);

struct RemainderSeries {
    std::vector<double> times;
    std::vector<double> norms;
    std::vector<ComplexSpinorField> fields;
};

/// Remainders at increasing times with one backward evolution. Fields are
/// kept only when keep_fields is set.
RemainderSeries remainder_series(const ComplexSpinorField& phi, const ScatteringSetup& setup,
                                 const WaveOperatorResult& w, const std::vector<double>& times,
                                 bool keep_fields = false);

struct PairingBound {
    /// E |<psi0, r>|^2 = Q0(r, r), evaluated spectrally.
    double exact = 0.0;
    /// ||q0||_{L^1} ||r||^2.
    double bound = 0.0;
    double l1 = 0.0;
    double r_norm_sq = 0.0;
    bool holds() const { return exact <= bound * (1.0 + 1e-12) + 1e-300; }
};

PairingBound mean_square_pairing_bound(const CovarianceSpectrum& q0, const ComplexSpinorField& r);
/// Same with a precomputed ||q0||_{L^1}.
PairingBound mean_square_pairing_bound(const CovarianceSpectrum& q0, double l1, const ComplexSpinorField& r);

/// Empirical E <psi0, r>^2 over an ensemble, with its standard error.
ScalarStats empirical_mean_square_pairing(const Ensemble& ens, const ComplexSpinorField& r);

/// exp(-Q_inf(W phi, W phi) / 2) with Q_inf built from qhat_limit(q0).
double limit_functional(const ComplexSpinorField& w_phi, const CovarianceSpectrum& q0, double mass);
double limit_functional(const WaveOperatorResult& w, const CovarianceSpectrum& q0, double mass);

}  // namespace diraclab
