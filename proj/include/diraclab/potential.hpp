#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diraclab/field.hpp"
#include "diraclab/fit.hpp"
#include "diraclab/kernels.hpp"

namespace diraclab {

enum class ProfileKind { zero, gaussian_beta, gaussian_scalar, power_scalar };

ProfileKind parse_profile_kind(const std::string& name);
std::string to_string(ProfileKind kind);

/// Continuum potential V(x) = f(|x - center|) M with M = beta or I:
///   gaussian-beta    f = A exp(-r^2 / 2w^2), M = beta
///   gaussian-scalar  f = A exp(-r^2 / 2w^2), M = I (A < 0 is attractive)
///   power-scalar     f = A <r>^-p,           M = I
struct PotentialProfile {
    ProfileKind kind = ProfileKind::zero;
    double amplitude = 0.0;
    double width = 2.0;
    double power = 3.0;
    Vec3 center = Vec3::Zero();

    double radial(double r) const;
    Mat4 shape() const;
};

/// Matrix potential restricted to the torus.
struct LatticePotential {
    PeriodicGrid grid;
    PotentialProfile profile;
    double rho = 6.0;
    /// Per-site Hermitian values V(x).
    std::vector<Mat4> values;
    /// True when every V(x) is diagonal; `diagonal` then holds 4 entries per site.
    bool is_diagonal = true;
    std::vector<cd> diagonal;
    /// max_x ||V(x)|| <x>^rho over the lattice.
    double decay_constant = 0.0;
    /// max ||V|| over sites on the faces of the box, relative to |A|.
    double boundary_ratio = 0.0;
    /// boundary_ratio < 1e-10: the periodized profile is a faithful stand-in
    /// for decay at infinity.
    bool periodization_ok = true;
    double max_norm = 0.0;

    double amplitude() const { return profile.amplitude; }
    bool is_zero() const { return max_norm == 0.0; }
    /// V psi, site by site.
    ComplexSpinorField apply(const ComplexSpinorField& psi) const;
};

/// Builds V on the grid and runs the decay check |V(x)| <x>^rho <= C.
/// rho must exceed 5. Throws ValidationError naming the offending site when
/// the profile decays slower than <x>^-rho or exceeds `declared_constant`.
LatticePotential build_potential(const PeriodicGrid& grid, const PotentialProfile& profile, double rho,
                                 std::optional<double> declared_constant = std::nullopt);

/// H psi = (-i alpha.grad + beta m + V) psi.
ComplexSpinorField apply_hamiltonian(const ComplexSpinorField& psi, const LatticePotential& V, double mass);

/// Strang splitting e^{-iV dt/2} U0(dt) e^{-iV dt/2}. The potential phase is
/// the exact per-site matrix exponential. dt may be negative (backward flow).
class PerturbedPropagator {
public:
    PerturbedPropagator(const LatticePotential& V, double mass, double dt);

    double dt() const { return dt_; }
    double mass() const { return mass_; }
    const PeriodicGrid& grid() const { return grid_; }

    /// Advances psi by `steps` steps; consecutive half phases are fused.
    void advance(ComplexSpinorField& psi, int steps) const;

private:
    void apply_phase(ComplexSpinorField& psi, bool full) const;

    PeriodicGrid grid_;
    double mass_;
    double dt_;
    bool zero_;
    bool diagonal_;
    kernels::FreePhases phases_;
    std::vector<cd> half_diag_, full_diag_;
    std::vector<Mat4> half_mats_, full_mats_;
};

/// Number of steps t / dt; throws InvalidParameter unless dt > 0 divides t.
int step_count(double t, double dt);

/// U(t) psi0 for the perturbed equation i psi' = (H0 + V) psi.
ComplexSpinorField evolve_perturbed(const ComplexSpinorField& psi0, const LatticePotential& V, double mass,
                                    double t, double dt);
/// Dual group U'(t) = U(-t).
ComplexSpinorField dual_evolve_perturbed(const ComplexSpinorField& phi, const LatticePotential& V, double mass,
                                         double t, double dt);

struct BoundState {
    double omega = 0.0;
    ComplexSpinorField zeta;
    /// Size of the eigenspace this vector belongs to.
    int multiplicity = 1;
    /// ||H zeta - omega zeta|| with ||zeta|| = 1.
    double residual = 0.0;
};

struct SpectralOptions {
    double gap_margin = 1e-3;
    /// Initial subspace size; grown automatically when the gap fills it.
    int subspace = 32;
    int degree = 40;
    double tolerance = 1e-10;
    int max_iterations = 400;
    int max_grid = 16;
    std::uint64_t seed = 1;
    /// Accept eigenvalues within gap_margin of the thresholds.
    bool force = false;
};

struct SpectralDecomposition {
    PeriodicGrid grid;
    double mass = 1.0;
    double gap_margin = 1e-3;
    std::vector<BoundState> bound_states;
    bool near_threshold = false;
    int iterations = 0;
    int subspace = 0;

    double min_threshold_distance() const;
    double max_residual() const;
};

/// All eigenpairs of H in (-m, m), by Chebyshev-filtered subspace iteration on
/// H^2 with Rayleigh-Ritz on H. Throws RefusedRun when an eigenvalue lies
/// within gap_margin of +-m unless options.force.
SpectralDecomposition spectral_decompose(const LatticePotential& V, double mass, const SpectralOptions& options = {});

/// P_d psi = sum_j zeta_j (zeta_j, psi).
ComplexSpinorField project_discrete(const ComplexSpinorField& psi, const SpectralDecomposition& decomp);
/// P_c psi = psi - P_d psi.
ComplexSpinorField project_continuous(const ComplexSpinorField& psi, const SpectralDecomposition& decomp);

/// Relative residual of zeta = R0(lambda)(-V zeta), evaluated per mode as
/// zeta^(k) - (-alpha.k + beta m + lambda)(-V zeta)^(k) / (k^2 + m^2 - lambda^2).
double resolvent_check(const ComplexSpinorField& zeta, double lambda, const LatticePotential& V, double mass);

struct EigenfunctionDecay {
    /// |zeta(x)| <= C exp(-rate |x|) fitted on shell maxima over the bulk.
    double rate = 0.0;
    double constant = 0.0;
    double fit_residual = 0.0;
    std::vector<double> shell_radius;
    std::vector<double> shell_max;
    /// ||<x>^s zeta|| for s = 1..4.
    std::vector<double> weighted_norms;
};

EigenfunctionDecay eigenfunction_decay(const ComplexSpinorField& zeta);

struct DecayOptions {
    double sigma = 3.0;
    std::vector<double> times;
    double dt = 0.05;
    /// Enforce sigma > 5/2; switched off only for the unweighted sanity check.
    bool require_weight = true;
};

struct DecayReport {
    std::vector<double> times;
    /// ||P_c U(t) psi0||_{L^2_{-sigma}}.
    std::vector<double> norms;
    LineFit fit;
    double sigma = 0.0;
};

/// Weighted-norm decay of P_c U(t) psi0 with a log-log fit against 1 + t.
/// decomp may be null (no bound states to remove). Throws RefusedRun for
/// t >= L/2, past which waves wrap around the torus.
DecayReport decay_diagnostic(const ComplexSpinorField& psi0, const LatticePotential& V, double mass,
                             const SpectralDecomposition* decomp, const DecayOptions& options);

}  // namespace diraclab
