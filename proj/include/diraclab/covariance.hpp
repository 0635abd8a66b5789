#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "diraclab/field.hpp"

namespace diraclab {

// Normalization used throughout: the real-space correlation q(z) is per site
// and q^(k) = sum_z q(z) exp(+ik.z) is dimensionless, so
//   E R psi^(k) R psi^(k)^* = N q^(k),   tr q(0) = N^-1 sum_k tr q^(k),
// and q^ = I on every mode has mean charge 8.

/// k -> 8x8 Hermitian PSD spectral density of a stationary real-form field.
class CovarianceSpectrum {
public:
    CovarianceSpectrum() = default;
    explicit CovarianceSpectrum(const PeriodicGrid& grid);

    static CovarianceSpectrum identity(const PeriodicGrid& grid, double scale = 1.0);
    /// Scalar spectrum f(k) I, e.g. |a^(k)|^2 of a moving-average kernel.
    static CovarianceSpectrum scalar(const PeriodicGrid& grid, const std::vector<double>& density);
    /// I + strength * M on every mode, with M = A A^T / 8 for a standard
    /// normal 8x8 matrix A drawn from `seed`. Constant, real and PSD, and it
    /// does not commute with P^, so the dynamics moves it.
    static CovarianceSpectrum anisotropic(const PeriodicGrid& grid, double strength, std::uint64_t seed);
    static CovarianceSpectrum from_function(const PeriodicGrid& grid,
                                            const std::function<Mat8(std::size_t site)>& fn);

    const PeriodicGrid& grid() const { return grid_; }
    std::size_t size() const { return modes_.size(); }
    const Mat8& operator[](std::size_t site) const { return modes_[site]; }
    Mat8& operator[](std::size_t site) { return modes_[site]; }
    const std::vector<Mat8>& modes() const { return modes_; }

    /// Smallest eigenvalue over all modes.
    double min_eigenvalue() const;
    /// sup_k ||q^(k)|| (spectral norm).
    double sup_norm() const;
    /// Throws ValidationError naming the first failing mode unless the
    /// spectrum is finite, Hermitian, PSD (eigenvalues >= -tol) and satisfies
    /// q^(-k) = conj q^(k) = q^(k)^T.
    void validate(double tol = 1e-10) const;

    double max_abs_difference(const CovarianceSpectrum& other) const;

private:
    PeriodicGrid grid_;
    std::vector<Mat8> modes_;
};

/// Real-space correlation q(z), one real 8x8 matrix per offset site.
struct RealspaceKernel {
    PeriodicGrid grid;
    std::vector<RMat8> values;
    /// Largest imaginary part discarded by the inverse transform.
    double max_imag = 0.0;

    const RMat8& at(std::size_t site) const { return values[site]; }
};

RealspaceKernel to_realspace(const CovarianceSpectrum& q);
CovarianceSpectrum to_spectrum(const RealspaceKernel& q);

/// q_t^(k) = G_t(k) q0^(k) G_t(k)^*.
CovarianceSpectrum qhat_evolve(const CovarianceSpectrum& q0, double mass, double t);
/// Same quantity from the expanded cos 2wt / sin 2wt / (1 - cos 2wt) form.
CovarianceSpectrum qhat_evolve_expanded(const CovarianceSpectrum& q0, double mass, double t);
/// q_inf^(k) = q0/2 - P^ q0 P^ / (2 w^2).
CovarianceSpectrum qhat_limit(const CovarianceSpectrum& q0, double mass);
/// (t1 - t0)^-1 int_{t0}^{t1} q_t^ dt in closed form.
CovarianceSpectrum qhat_time_average(const CovarianceSpectrum& q0, double mass, double t0, double t1);
/// Single-mode versions of the above (k is a symbol wavevector).
Mat8 qhat_evolve_mode(const Mat8& q0, const Vec3& k, double mass, double t);
Mat8 qhat_limit_mode(const Mat8& q0, const Vec3& k, double mass);
Mat8 qhat_time_average_mode(const Mat8& q0, const Vec3& k, double mass, double t0, double t1);

/// Lattice Klein-Gordon Green function: the kernel of (-Delta + m^2)^-1,
/// normalized so that h^3 sum_y green(z - y) f(y) has symbol 1/(k^2 + m^2).
std::vector<double> lattice_green(const PeriodicGrid& grid, double mass);

struct RealspaceLimit {
    RealspaceKernel fourier;      ///< inverse transform of qhat_limit
    RealspaceKernel convolution;  ///< q0/2 + sign * green * (P q0 P^*) / 2, assembled in real space
    double sign = 1.0;            ///< the sign of the convolution term that reconciles both routes
    double discrepancy = 0.0;     ///< max entry difference at that sign
    double discrepancy_other_sign = 0.0;
};

/// Both routes to q_inf(z). The convolution route costs O(N^2) and is meant for small grids.
RealspaceLimit q_limit_realspace(const CovarianceSpectrum& q0, double mass);

/// Q(phi, phi) = h^6 N^-1 sum_k R phi^(k)^* q^(k) R phi^(k).
double quadratic_form(const CovarianceSpectrum& q, const RealSpinorField& phi);
double quadratic_form(const CovarianceSpectrum& q, const ComplexSpinorField& phi);
/// Bilinear version Q(phi, chi).
double bilinear_form(const CovarianceSpectrum& q, const RealSpinorField& phi, const RealSpinorField& chi);

/// e = tr q(0) = N^-1 sum_k tr q^(k).
double mean_charge(const CovarianceSpectrum& q);

/// ||q||_{L^1} = h^3 sum_z sum_ij |q^{ij}(z)|.
double l1_norm(const RealspaceKernel& q);

struct MixingReport {
    bool pointwise_ok = false;   ///< |q^{ij}(z)| <= C e0 phi(|z|)^{1/2} with finite C
    bool integral_ok = false;    ///< int_0^inf r^2 phi^{1/2} dr converges
    double measured_c = 0.0;
    double integral_short = 0.0;  ///< integral up to 10 L
    double integral_long = 0.0;   ///< integral up to 20 L
    std::string offending;       ///< description of the first violation, if any
    bool pass() const { return pointwise_ok && integral_ok; }
};

/// Checks a declared mixing profile phi(r) against a real-space correlation.
MixingReport validate_mixing_bound(const RealspaceKernel& q0, double e0, const std::function<double(double)>& phi);

/// CSV: header line, then one row per mode
///   site,jx,jy,jz,re00,im00,re01,im01,...,re77,im77
void write_spectrum_csv(std::ostream& out, const CovarianceSpectrum& q);
CovarianceSpectrum read_spectrum_csv(std::istream& in);
/// JSON: {"n", "L", "modes": [{"site", "re": [64], "im": [64]}]} with row-major entries.
std::string spectrum_to_json(const CovarianceSpectrum& q);
CovarianceSpectrum spectrum_from_json(const std::string& text);

}  // namespace diraclab
