#include "diraclab/kernels.hpp"

#include <cmath>

#include "diraclab/errors.hpp"

namespace diraclab::kernels {

namespace {

std::size_t block_count(std::size_t n) { return (n + reduction_block - 1) / reduction_block; }

template <class T, class Term>
T blocked_reduce(std::size_t n, Term term)
{
    const std::size_t blocks = block_count(n);
    std::vector<T> partial(blocks, T{});
    const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * reduction_block;
        const std::size_t hi = std::min(n, lo + reduction_block);
        T acc{};
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        partial[static_cast<std::size_t>(b)] = acc;
    }
    T total{};
    for (const T& p : partial) total += p;
    return total;
}

void require_size(std::size_t got, std::size_t want, const char* what)
{
    if (got != want) throw ShapeError(std::string(what) + ": size mismatch");
}

}  // namespace

double sum_squares(std::span<const cd> v)
{
    return blocked_reduce<double>(v.size(), [&](std::size_t i) { return std::norm(v[i]); });
}

double sum_squares(std::span<const double> v)
{
    return blocked_reduce<double>(v.size(), [&](std::size_t i) { return v[i] * v[i]; });
}

cd conj_dot(std::span<const cd> a, std::span<const cd> b)
{
    require_size(a.size(), b.size(), "conj_dot");
    return blocked_reduce<cd>(a.size(), [&](std::size_t i) { return std::conj(a[i]) * b[i]; });
}

double dot(std::span<const double> a, std::span<const double> b)
{
    require_size(a.size(), b.size(), "dot");
    return blocked_reduce<double>(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

FreePhases free_phases(const PeriodicGrid& grid, double mass, double t)
{
    FreePhases p;
    const std::size_t n = grid.size();
    p.cos_wt.resize(n);
    p.sinc_wt.resize(n);
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < sn; ++s) {
        const auto site = static_cast<std::size_t>(s);
        const double w = omega(grid.symbol_wavevector(site), mass);
        p.cos_wt[site] = std::cos(w * t);
        p.sinc_wt[site] = std::sin(w * t) / w;
    }
    return p;
}

namespace {

// Applies cos - i s H0 with H0 = -alpha.k + beta m written out in 2x2 blocks:
// (H0 psi)_upper = m u - (sigma.k) l, (H0 psi)_lower = -m l - (sigma.k) u.
inline void free_step_at(const Vec3& k, double mass, double c, double s, cd& u1, cd& u2, cd& l1, cd& l2)
{
    const cd kp{k[0], k[1]};  // k1 + i k2
    const cd km{k[0], -k[1]};  // k1 - i k2
    const double k3 = k[2];
    const cd su1 = k3 * l1 + km * l2;
    const cd su2 = kp * l1 - k3 * l2;
    const cd sl1 = k3 * u1 + km * u2;
    const cd sl2 = kp * u1 - k3 * u2;
    const cd h1 = mass * u1 - su1;
    const cd h2 = mass * u2 - su2;
    const cd h3 = -mass * l1 - sl1;
    const cd h4 = -mass * l2 - sl2;
    const cd mis{0.0, -s};
    u1 = c * u1 + mis * h1;
    u2 = c * u2 + mis * h2;
    l1 = c * l1 + mis * h3;
    l2 = c * l2 + mis * h4;
}

}  // namespace

void apply_free_propagator(const FreePhases& phases, double mass, SpinorSpectrum& spectrum)
{
    const auto& grid = spectrum.grid();
    const std::size_t n = grid.size();
    require_size(phases.cos_wt.size(), n, "apply_free_propagator");
    cd* p0 = spectrum.component(0).data();
    cd* p1 = spectrum.component(1).data();
    cd* p2 = spectrum.component(2).data();
    cd* p3 = spectrum.component(3).data();
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < sn; ++s) {
        const auto site = static_cast<std::size_t>(s);
        free_step_at(grid.symbol_wavevector(site), mass, phases.cos_wt[site], phases.sinc_wt[site], p0[site], p1[site],
                     p2[site], p3[site]);
    }
}

void apply_free_propagator(double mass, double t, SpinorSpectrum& spectrum)
{
    const auto& grid = spectrum.grid();
    cd* p0 = spectrum.component(0).data();
    cd* p1 = spectrum.component(1).data();
    cd* p2 = spectrum.component(2).data();
    cd* p3 = spectrum.component(3).data();
    const auto sn = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < sn; ++s) {
        const auto site = static_cast<std::size_t>(s);
        const Vec3 k = grid.symbol_wavevector(site);
        const double w = omega(k, mass);
        free_step_at(k, mass, std::cos(w * t), std::sin(w * t) / w, p0[site], p1[site], p2[site], p3[site]);
    }
}

void apply_site_diagonal(std::span<const cd> diagonal, ComplexSpinorField& field)
{
    const std::size_t n = field.sites();
    require_size(diagonal.size(), 4 * n, "apply_site_diagonal");
    const auto sn = static_cast<std::ptrdiff_t>(n);
    for (int c = 0; c < 4; ++c) {
        cd* p = field.component(c).data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t s = 0; s < sn; ++s) p[s] *= diagonal[4 * static_cast<std::size_t>(s) + c];
    }
}

void apply_site_matrices(std::span<const Mat4> matrices, ComplexSpinorField& field)
{
    const std::size_t n = field.sites();
    require_size(matrices.size(), n, "apply_site_matrices");
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < sn; ++s) {
        const auto site = static_cast<std::size_t>(s);
        const Spinor4 v = spinor_at(field, site);
        set_spinor(field, site, matrices[site] * v);
    }
}

void apply_mode_matrices(std::span<const Mat8> matrices, RealSpinorSpectrum& spectrum)
{
    const std::size_t n = spectrum.sites();
    require_size(matrices.size(), n, "apply_mode_matrices");
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < sn; ++s) {
        const auto site = static_cast<std::size_t>(s);
        Eigen::Matrix<cd, 8, 1> v;
        for (int c = 0; c < 8; ++c) v[c] = spectrum(c, site);
        const Eigen::Matrix<cd, 8, 1> out = matrices[site] * v;
        for (int c = 0; c < 8; ++c) spectrum(c, site) = out[c];
    }
}

namespace reference {

double sum_squares(std::span<const cd> v)
{
    double acc = 0.0;
    for (const cd& x : v) acc += std::norm(x);
    return acc;
}

cd conj_dot(std::span<const cd> a, std::span<const cd> b)
{
    require_size(a.size(), b.size(), "reference::conj_dot");
    cd acc{};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

void apply_free_propagator(double mass, double t, SpinorSpectrum& spectrum)
{
    const DiracMatrixSet dirac = build_dirac_matrices(mass);
    const auto& grid = spectrum.grid();
    for (std::size_t site = 0; site < grid.size(); ++site) {
        const Mat4 u = free_propagator_symbol(dirac, grid.symbol_wavevector(site), t);
        set_spinor(spectrum, site, u * spinor_at(spectrum, site));
    }
}

void apply_site_diagonal(std::span<const cd> diagonal, ComplexSpinorField& field)
{
    require_size(diagonal.size(), 4 * field.sites(), "reference::apply_site_diagonal");
    for (std::size_t site = 0; site < field.sites(); ++site)
        for (int c = 0; c < 4; ++c) field(c, site) *= diagonal[4 * site + c];
}

void apply_site_matrices(std::span<const Mat4> matrices, ComplexSpinorField& field)
{
    require_size(matrices.size(), field.sites(), "reference::apply_site_matrices");
    for (std::size_t site = 0; site < field.sites(); ++site) {
        Spinor4 out = Spinor4::Zero();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out[i] += matrices[site](i, j) * field(j, site);
        set_spinor(field, site, out);
    }
}

void apply_mode_matrices(std::span<const Mat8> matrices, RealSpinorSpectrum& spectrum)
{
    require_size(matrices.size(), spectrum.sites(), "reference::apply_mode_matrices");
    for (std::size_t site = 0; site < spectrum.sites(); ++site) {
        cd out[8] = {};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) out[i] += matrices[site](i, j) * spectrum(j, site);
        for (int i = 0; i < 8; ++i) spectrum(i, site) = out[i];
    }
}

}  // namespace reference

}  // namespace diraclab::kernels
