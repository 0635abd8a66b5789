#include "diraclab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "diraclab/fft.hpp"
#include "diraclab/norms.hpp"
#include "diraclab/rng.hpp"

namespace diraclab {

ProfileKind parse_profile_kind(const std::string& name)
{
    if (name == "zero") return ProfileKind::zero;
    if (name == "gaussian-beta") return ProfileKind::gaussian_beta;
    if (name == "gaussian-scalar") return ProfileKind::gaussian_scalar;
    if (name == "power-scalar") return ProfileKind::power_scalar;
    throw InvalidParameter("unknown potential profile '" + name + "'");
}

std::string to_string(ProfileKind kind)
{
    switch (kind) {
    case ProfileKind::zero: return "zero";
    case ProfileKind::gaussian_beta: return "gaussian-beta";
    case ProfileKind::gaussian_scalar: return "gaussian-scalar";
    case ProfileKind::power_scalar: return "power-scalar";
    }
    return "zero";
}

double PotentialProfile::radial(double r) const
{
    switch (kind) {
    case ProfileKind::zero: return 0.0;
    case ProfileKind::gaussian_beta:
    case ProfileKind::gaussian_scalar: return amplitude * std::exp(-r * r / (2.0 * width * width));
    case ProfileKind::power_scalar: return amplitude * std::pow(1.0 + r * r, -0.5 * power);
    }
    return 0.0;
}

Mat4 PotentialProfile::shape() const
{
    if (kind == ProfileKind::gaussian_beta) return build_dirac_matrices(1.0).beta;
    return Mat4::Identity();
}

namespace {

// log of |f(r)| <r>^rho, -inf when f underflows.
double log_weighted_profile(const PotentialProfile& p, double r, double rho)
{
    const double bracket = 0.5 * rho * std::log1p(r * r);
    switch (p.kind) {
    case ProfileKind::zero: return -std::numeric_limits<double>::infinity();
    case ProfileKind::gaussian_beta:
    case ProfileKind::gaussian_scalar:
        return std::log(std::abs(p.amplitude)) - r * r / (2.0 * p.width * p.width) + bracket;
    case ProfileKind::power_scalar: return std::log(std::abs(p.amplitude)) - 0.5 * p.power * std::log1p(r * r) + bracket;
    }
    return 0.0;
}

Vec3 minimal_image(const PeriodicGrid& grid, const Vec3& x)
{
    const double L = grid.extent();
    Vec3 out;
    for (int a = 0; a < 3; ++a) out[a] = x[a] - L * std::floor(x[a] / L + 0.5);
    return out;
}

double operator_norm(const Mat4& v)
{
    Eigen::SelfAdjointEigenSolver<Mat4> es(v, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::string describe_site(const PeriodicGrid& grid, std::size_t site)
{
    const auto c = grid.coords(site);
    const Vec3 x = grid.position(site);
    std::ostringstream os;
    os << "site " << site << " (" << c[0] << "," << c[1] << "," << c[2] << ") at x=(" << x[0] << "," << x[1] << ","
       << x[2] << ")";
    return os.str();
}

}  // namespace

ComplexSpinorField LatticePotential::apply(const ComplexSpinorField& psi) const
{
    require_same_grid(grid, psi.grid(), "LatticePotential::apply");
    ComplexSpinorField out = psi;
    if (is_diagonal) kernels::apply_site_diagonal(diagonal, out);
    else kernels::apply_site_matrices(values, out);
    return out;
}

LatticePotential build_potential(const PeriodicGrid& grid, const PotentialProfile& profile, double rho,
                                 std::optional<double> declared_constant)
{
    if (!(rho > 5.0)) throw InvalidParameter("build_potential: declared decay exponent rho must exceed 5");
    if (!std::isfinite(profile.amplitude)) throw InvalidParameter("build_potential: amplitude must be finite");
    if ((profile.kind == ProfileKind::gaussian_beta || profile.kind == ProfileKind::gaussian_scalar) &&
        !(profile.width > 0.0))
        throw InvalidParameter("build_potential: Gaussian width must be positive");
    if (profile.kind == ProfileKind::power_scalar && !(profile.power > 0.0))
        throw InvalidParameter("build_potential: power must be positive");

    LatticePotential V;
    V.grid = grid;
    V.profile = profile;
    V.rho = rho;
    const std::size_t n = grid.size();
    V.values.assign(n, Mat4::Zero());
    V.diagonal.assign(4 * n, cd{});
    const Mat4 shape = profile.shape();
    const bool zero = profile.kind == ProfileKind::zero || profile.amplitude == 0.0;

    std::size_t worst = 0;
    double worst_value = 0.0;
    double boundary = 0.0;
    double hermitian_error = 0.0;
    for (std::size_t site = 0; site < n; ++site) {
        const Vec3 x = minimal_image(grid, grid.position(site) - profile.center);
        const double f = zero ? 0.0 : profile.radial(x.norm());
        Mat4& v = V.values[site];
        v = f * shape;
        hermitian_error = std::max(hermitian_error, (v - v.adjoint()).cwiseAbs().maxCoeff());
        const bool diag = (v - Mat4(v.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
        V.is_diagonal = V.is_diagonal && diag;
        for (int c = 0; c < 4; ++c) V.diagonal[4 * site + c] = v(c, c);
        const double norm_v = diag ? v.diagonal().cwiseAbs().maxCoeff() : operator_norm(v);
        V.max_norm = std::max(V.max_norm, norm_v);
        const double g = norm_v * std::pow(japanese_bracket(x), rho);
        if (g > worst_value) {
            worst_value = g;
            worst = site;
        }
        const auto c = grid.coords(site);
        if (c[0] == grid.n() / 2 || c[1] == grid.n() / 2 || c[2] == grid.n() / 2) boundary = std::max(boundary, norm_v);
    }
    if (hermitian_error > 1e-14) throw ValidationError("build_potential: potential is not Hermitian");
    if (!V.is_diagonal) V.diagonal.clear();
    V.decay_constant = worst_value;
    V.boundary_ratio = zero ? 0.0 : boundary / std::abs(profile.amplitude);
    V.periodization_ok = V.boundary_ratio < 1e-10;

    if (!zero) {
        // The lattice only samples |x| < L; the profile itself must stay bounded
        // against <x>^rho all the way out.
        const double near = log_weighted_profile(profile, 1e3, rho);
        const double far = log_weighted_profile(profile, 1e6, rho);
        if (far > near + 1e-9 && far > std::log(worst_value)) {
            std::ostringstream os;
            os << "build_potential: decay check failed, |V(x)|<x>^rho grows without bound for rho=" << rho << " ("
               << to_string(profile.kind) << " decays too slowly); largest lattice value " << worst_value << " at "
               << describe_site(grid, worst);
            throw ValidationError(os.str());
        }
    }
    if (declared_constant && worst_value > *declared_constant) {
        std::ostringstream os;
        os << "build_potential: decay check failed, |V(x)|<x>^rho = " << worst_value << " exceeds declared C="
           << *declared_constant << " at " << describe_site(grid, worst);
        throw ValidationError(os.str());
    }
    return V;
}

namespace {

// H = H0 + V acting in place on component-major buffers of 4 N values.
class HamiltonianOp {
public:
    HamiltonianOp(const LatticePotential& V, double mass) : V_(V), mass_(mass), k_(V.grid.size())
    {
        build_dirac_matrices(mass);
        for (std::size_t s = 0; s < k_.size(); ++s) k_[s] = V.grid.symbol_wavevector(s);
    }

    void apply(const cd* in, cd* out) const
    {
        const auto& grid = V_.grid;
        const std::size_t n = grid.size();
        std::copy(in, in + 4 * n, out);
        fft_forward_planes(grid, out, 4);
        const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < sn; ++si) {
            const auto s = static_cast<std::size_t>(si);
            const Vec3& k = k_[s];
            const cd kp{k[0], k[1]}, km{k[0], -k[1]};
            const cd u1 = out[s], u2 = out[n + s], l1 = out[2 * n + s], l2 = out[3 * n + s];
            // (sigma.k) (a, b) = (k3 a + (k1 - i k2) b, (k1 + i k2) a - k3 b)
            out[s] = mass_ * u1 - (k[2] * l1 + km * l2);
            out[n + s] = mass_ * u2 - (kp * l1 - k[2] * l2);
            out[2 * n + s] = -mass_ * l1 - (k[2] * u1 + km * u2);
            out[3 * n + s] = -mass_ * l2 - (kp * u1 - k[2] * u2);
        }
        fft_inverse_planes(grid, out, 4);
        if (V_.is_zero()) return;
        for (std::size_t s = 0; s < n; ++s) {
            if (V_.is_diagonal) {
                for (int c = 0; c < 4; ++c) out[c * n + s] += V_.diagonal[4 * s + c] * in[c * n + s];
            } else {
                const Mat4& v = V_.values[s];
                for (int a = 0; a < 4; ++a) {
                    cd acc{};
                    for (int b = 0; b < 4; ++b) acc += v(a, b) * in[b * n + s];
                    out[a * n + s] += acc;
                }
            }
        }
    }

private:
    const LatticePotential& V_;
    double mass_;
    std::vector<Vec3> k_;
};

}  // namespace

ComplexSpinorField apply_hamiltonian(const ComplexSpinorField& psi, const LatticePotential& V, double mass)
{
    require_same_grid(psi.grid(), V.grid, "apply_hamiltonian");
    ComplexSpinorField out(psi.grid());
    HamiltonianOp(V, mass).apply(psi.data(), out.data());
    return out;
}

PerturbedPropagator::PerturbedPropagator(const LatticePotential& V, double mass, double dt)
    : grid_(V.grid),
      mass_(mass),
      dt_(dt),
      zero_(V.is_zero()),
      diagonal_(V.is_diagonal)
{
    build_dirac_matrices(mass);
    if (!std::isfinite(dt) || dt == 0.0) throw InvalidParameter("PerturbedPropagator: dt must be finite and nonzero");
    if (zero_) return;
    phases_ = kernels::free_phases(grid_, mass, dt);
    const std::size_t n = grid_.size();
    if (diagonal_) {
        half_diag_.resize(4 * n);
        full_diag_.resize(4 * n);
        for (std::size_t i = 0; i < 4 * n; ++i) {
            const double d = V.diagonal[i].real();
            half_diag_[i] = std::polar(1.0, -0.5 * d * dt);
            full_diag_[i] = std::polar(1.0, -d * dt);
        }
    } else {
        half_mats_.resize(n);
        full_mats_.resize(n);
        for (std::size_t site = 0; site < n; ++site) {
            Eigen::SelfAdjointEigenSolver<Mat4> es(V.values[site]);
            const Mat4 u = es.eigenvectors();
            Eigen::Vector4cd h, f;
            for (int c = 0; c < 4; ++c) {
                h[c] = std::polar(1.0, -0.5 * es.eigenvalues()[c] * dt);
                f[c] = std::polar(1.0, -es.eigenvalues()[c] * dt);
            }
            half_mats_[site] = u * h.asDiagonal() * u.adjoint();
            full_mats_[site] = u * f.asDiagonal() * u.adjoint();
        }
    }
}

void PerturbedPropagator::apply_phase(ComplexSpinorField& psi, bool full) const
{
    if (diagonal_) kernels::apply_site_diagonal(full ? full_diag_ : half_diag_, psi);
    else kernels::apply_site_matrices(full ? full_mats_ : half_mats_, psi);
}

void PerturbedPropagator::advance(ComplexSpinorField& psi, int steps) const
{
    require_same_grid(grid_, psi.grid(), "PerturbedPropagator::advance");
    if (steps < 0) throw InvalidParameter("PerturbedPropagator::advance: negative step count");
    if (steps == 0) return;
    if (zero_) {
        SpinorSpectrum hat = fft_forward(psi);
        kernels::apply_free_propagator(mass_, steps * dt_, hat);
        psi = fft_inverse(hat);
        return;
    }
    apply_phase(psi, false);
    for (int i = 0; i < steps; ++i) {
        SpinorSpectrum hat = fft_forward(psi);
        kernels::apply_free_propagator(phases_, mass_, hat);
        psi = fft_inverse(hat);
        apply_phase(psi, i + 1 < steps);
    }
}

int step_count(double t, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("time step dt must be positive");
    if (!std::isfinite(t)) throw InvalidParameter("time must be finite");
    const double ratio = std::abs(t) / dt;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
        throw InvalidParameter("time step dt must divide the evolution time");
    if (steps > 1e9) throw InvalidParameter("too many time steps");
    return static_cast<int>(steps);
}

ComplexSpinorField evolve_perturbed(const ComplexSpinorField& psi0, const LatticePotential& V, double mass,
                                    double t, double dt)
{
    require_same_grid(psi0.grid(), V.grid, "evolve_perturbed");
    const int steps = step_count(t, dt);
    ComplexSpinorField psi = psi0;
    if (steps == 0) {
        build_dirac_matrices(mass);
        return psi;
    }
    PerturbedPropagator(V, mass, t > 0 ? dt : -dt).advance(psi, steps);
    return psi;
}

ComplexSpinorField dual_evolve_perturbed(const ComplexSpinorField& phi, const LatticePotential& V, double mass,
                                         double t, double dt)
{
    return evolve_perturbed(phi, V, mass, -t, dt);
}

double SpectralDecomposition::min_threshold_distance() const
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto& b : bound_states) d = std::min(d, mass - std::abs(b.omega));
    return d;
}

double SpectralDecomposition::max_residual() const
{
    double r = 0.0;
    for (const auto& b : bound_states) r = std::max(r, b.residual);
    return r;
}

namespace {

using Block = Eigen::MatrixXcd;

ComplexSpinorField column_to_field(const PeriodicGrid& grid, const Block& x, Eigen::Index col)
{
    ComplexSpinorField f(grid);
    std::memcpy(static_cast<void*>(f.data()), x.col(col).data(), sizeof(cd) * f.values().size());
    return f;
}

Block apply_block(const Block& x, const HamiltonianOp& h)
{
    Block y(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) h.apply(x.col(j).data(), y.col(j).data());
    return y;
}

Block orthonormalize(const Block& x)
{
    Eigen::HouseholderQR<Block> qr(x);
    return qr.householderQ() * Block::Identity(x.rows(), x.cols());
}

// Scaled Chebyshev filter of degree d for A = H^2, damping [a, b] and
// amplifying below a; a0 estimates the bottom of the spectrum.
Block chebyshev_filter(const Block& x0, const HamiltonianOp& h, int degree, double a, double b, double a0)
{
    const double e = 0.5 * (b - a);
    const double c = 0.5 * (b + a);
    double sigma = e / (a0 - c);
    const double sigma1 = sigma;
    auto apply_a = [&](const Block& v) { return apply_block(apply_block(v, h), h); };
    Block x = x0;
    Block y = (apply_a(x) - c * x) * (sigma1 / e);
    for (int i = 2; i <= degree; ++i) {
        const double sigma2 = 1.0 / (2.0 / sigma1 - sigma);
        Block ynew = (apply_a(y) - c * y) * (2.0 * sigma2 / e) - (sigma * sigma2) * x;
        x = std::move(y);
        y = std::move(ynew);
        sigma = sigma2;
    }
    return y;
}

Block random_block(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, Eigen::Index first)
{
    Block x(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        RandomStream rng(seed, static_cast<std::uint64_t>(first + j));
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = rng.normal();
            x(i, j) = cd{re, rng.normal()};
        }
    }
    return x;
}

}  // namespace

SpectralDecomposition spectral_decompose(const LatticePotential& V, double mass, const SpectralOptions& options)
{
    const auto& grid = V.grid;
    build_dirac_matrices(mass);
    if (grid.n() > options.max_grid)
        throw InvalidParameter("spectral_decompose: grid larger than the eigen-solver limit n <= " +
                               std::to_string(options.max_grid));
    if (!(options.gap_margin > 0.0)) throw InvalidParameter("spectral_decompose: gap_margin must be positive");
    if (options.subspace < 2 || options.degree < 1) throw InvalidParameter("spectral_decompose: bad solver sizes");

    const Eigen::Index rows = static_cast<Eigen::Index>(4 * grid.size());
    double kmax2 = 0.0;
    for (std::size_t site = 0; site < grid.size(); ++site)
        kmax2 = std::max(kmax2, grid.symbol_wavevector(site).squaredNorm());
    const double upper = std::pow(std::sqrt(kmax2 + mass * mass) + V.max_norm, 2) * 1.01;

    const HamiltonianOp hop(V, mass);
    Eigen::Index p = std::min<Eigen::Index>(options.subspace, rows);
    Block x = orthonormalize(random_block(rows, p, options.seed, 0));

    SpectralDecomposition out;
    out.grid = grid;
    out.mass = mass;
    out.gap_margin = options.gap_margin;

    // Eigenvalues this close to +-m are threshold values (the k = 0 modes of
    // the free lattice sit exactly at +-m), not bound states.
    const double gap_edge = mass * (1.0 - 1e-10);
    Eigen::VectorXd theta;
    Block z, hz;
    int it = 0;
    for (;; ++it) {
        // Rayleigh-Ritz with H^2 on the subspace; X^* H^2 X = (HX)^* (HX).
        Block w = apply_block(x, hop);
        Block g2 = w.adjoint() * w;
        g2 = 0.5 * (g2 + g2.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Block> es2(g2);
        const Eigen::VectorXd mu = es2.eigenvalues();
        x = (x * es2.eigenvectors()).eval();
        w = (w * es2.eigenvectors()).eval();

        // Gap candidates are the H^2 Ritz pairs below m^2; H is diagonalized
        // only inside their span, so +-omega pairs of one H^2 cluster cannot mix.
        Eigen::Index c = 0;
        while (c < p && mu[c] < gap_edge * gap_edge) ++c;
        const Block y = x.leftCols(c);
        const Block hy = w.leftCols(c);
        if (c > 0) {
            Block g = y.adjoint() * hy;
            g = 0.5 * (g + g.adjoint()).eval();
            Eigen::SelfAdjointEigenSolver<Block> es(g);
            theta = es.eigenvalues();
            z = y * es.eigenvectors();
            hz = hy * es.eigenvectors();
        } else {
            theta.resize(0);
            z.resize(rows, 0);
            hz.resize(rows, 0);
        }

        int settled = 0;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < c; ++j) {
            const double r = (hz.col(j) - theta[j] * z.col(j)).norm();
            worst = std::max(worst, r);
            if (r < 1e-4) ++settled;
        }
        // The first pair above the gap must have converged too, otherwise the
        // subspace has not yet reached the bottom of the spectrum.
        double edge_residual = 0.0;
        if (c < p) {
            const Block w2 = apply_block(w.col(c), hop);
            edge_residual = (w2.col(0) - mu[c] * x.col(c)).norm() / std::max(1.0, mu[c]);
        }
        const double top = mu[p - 1];
        const double bottom = mu[0];
        if (settled + 4 > p && p < rows) {
            // Converged gap states fill the subspace: widen it and keep iterating.
            const Eigen::Index extra = std::min<Eigen::Index>(p, rows - p);
            Block grown(rows, p + extra);
            grown << x, random_block(rows, extra, options.seed, p);
            p += extra;
            x = orthonormalize(grown);
            continue;
        }
        if (top > mass * mass && worst < options.tolerance && edge_residual < 1e-6) break;
        if (it >= options.max_iterations)
            throw Error("spectral_decompose: no convergence after " + std::to_string(it) +
                        " iterations (worst residual " + std::to_string(worst) + ")");
        const double a = std::max(top, mass * mass * 1.0001);
        x = orthonormalize(chebyshev_filter(x, hop, options.degree, a, upper, bottom));
    }
    out.iterations = it;
    out.subspace = static_cast<int>(p);

    const double scale = 1.0 / std::sqrt(grid.cell_volume());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        BoundState b;
        b.omega = theta[j];
        b.residual = (hz.col(j) - theta[j] * z.col(j)).norm();
        b.zeta = column_to_field(grid, z, j);
        b.zeta *= scale;
        out.bound_states.push_back(std::move(b));
    }
    auto& states = out.bound_states;
    for (std::size_t i = 0; i < states.size();) {
        std::size_t j = i + 1;
        while (j < states.size() && std::abs(states[j].omega - states[i].omega) < 1e-7 * std::max(1.0, mass)) ++j;
        for (std::size_t k = i; k < j; ++k) states[k].multiplicity = static_cast<int>(j - i);
        i = j;
    }
    out.near_threshold = out.min_threshold_distance() <= options.gap_margin;
    if (out.near_threshold && !options.force) {
        std::ostringstream os;
        os << "spectral_decompose: eigenvalue within gap margin " << options.gap_margin
           << " of the threshold (distance " << out.min_threshold_distance() << "); refusing the run";
        throw RefusedRun(os.str());
    }
    return out;
}

ComplexSpinorField project_discrete(const ComplexSpinorField& psi, const SpectralDecomposition& decomp)
{
    require_same_grid(psi.grid(), decomp.grid, "project_discrete");
    ComplexSpinorField out(psi.grid());
    for (const auto& b : decomp.bound_states) {
        const cd c = inner(b.zeta, psi);
        const auto z = b.zeta.values();
        auto o = out.values();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += c * z[i];
    }
    return out;
}

ComplexSpinorField project_continuous(const ComplexSpinorField& psi, const SpectralDecomposition& decomp)
{
    if (decomp.bound_states.empty()) {
        require_same_grid(psi.grid(), decomp.grid, "project_continuous");
        return psi;
    }
    return psi - project_discrete(psi, decomp);
}

double resolvent_check(const ComplexSpinorField& zeta, double lambda, const LatticePotential& V, double mass)
{
    require_same_grid(zeta.grid(), V.grid, "resolvent_check");
    if (!(std::abs(lambda) < mass)) throw InvalidParameter("resolvent_check: lambda must lie inside the gap (-m, m)");
    const auto& grid = zeta.grid();
    const DiracMatrixSet dirac = build_dirac_matrices(mass);
    ComplexSpinorField f = V.apply(zeta);
    f *= -1.0;
    const SpinorSpectrum fhat = fft_forward(f);
    const SpinorSpectrum zhat = fft_forward(zeta);
    double num = 0.0, den = 0.0;
    for (std::size_t site = 0; site < grid.size(); ++site) {
        const Vec3 k = grid.symbol_wavevector(site);
        const double denom = k.squaredNorm() + mass * mass - lambda * lambda;
        if (!(denom > 0.0)) throw RefusedRun("resolvent_check: singular denominator k^2 + m^2 - lambda^2");
        const Mat4 numer = free_hamiltonian_symbol(dirac, k) + lambda * Mat4::Identity();
        const Spinor4 rhs = numer * spinor_at(fhat, site) / denom;
        const Spinor4 z = spinor_at(zhat, site);
        num += (z - rhs).squaredNorm();
        den += z.squaredNorm();
    }
    if (den == 0.0) throw InvalidParameter("resolvent_check: zero field");
    return std::sqrt(num / den);
}

EigenfunctionDecay eigenfunction_decay(const ComplexSpinorField& zeta)
{
    const auto& grid = zeta.grid();
    const double h = grid.spacing();
    const double half = 0.5 * grid.extent();
    const int bins = static_cast<int>(std::floor(half / h)) + 1;
    std::vector<double> shell(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t site = 0; site < grid.size(); ++site) {
        const double r = grid.radius(site);
        const int b = static_cast<int>(std::floor(r / h + 0.5));
        if (b >= bins) continue;
        shell[static_cast<std::size_t>(b)] = std::max(shell[static_cast<std::size_t>(b)], spinor_at(zeta, site).norm());
    }
    EigenfunctionDecay out;
    std::vector<double> logs;
    // Bulk: skip the innermost two shells and the last one (incomplete near the faces).
    for (int b = 2; b < bins - 1; ++b) {
        if (shell[static_cast<std::size_t>(b)] <= 0.0) continue;
        out.shell_radius.push_back(b * h);
        out.shell_max.push_back(shell[static_cast<std::size_t>(b)]);
        logs.push_back(std::log(shell[static_cast<std::size_t>(b)]));
    }
    if (out.shell_radius.size() < 2) throw InvalidParameter("eigenfunction_decay: grid too small for a bulk fit");
    const LineFit fit = fit_line(out.shell_radius, logs);
    out.rate = -fit.slope;
    out.constant = std::exp(fit.intercept);
    out.fit_residual = fit.residual;
    for (int s = 1; s <= 4; ++s) out.weighted_norms.push_back(weighted_norm(zeta, {0.0, static_cast<double>(s)}));
    return out;
}

DecayReport decay_diagnostic(const ComplexSpinorField& psi0, const LatticePotential& V, double mass,
                             const SpectralDecomposition* decomp, const DecayOptions& options)
{
    require_same_grid(psi0.grid(), V.grid, "decay_diagnostic");
    const auto& grid = psi0.grid();
    if (options.require_weight && !(options.sigma > 2.5))
        throw InvalidParameter("decay_diagnostic: weight exponent sigma must exceed 5/2");
    if (options.times.empty()) throw InvalidParameter("decay_diagnostic: empty time grid");
    if (!std::is_sorted(options.times.begin(), options.times.end()) || options.times.front() < 0.0)
        throw InvalidParameter("decay_diagnostic: times must be nonnegative and increasing");
    if (!(options.times.back() < 0.5 * grid.extent()))
        throw RefusedRun("decay_diagnostic: t_max must stay below L/2 (recurrence window)");

    DecayReport out;
    out.sigma = options.sigma;
    out.times = options.times;
    const PerturbedPropagator prop(V, mass, options.dt);
    ComplexSpinorField psi = psi0;
    int done = 0;
    for (const double t : options.times) {
        const int target = step_count(t, options.dt);
        prop.advance(psi, target - done);
        done = target;
        const ComplexSpinorField pc = decomp ? project_continuous(psi, *decomp) : psi;
        out.norms.push_back(weighted_norm(pc, {0.0, -options.sigma}));
    }
    std::vector<double> x(out.times.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + out.times[i];
    out.fit = fit_loglog(x, out.norms);
    return out;
}

}  // namespace diraclab
