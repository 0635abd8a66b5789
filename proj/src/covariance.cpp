#include "diraclab/covariance.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "diraclab/errors.hpp"
#include "diraclab/fft.hpp"
#include "diraclab/rng.hpp"
#include "json.hpp"

namespace diraclab {

namespace {

using Planes = std::vector<cd, AlignedAllocator<cd>>;

std::ptrdiff_t signed_size(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

std::string mode_label(const PeriodicGrid& g, std::size_t site)
{
    const auto c = g.coords(site);
    return "mode " + std::to_string(site) + " (j = " + std::to_string(g.wave_number(c[0])) + ", " +
           std::to_string(g.wave_number(c[1])) + ", " + std::to_string(g.wave_number(c[2])) + ")";
}

}  // namespace

CovarianceSpectrum::CovarianceSpectrum(const PeriodicGrid& grid) : grid_(grid), modes_(grid.size(), Mat8::Zero()) {}

CovarianceSpectrum CovarianceSpectrum::identity(const PeriodicGrid& grid, double scale)
{
    CovarianceSpectrum q(grid);
    for (auto& m : q.modes_) m = scale * Mat8::Identity();
    return q;
}

CovarianceSpectrum CovarianceSpectrum::scalar(const PeriodicGrid& grid, const std::vector<double>& density)
{
    if (density.size() != grid.size()) throw ShapeError("CovarianceSpectrum::scalar: density size mismatch");
    CovarianceSpectrum q(grid);
    for (std::size_t s = 0; s < grid.size(); ++s) q.modes_[s] = density[s] * Mat8::Identity();
    return q;
}

CovarianceSpectrum CovarianceSpectrum::anisotropic(const PeriodicGrid& grid, double strength, std::uint64_t seed)
{
    if (!(strength >= 0.0)) throw InvalidParameter("anisotropic spectrum: strength must be non-negative");
    RandomStream rng(seed, 0);
    RMat8 a;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) a(i, j) = rng.normal();
    const Mat8 m = (RMat8::Identity() + strength * (a * a.transpose()) / 8.0).cast<cd>();
    CovarianceSpectrum q(grid);
    for (auto& mode : q.modes_) mode = m;
    return q;
}

CovarianceSpectrum CovarianceSpectrum::from_function(const PeriodicGrid& grid,
                                                     const std::function<Mat8(std::size_t)>& fn)
{
    CovarianceSpectrum q(grid);
    for (std::size_t s = 0; s < grid.size(); ++s) q.modes_[s] = fn(s);
    return q;
}

double CovarianceSpectrum::min_eigenvalue() const
{
    std::vector<double> mins(size());
    const auto n = signed_size(size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const Mat8& m = modes_[static_cast<std::size_t>(s)];
        const Mat8 h = 0.5 * (m + m.adjoint());
        mins[static_cast<std::size_t>(s)] = Eigen::SelfAdjointEigenSolver<Mat8>(h, Eigen::EigenvaluesOnly).eigenvalues()[0];
    }
    double out = std::numeric_limits<double>::infinity();
    for (double v : mins) out = std::min(out, v);
    return out;
}

double CovarianceSpectrum::sup_norm() const
{
    double out = 0.0;
    for (const Mat8& m : modes_) {
        const Mat8 h = 0.5 * (m + m.adjoint());
        const auto ev = Eigen::SelfAdjointEigenSolver<Mat8>(h, Eigen::EigenvaluesOnly).eigenvalues();
        out = std::max(out, ev.cwiseAbs().maxCoeff());
    }
    return out;
}

void CovarianceSpectrum::validate(double tol) const
{
    if (modes_.size() != grid_.size()) throw ShapeError("CovarianceSpectrum: mode count does not match the grid");
    for (std::size_t s = 0; s < size(); ++s) {
        const Mat8& m = modes_[s];
        if (!m.allFinite()) throw ValidationError("covariance spectrum: non-finite entry at " + mode_label(grid_, s));
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
            throw ValidationError("covariance spectrum: not Hermitian at " + mode_label(grid_, s));
        const Mat8& partner = modes_[grid_.negated(s)];
        if ((partner - m.conjugate()).cwiseAbs().maxCoeff() > tol * scale)
            throw ValidationError("covariance spectrum: q(-k) != conj q(k) at " + mode_label(grid_, s));
        const double lo = Eigen::SelfAdjointEigenSolver<Mat8>(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly)
                              .eigenvalues()[0];
        if (lo < -tol * scale)
            throw ValidationError("covariance spectrum: negative eigenvalue " + std::to_string(lo) + " at " +
                                  mode_label(grid_, s));
    }
}

double CovarianceSpectrum::max_abs_difference(const CovarianceSpectrum& other) const
{
    require_same_grid(grid_, other.grid_, "CovarianceSpectrum::max_abs_difference");
    double out = 0.0;
    for (std::size_t s = 0; s < size(); ++s) out = std::max(out, (modes_[s] - other.modes_[s]).cwiseAbs().maxCoeff());
    return out;
}

RealspaceKernel to_realspace(const CovarianceSpectrum& q)
{
    const auto& g = q.grid();
    const std::size_t n = g.size();
    Planes planes(64 * n);
    for (std::size_t s = 0; s < n; ++s)
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) planes[(8 * i + j) * n + s] = q[s](i, j);
    fft_inverse_planes(g, planes.data(), 64);
    RealspaceKernel out{g, std::vector<RMat8>(n), 0.0};
    for (std::size_t s = 0; s < n; ++s)
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                const cd v = planes[(8 * i + j) * n + s];
                out.values[s](i, j) = v.real();
                out.max_imag = std::max(out.max_imag, std::abs(v.imag()));
            }
    return out;
}

CovarianceSpectrum to_spectrum(const RealspaceKernel& q)
{
    const auto& g = q.grid;
    const std::size_t n = g.size();
    Planes planes(64 * n);
    for (std::size_t s = 0; s < n; ++s)
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) planes[(8 * i + j) * n + s] = q.values[s](i, j);
    fft_forward_planes(g, planes.data(), 64);
    CovarianceSpectrum out(g);
    for (std::size_t s = 0; s < n; ++s)
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) out[s](i, j) = planes[(8 * i + j) * n + s];
    return out;
}

Mat8 qhat_evolve_mode(const Mat8& q0, const Vec3& k, double mass, double t)
{
    static const LambdaSet lambdas = build_lambda_set();
    const Mat8 g = symbol_G(lambdas, k, mass, t);
    return g * q0 * g.adjoint();
}

Mat8 qhat_limit_mode(const Mat8& q0, const Vec3& k, double mass)
{
    static const LambdaSet lambdas = build_lambda_set();
    const Mat8 p = symbol_P(lambdas, k, mass);
    const double w2 = k.squaredNorm() + mass * mass;
    return 0.5 * q0 - (0.5 / w2) * (p * q0 * p);
}

namespace {

// q_t = c2 q0 + s2 (q0 P - P q0) - d2 P q0 P with the scalar weights supplied.
Mat8 expanded(const Mat8& q0, const Mat8& p, double c2, double s2, double d2)
{
    return c2 * q0 + s2 * (q0 * p - p * q0) - d2 * (p * q0 * p);
}

}  // namespace

Mat8 qhat_time_average_mode(const Mat8& q0, const Vec3& k, double mass, double t0, double t1)
{
    static const LambdaSet lambdas = build_lambda_set();
    const Mat8 p = symbol_P(lambdas, k, mass);
    const double w = omega(k, mass);
    const double span = t1 - t0;
    double avg_cos, avg_sin;
    if (span == 0.0) {
        avg_cos = std::cos(2.0 * w * t0);
        avg_sin = std::sin(2.0 * w * t0);
    } else {
        avg_cos = (std::sin(2.0 * w * t1) - std::sin(2.0 * w * t0)) / (2.0 * w * span);
        avg_sin = (std::cos(2.0 * w * t0) - std::cos(2.0 * w * t1)) / (2.0 * w * span);
    }
    return expanded(q0, p, 0.5 * (1.0 + avg_cos), avg_sin / (2.0 * w), (1.0 - avg_cos) / (2.0 * w * w));
}

namespace {

template <class Fn>
CovarianceSpectrum per_mode(const CovarianceSpectrum& q0, double mass, Fn fn)
{
    build_dirac_matrices(mass);
    q0.validate();
    const auto& g = q0.grid();
    CovarianceSpectrum out(g);
    const auto n = signed_size(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const auto site = static_cast<std::size_t>(s);
        out[site] = fn(q0[site], g.symbol_wavevector(site));
    }
    return out;
}

}  // namespace

CovarianceSpectrum qhat_evolve(const CovarianceSpectrum& q0, double mass, double t)
{
    if (t == 0.0) {
        build_dirac_matrices(mass);
        q0.validate();
        return q0;
    }
    return per_mode(q0, mass, [&](const Mat8& q, const Vec3& k) { return qhat_evolve_mode(q, k, mass, t); });
}

CovarianceSpectrum qhat_evolve_expanded(const CovarianceSpectrum& q0, double mass, double t)
{
    static const LambdaSet lambdas = build_lambda_set();
    return per_mode(q0, mass, [&](const Mat8& q, const Vec3& k) {
        const Mat8 p = symbol_P(lambdas, k, mass);
        const double w = omega(k, mass);
        const double c = std::cos(2.0 * w * t), s = std::sin(2.0 * w * t);
        return expanded(q, p, 0.5 * (1.0 + c), s / (2.0 * w), (1.0 - c) / (2.0 * w * w));
    });
}

CovarianceSpectrum qhat_limit(const CovarianceSpectrum& q0, double mass)
{
    return per_mode(q0, mass, [&](const Mat8& q, const Vec3& k) { return qhat_limit_mode(q, k, mass); });
}

CovarianceSpectrum qhat_time_average(const CovarianceSpectrum& q0, double mass, double t0, double t1)
{
    return per_mode(q0, mass,
                    [&](const Mat8& q, const Vec3& k) { return qhat_time_average_mode(q, k, mass, t0, t1); });
}

std::vector<double> lattice_green(const PeriodicGrid& grid, double mass)
{
    build_dirac_matrices(mass);
    Planes plane(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s)
        plane[s] = 1.0 / (grid.symbol_wavevector(s).squaredNorm() + mass * mass);
    fft_inverse_planes(grid, plane.data(), 1);
    std::vector<double> out(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) out[s] = plane[s].real() / grid.cell_volume();
    return out;
}

namespace {

// Real-space kernel of the spectral multiplier m(k) applied to q: used for the
// derivatives d_j q and d_j d_l q (gradient -> -ik).
RealspaceKernel multiply_realspace(const CovarianceSpectrum& q, const std::function<cd(const Vec3&)>& mult)
{
    CovarianceSpectrum scaled(q.grid());
    for (std::size_t s = 0; s < q.size(); ++s) scaled[s] = mult(q.grid().symbol_wavevector(s)) * q[s];
    return to_realspace(scaled);
}

}  // namespace

RealspaceLimit q_limit_realspace(const CovarianceSpectrum& q0, double mass)
{
    const auto& g = q0.grid();
    const std::size_t n = g.size();
    const LambdaSet l = build_lambda_set();
    const RMat8& l0 = l.lambda0;

    RealspaceLimit out;
    out.fourier = to_realspace(qhat_limit(q0, mass));

    // K(z): kernel of P Q0 P^*, with P = Lambda.grad + m Lambda_0 acting on x
    // and its transpose acting on y in Q0(x, y) = q0(x - y).
    const RealspaceKernel base = to_realspace(q0);
    std::array<RealspaceKernel, 3> d1;
    std::array<std::array<RealspaceKernel, 3>, 3> d2;
    for (int j = 0; j < 3; ++j) {
        d1[j] = multiply_realspace(q0, [j](const Vec3& k) { return cd{0.0, -k[j]}; });
        for (int a = 0; a < 3; ++a)
            d2[j][a] = multiply_realspace(q0, [j, a](const Vec3& k) { return cd{-k[j] * k[a], 0.0}; });
    }
    std::vector<RMat8> kern(n);
    for (std::size_t s = 0; s < n; ++s) {
        RMat8 acc = -mass * mass * (l0 * base.at(s) * l0);
        for (int j = 0; j < 3; ++j) {
            acc -= mass * (l.lambda[j] * d1[j].at(s) * l0 + l0 * d1[j].at(s) * l.lambda[j]);
            for (int a = 0; a < 3; ++a) acc -= l.lambda[j] * d2[j][a].at(s) * l.lambda[a];
        }
        kern[s] = acc;
    }

    const std::vector<double> green = lattice_green(g, mass);
    const double dv = g.cell_volume();
    std::vector<RMat8> conv(n, RMat8::Zero());
    const auto sn = signed_size(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t zi = 0; zi < sn; ++zi) {
        const auto z = static_cast<std::size_t>(zi);
        const auto cz = g.coords(z);
        RMat8 acc = RMat8::Zero();
        for (std::size_t y = 0; y < n; ++y) {
            const auto cy = g.coords(y);
            acc += green[g.index(cz[0] - cy[0], cz[1] - cy[1], cz[2] - cy[2])] * kern[y];
        }
        conv[z] = dv * acc;
    }

    auto assemble = [&](double sign) {
        RealspaceKernel k{g, std::vector<RMat8>(n), 0.0};
        double diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            k.values[s] = 0.5 * base.at(s) + sign * 0.5 * conv[s];
            diff = std::max(diff, (k.values[s] - out.fourier.at(s)).cwiseAbs().maxCoeff());
        }
        return std::pair{k, diff};
    };
    auto [plus, dplus] = assemble(1.0);
    auto [minus, dminus] = assemble(-1.0);
    if (dplus <= dminus) {
        out.convolution = std::move(plus);
        out.sign = 1.0;
        out.discrepancy = dplus;
        out.discrepancy_other_sign = dminus;
    } else {
        out.convolution = std::move(minus);
        out.sign = -1.0;
        out.discrepancy = dminus;
        out.discrepancy_other_sign = dplus;
    }
    return out;
}

double bilinear_form(const CovarianceSpectrum& q, const RealSpinorField& phi, const RealSpinorField& chi)
{
    require_same_grid(q.grid(), phi.grid(), "bilinear_form");
    require_same_grid(q.grid(), chi.grid(), "bilinear_form");
    const RealSpinorSpectrum a = fft_forward(phi);
    const RealSpinorSpectrum b = fft_forward(chi);
    const std::size_t n = q.size();
    std::vector<double> terms(n);
    const auto sn = signed_size(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < sn; ++si) {
        const auto s = static_cast<std::size_t>(si);
        Eigen::Matrix<cd, 8, 1> va, vb;
        for (int c = 0; c < 8; ++c) {
            va[c] = a(c, s);
            vb[c] = b(c, s);
        }
        terms[s] = va.dot(q[s] * vb).real();
    }
    double acc = 0.0;
    for (double t : terms) acc += t;
    const double dv = q.grid().cell_volume();
    return dv * dv * acc / static_cast<double>(n);
}

double quadratic_form(const CovarianceSpectrum& q, const RealSpinorField& phi) { return bilinear_form(q, phi, phi); }

double quadratic_form(const CovarianceSpectrum& q, const ComplexSpinorField& phi)
{
    const RealSpinorField r = realify(phi);
    return bilinear_form(q, r, r);
}

double mean_charge(const CovarianceSpectrum& q)
{
    double acc = 0.0;
    for (const Mat8& m : q.modes()) acc += m.trace().real();
    return acc / static_cast<double>(q.size());
}

double l1_norm(const RealspaceKernel& q)
{
    double acc = 0.0;
    for (const RMat8& m : q.values) acc += m.cwiseAbs().sum();
    return q.grid.cell_volume() * acc;
}

MixingReport validate_mixing_bound(const RealspaceKernel& q0, double e0, const std::function<double(double)>& phi)
{
    MixingReport rep;
    const auto& g = q0.grid;
    double peak = 0.0;
    for (const RMat8& m : q0.values) peak = std::max(peak, m.cwiseAbs().maxCoeff());
    const double zero_tol = 1e-12 * std::max(peak, 1e-300);
    rep.pointwise_ok = e0 > 0.0;
    if (!(e0 > 0.0)) rep.offending = "mean charge e0 must be positive";
    for (std::size_t s = 0; s < g.size() && rep.pointwise_ok; ++s) {
        const double r = g.radius(s);
        const double entry = q0.at(s).cwiseAbs().maxCoeff();
        const double f = phi(r);
        if (!(f >= 0.0) || !std::isfinite(f)) {
            rep.pointwise_ok = false;
            rep.offending = "mixing profile is negative or non-finite at r = " + std::to_string(r);
        } else if (f == 0.0) {
            if (entry > zero_tol) {
                const auto c = g.coords(s);
                rep.pointwise_ok = false;
                rep.offending = "correlation " + std::to_string(entry) + " at offset (" +
                                std::to_string(g.centered(c[0])) + ", " + std::to_string(g.centered(c[1])) + ", " +
                                std::to_string(g.centered(c[2])) + ") where the mixing profile vanishes";
            }
        } else {
            rep.measured_c = std::max(rep.measured_c, entry / (e0 * std::sqrt(f)));
        }
    }

    // One fixed step for both cut-offs, so a compact profile gives identical values.
    const double upper = 10.0 * g.extent();
    const int steps = 200000;
    const double dr = upper / steps;
    auto segment = [&](double from) {
        double acc = 0.0;
        for (int i = 0; i <= steps; ++i) {
            const double r = from + i * dr;
            const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
            acc += w * r * r * std::sqrt(std::max(phi(r), 0.0));
        }
        return acc * dr;
    };
    rep.integral_short = segment(0.0);
    rep.integral_long = rep.integral_short + segment(upper);
    rep.integral_ok = std::isfinite(rep.integral_long) &&
                      std::abs(rep.integral_long - rep.integral_short) <= 1e-6 * std::max(1.0, rep.integral_short);
    if (!rep.integral_ok && rep.offending.empty())
        rep.offending = "int r^2 phi^{1/2} dr keeps growing: " + std::to_string(rep.integral_short) + " at 10L, " +
                        std::to_string(rep.integral_long) + " at 20L";
    return rep;
}

void write_spectrum_csv(std::ostream& out, const CovarianceSpectrum& q)
{
    const auto& g = q.grid();
    out << "# diraclab-spectrum v1 n=" << g.n() << " L=" << std::setprecision(17) << g.extent() << '\n';
    out << "site,jx,jy,jz";
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) out << ",re" << i << j << ",im" << i << j;
    out << '\n';
    for (std::size_t s = 0; s < q.size(); ++s) {
        const auto c = g.coords(s);
        out << s << ',' << g.wave_number(c[0]) << ',' << g.wave_number(c[1]) << ',' << g.wave_number(c[2]);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) out << ',' << q[s](i, j).real() << ',' << q[s](i, j).imag();
        out << '\n';
    }
}

CovarianceSpectrum read_spectrum_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("# diraclab-spectrum v1", 0) != 0)
        throw ValidationError("spectrum CSV: missing header");
    int n = 0;
    double extent = 0.0;
    {
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) {
            if (tok.rfind("n=", 0) == 0) n = std::stoi(tok.substr(2));
            if (tok.rfind("L=", 0) == 0) extent = std::stod(tok.substr(2));
        }
    }
    CovarianceSpectrum q(PeriodicGrid(n, extent));
    std::getline(in, line);
    for (std::size_t s = 0; s < q.size(); ++s) {
        if (!std::getline(in, line)) throw ValidationError("spectrum CSV: truncated");
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        const std::size_t site = std::stoul(cell);
        if (site >= q.size()) throw ValidationError("spectrum CSV: site index out of range");
        for (int skip = 0; skip < 3; ++skip) std::getline(row, cell, ',');
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                std::string re, im;
                if (!std::getline(row, re, ',') || !std::getline(row, im, ','))
                    throw ValidationError("spectrum CSV: short row");
                q[site](i, j) = {std::stod(re), std::stod(im)};
            }
    }
    return q;
}

std::string spectrum_to_json(const CovarianceSpectrum& q)
{
    nlohmann::json j;
    j["n"] = q.grid().n();
    j["L"] = q.grid().extent();
    auto& modes = j["modes"] = nlohmann::json::array();
    for (std::size_t s = 0; s < q.size(); ++s) {
        std::vector<double> re(64), im(64);
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) {
                re[8 * a + b] = q[s](a, b).real();
                im[8 * a + b] = q[s](a, b).imag();
            }
        modes.push_back({{"site", s}, {"re", re}, {"im", im}});
    }
    return j.dump();
}

CovarianceSpectrum spectrum_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        CovarianceSpectrum q(PeriodicGrid(j.at("n").get<int>(), j.at("L").get<double>()));
        const auto& modes = j.at("modes");
        if (modes.size() != q.size()) throw ValidationError("spectrum JSON: mode count does not match the grid");
        for (const auto& m : modes) {
            const auto site = m.at("site").get<std::size_t>();
            const auto re = m.at("re").get<std::vector<double>>();
            const auto im = m.at("im").get<std::vector<double>>();
            if (site >= q.size() || re.size() != 64 || im.size() != 64)
                throw ValidationError("spectrum JSON: malformed mode entry");
            for (int a = 0; a < 8; ++a)
                for (int b = 0; b < 8; ++b) q[site](a, b) = {re[8 * a + b], im[8 * a + b]};
        }
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("spectrum JSON: ") + e.what());
    }
}

}  // namespace diraclab
