#include "diraclab/random_ensemble.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "diraclab/errors.hpp"
#include "diraclab/fft.hpp"
#include "json.hpp"

namespace diraclab {

namespace {

nlohmann::json grid_json(const PeriodicGrid& g) { return {{"n", g.n()}, {"L", g.extent()}}; }

bool is_scalar_spectrum(const CovarianceSpectrum& q)
{
    for (const Mat8& m : q.modes()) {
        const cd d = m(0, 0);
        if ((m - d * Mat8::Identity()).cwiseAbs().maxCoeff() != 0.0 || d.imag() != 0.0) return false;
    }
    return true;
}

}  // namespace

GaussianSampler::GaussianSampler(CovarianceSpectrum q0) : q0_(std::move(q0))
{
    q0_.validate();
    const auto& g = q0_.grid();
    scalar_ = is_scalar_spectrum(q0_);
    if (scalar_) {
        root_scalar_.resize(g.size());
        for (std::size_t s = 0; s < g.size(); ++s) root_scalar_[s] = std::sqrt(std::max(q0_[s](0, 0).real(), 0.0));
        return;
    }
    root_.resize(g.size());
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < n; ++si) {
        const auto s = static_cast<std::size_t>(si);
        const Mat8& q = q0_[s];
        if (g.self_conjugate(s)) {
            const RMat8 qr = 0.5 * (q.real() + q.real().transpose());
            Eigen::SelfAdjointEigenSolver<RMat8> es(qr);
            const auto lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            root_[s] = (es.eigenvectors() * lam.asDiagonal()).cast<cd>();
        } else {
            const Mat8 qh = 0.5 * (q + q.adjoint());
            Eigen::SelfAdjointEigenSolver<Mat8> es(qh);
            const Eigen::Matrix<double, 8, 1> lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            root_[s] = es.eigenvectors() * lam.cast<cd>().asDiagonal();
        }
    }
}

RealSpinorField GaussianSampler::draw(RandomStream& rng) const
{
    const auto& g = grid();
    const std::size_t n = g.size();
    const double amp = std::sqrt(static_cast<double>(n));
    const double half = std::sqrt(0.5);
    SpinorSpectrum packed(g);  // psi^ = r^_{0..3} + i r^_{4..7}
    Eigen::Matrix<cd, 8, 1> w, r;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t partner = g.negated(s);
        if (partner < s) continue;
        const bool self = partner == s;
        for (int c = 0; c < 8; ++c) {
            if (self) w[c] = rng.normal();
            else {
                const double re = rng.normal();
                const double im = rng.normal();
                w[c] = {half * re, half * im};
            }
        }
        if (scalar_) r = (amp * root_scalar_[s]) * w;
        else r = amp * (root_[s] * w);
        for (int c = 0; c < 4; ++c) {
            packed(c, s) = r[c] + cd{0.0, 1.0} * r[c + 4];
            if (!self) packed(c, partner) = std::conj(r[c]) + cd{0.0, 1.0} * std::conj(r[c + 4]);
        }
    }
    return realify(fft_inverse(packed));
}

std::string GaussianSampler::describe_json() const
{
    return nlohmann::json{{"kind", "gaussian"},
                          {"grid", grid_json(grid())},
                          {"mean_charge", mean_charge(q0_)},
                          {"scalar_spectrum", scalar_}}
        .dump();
}

KernelShape parse_kernel_shape(const std::string& name)
{
    if (name == "gaussian") return KernelShape::gaussian;
    if (name == "tent") return KernelShape::tent;
    if (name == "indicator") return KernelShape::indicator;
    throw InvalidParameter("unknown kernel shape '" + name + "' (gaussian | tent | indicator)");
}

NoiseKind parse_noise_kind(const std::string& name)
{
    if (name == "normal") return NoiseKind::normal;
    if (name == "rademacher") return NoiseKind::rademacher;
    throw InvalidParameter("unknown noise '" + name + "' (normal | rademacher)");
}

std::string to_string(KernelShape shape)
{
    switch (shape) {
    case KernelShape::gaussian: return "gaussian";
    case KernelShape::tent: return "tent";
    case KernelShape::indicator: return "indicator";
    }
    return "?";
}

std::string to_string(NoiseKind noise) { return noise == NoiseKind::normal ? "normal" : "rademacher"; }

MovingAverageSampler::MovingAverageSampler(const PeriodicGrid& grid, const MovingAverageSpec& spec)
    : grid_(grid), spec_(spec)
{
    if (!(spec.radius >= 0.0) || !std::isfinite(spec.radius))
        throw InvalidParameter("moving average: radius must be non-negative");
    if (!(spec.radius < grid.extent() / 4.0))
        throw InvalidParameter("moving average: kernel support radius " + std::to_string(spec.radius) +
                               " must be below L/4 = " + std::to_string(grid.extent() / 4.0));
    if (spec.shape != KernelShape::indicator && !(spec.width > 0.0))
        throw InvalidParameter("moving average: width must be positive");
    const double h = grid.spacing();
    const int reach = static_cast<int>(std::floor(spec.radius / h));
    double norm2 = 0.0;
    for (int x = -reach; x <= reach; ++x)
        for (int y = -reach; y <= reach; ++y)
            for (int z = -reach; z <= reach; ++z) {
                const double r = h * std::sqrt(double(x * x + y * y + z * z));
                if (r > spec.radius + 1e-12) continue;
                double a = 1.0;
                if (spec.shape == KernelShape::gaussian) a = std::exp(-r * r / (2.0 * spec.width * spec.width));
                else if (spec.shape == KernelShape::tent) a = std::max(0.0, 1.0 - r / spec.width);
                if (a == 0.0) continue;
                taps_.push_back({{x, y, z}, a});
                norm2 += a * a;
            }
    for (auto& t : taps_) t.weight /= std::sqrt(norm2);
}

RealSpinorField MovingAverageSampler::draw(RandomStream& rng) const
{
    const auto& g = grid_;
    const std::size_t n = g.size();
    const int side = g.n();
    std::vector<double> noise(n);
    std::vector<int> zmap(side);
    RealSpinorField out(g);
    for (int c = 0; c < 8; ++c) {
        if (spec_.noise == NoiseKind::rademacher) {
            // 64 signs per engine call, least significant bit first
            for (std::size_t i = 0; i < n; i += 64) {
                std::uint64_t bits = rng.bits();
                for (std::size_t b = i; b < std::min(n, i + 64); ++b, bits >>= 1) noise[b] = (bits & 1) ? 1.0 : -1.0;
            }
        } else {
            for (auto& v : noise) v = rng.normal();
        }
        double* dst = out.component(c).data();
        for (const Tap& tap : taps_) {
            const double w = tap.weight;
            for (int iz = 0; iz < side; ++iz) zmap[iz] = g.wrap(iz + tap.offset[2]);
            for (int ix = 0; ix < side; ++ix) {
                const int sx = g.wrap(ix + tap.offset[0]);
                for (int iy = 0; iy < side; ++iy) {
                    const int sy = g.wrap(iy + tap.offset[1]);
                    double* row = dst + (static_cast<std::size_t>(ix) * side + iy) * side;
                    const double* src = noise.data() + (static_cast<std::size_t>(sx) * side + sy) * side;
                    for (int iz = 0; iz < side; ++iz) row[iz] += w * src[zmap[iz]];
                }
            }
        }
    }
    return out;
}

double MovingAverageSampler::autocorrelation(const std::array<int, 3>& z) const
{
    double acc = 0.0;
    for (const Tap& a : taps_)
        for (const Tap& b : taps_)
            if (grid_.index(b.offset[0] - a.offset[0], b.offset[1] - a.offset[1], b.offset[2] - a.offset[2]) ==
                grid_.index(z[0], z[1], z[2]))
                acc += a.weight * b.weight;
    return acc;
}

RealspaceKernel MovingAverageSampler::realspace_covariance() const
{
    RealspaceKernel k{grid_, std::vector<RMat8>(grid_.size(), RMat8::Zero()), 0.0};
    for (const Tap& a : taps_)
        for (const Tap& b : taps_)
            k.values[grid_.index(b.offset[0] - a.offset[0], b.offset[1] - a.offset[1], b.offset[2] - a.offset[2])] +=
                a.weight * b.weight * RMat8::Identity();
    return k;
}

CovarianceSpectrum MovingAverageSampler::covariance() const
{
    std::vector<double> density(grid_.size());
    const double h = grid_.spacing();
    for (std::size_t s = 0; s < grid_.size(); ++s) {
        const Vec3 k = grid_.wavevector(s);
        cd a_hat{};
        for (const Tap& t : taps_)
            a_hat += t.weight * std::exp(cd(0.0, h * (k[0] * t.offset[0] + k[1] * t.offset[1] + k[2] * t.offset[2])));
        density[s] = std::norm(a_hat);
    }
    return CovarianceSpectrum::scalar(grid_, density);
}

std::string MovingAverageSampler::describe_json() const
{
    return nlohmann::json{{"kind", "moving-average"},
                          {"grid", grid_json(grid_)},
                          {"kernel", to_string(spec_.shape)},
                          {"width", spec_.width},
                          {"radius", spec_.radius},
                          {"noise", to_string(spec_.noise)},
                          {"taps", taps_.size()}}
        .dump();
}

Ensemble::Ensemble(std::shared_ptr<const Sampler> sampler, std::size_t n, std::uint64_t seed)
    : sampler_(std::move(sampler)), n_(n), seed_(seed)
{
    if (!sampler_) throw InvalidParameter("Ensemble: null sampler");
}

RealSpinorField Ensemble::sample(std::size_t i) const
{
    if (i >= n_) throw InvalidParameter("Ensemble::sample: index out of range");
    RandomStream rng(seed_, i);
    RealSpinorField r = sampler_->draw(rng);
    for (const auto& [label, f] : transforms_) r = f(r);
    return r;
}

Ensemble Ensemble::transformed(Transform f, std::string label) const
{
    Ensemble out = *this;
    out.transforms_.emplace_back(std::move(label), std::move(f));
    return out;
}

std::string Ensemble::metadata_json() const
{
    nlohmann::json j;
    j["sampler"] = nlohmann::json::parse(sampler_->describe_json());
    j["seed"] = seed_;
    j["samples"] = n_;
    j["grid"] = grid_json(grid());
    j["rng"] = std::string(rng_version);
    auto& tr = j["transforms"] = nlohmann::json::array();
    for (const auto& [label, f] : transforms_) tr.push_back(label);
    return j.dump(2);
}

std::vector<std::vector<double>> per_sample(
    const Ensemble& ens, const std::function<std::vector<double>(std::size_t, const RealSpinorField&)>& fn)
{
    std::vector<std::vector<double>> rows(ens.size());
    const auto n = static_cast<std::ptrdiff_t>(ens.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        rows[idx] = fn(idx, ens.sample(idx));
    }
    for (const auto& r : rows)
        if (r.size() != rows.front().size()) throw ShapeError("per_sample: ragged statistics");
    return rows;
}

std::vector<ScalarStats> column_stats(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty()) throw InvalidParameter("column_stats: empty ensemble");
    const std::size_t m = rows.size();
    const std::size_t p = rows.front().size();
    std::vector<ScalarStats> out(p);
    for (std::size_t c = 0; c < p; ++c) {
        double mean = 0.0;
        for (const auto& r : rows) mean += r[c];
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (const auto& r : rows) var += (r[c] - mean) * (r[c] - mean);
        var = m > 1 ? var / static_cast<double>(m - 1) : 0.0;
        out[c] = {mean, std::sqrt(var / static_cast<double>(m))};
    }
    return out;
}

namespace {

std::vector<MatrixEstimate> assemble(const std::vector<ScalarStats>& stats, const std::vector<std::string>& labels)
{
    std::vector<MatrixEstimate> out;
    for (std::size_t p = 0; p < labels.size(); ++p) {
        MatrixEstimate e{labels[p], Mat8::Zero(), Mat8::Zero()};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                const auto& re = stats[p * 128 + 2 * (8 * i + j)];
                const auto& im = stats[p * 128 + 2 * (8 * i + j) + 1];
                e.estimate(i, j) = {re.mean, im.mean};
                e.std_error(i, j) = {re.std_error, im.std_error};
            }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

std::vector<MatrixEstimate> empirical_covariance(const Ensemble& ens, const std::vector<std::array<int, 3>>& offsets)
{
    if (ens.size() < 2) throw InvalidParameter("empirical_covariance: need at least two samples");
    const auto& g = ens.grid();
    auto rows = per_sample(ens, [&](std::size_t, const RealSpinorField& r) {
        std::vector<double> v;
        v.reserve(offsets.size() * 128);
        for (const auto& z : offsets) {
            const RealSpinorField moved = shifted(r, -z[0], -z[1], -z[2]);  // moved(x) = r(x + z)
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) {
                    double acc = 0.0;
                    const auto a = moved.component(i);
                    const auto b = r.component(j);
                    for (std::size_t s = 0; s < g.size(); ++s) acc += a[s] * b[s];
                    v.push_back(acc / static_cast<double>(g.size()));
                    v.push_back(0.0);
                }
        }
        return v;
    });
    std::vector<std::string> labels;
    for (const auto& z : offsets)
        labels.push_back("z=(" + std::to_string(z[0]) + "," + std::to_string(z[1]) + "," + std::to_string(z[2]) + ")");
    return assemble(column_stats(rows), labels);
}

std::vector<MatrixEstimate> empirical_spectrum(const Ensemble& ens, const std::vector<std::size_t>& modes)
{
    if (ens.size() < 2) throw InvalidParameter("empirical_spectrum: need at least two samples");
    const auto& g = ens.grid();
    auto rows = per_sample(ens, [&](std::size_t, const RealSpinorField& r) {
        const RealSpinorSpectrum hat = fft_forward(r);
        std::vector<double> v;
        v.reserve(modes.size() * 128);
        for (std::size_t k : modes)
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) {
                    const cd e = hat(i, k) * std::conj(hat(j, k)) / static_cast<double>(g.size());
                    v.push_back(e.real());
                    v.push_back(e.imag());
                }
        return v;
    });
    std::vector<std::string> labels;
    for (std::size_t k : modes) {
        const auto c = g.coords(k);
        labels.push_back("k=(" + std::to_string(g.wave_number(c[0])) + "," + std::to_string(g.wave_number(c[1])) +
                         "," + std::to_string(g.wave_number(c[2])) + ")");
    }
    return assemble(column_stats(rows), labels);
}

std::vector<std::vector<double>> pairings(const Ensemble& ens, const std::vector<RealSpinorField>& probes)
{
    for (const auto& p : probes) require_same_grid(ens.grid(), p.grid(), "pairings");
    return per_sample(ens, [&](std::size_t, const RealSpinorField& r) {
        std::vector<double> v;
        for (const auto& p : probes) v.push_back(pairing(r, p));
        return v;
    });
}

CharEstimate char_functional_from_pairings(const std::vector<double>& values)
{
    if (values.empty()) throw InvalidParameter("char functional: empty sample");
    const double m = static_cast<double>(values.size());
    double re = 0.0, im = 0.0;
    for (double p : values) {
        re += std::cos(p);
        im += std::sin(p);
    }
    re /= m;
    im /= m;
    double var = 0.0;
    for (double p : values) var += std::norm(cd(std::cos(p) - re, std::sin(p) - im));
    var = values.size() > 1 ? var / (m - 1.0) : 0.0;
    return {{re, im}, std::sqrt(var / m)};
}

CharEstimate empirical_char_functional(const Ensemble& ens, const RealSpinorField& phi)
{
    const auto rows = pairings(ens, {phi});
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[0]);
    return char_functional_from_pairings(v);
}

namespace {

struct Moments {
    double skew, kurt, var;
};

Moments standardized(double n, double s1, double s2, double s3, double s4)
{
    const double mu = s1 / n;
    const double m2 = s2 / n - mu * mu;
    const double m3 = s3 / n - 3.0 * mu * s2 / n + 2.0 * mu * mu * mu;
    const double m4 = s4 / n - 4.0 * mu * s3 / n + 6.0 * mu * mu * s2 / n - 3.0 * mu * mu * mu * mu;
    if (!(m2 > 0.0)) return {0.0, 0.0, 0.0};
    return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0, m2};
}

}  // namespace

CumulantReport cumulants(const std::vector<double>& values)
{
    if (values.size() < 3) throw InvalidParameter("cumulants: need at least three values");
    // Shift by the mean first so the power sums stay well conditioned.
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (double v : values) {
        const double x = v - mean;
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    const double n = static_cast<double>(values.size());
    const Moments full = standardized(n, s1, s2, s3, s4);
    std::vector<double> skews(values.size()), kurts(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = values[i] - mean;
        const Moments loo = standardized(n - 1.0, s1 - x, s2 - x * x, s3 - x * x * x, s4 - x * x * x * x);
        skews[i] = loo.skew;
        kurts[i] = loo.kurt;
    }
    auto jack = [n](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= n;
        double acc = 0.0;
        for (double x : v) acc += (x - m) * (x - m);
        return std::sqrt((n - 1.0) / n * acc);
    };
    return {full.var, full.skew, jack(skews), full.kurt, jack(kurts)};
}

CumulantReport gaussianity_test(const Ensemble& ens, const RealSpinorField& phi)
{
    const auto rows = pairings(ens, {phi});
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[0]);
    return cumulants(v);
}

RealSpinorField empirical_mean(const Ensemble& ens)
{
    if (ens.size() == 0) throw InvalidParameter("empirical_mean: empty ensemble");
    RealSpinorField acc(ens.grid());
    for (std::size_t i = 0; i < ens.size(); ++i) acc += ens.sample(i);
    acc *= 1.0 / static_cast<double>(ens.size());
    return acc;
}

void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows)
{
    out << "probe,estimate_re,estimate_im,stderr\n" << std::setprecision(17);
    for (const auto& r : rows)
        out << r.probe << ',' << r.estimate.real() << ',' << r.estimate.imag() << ',' << r.std_error << '\n';
}

}  // namespace diraclab
