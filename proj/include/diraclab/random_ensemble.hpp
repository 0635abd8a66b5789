#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "diraclab/covariance.hpp"
#include "diraclab/field.hpp"
#include "diraclab/rng.hpp"

namespace diraclab {

/// A translation-invariant, zero-mean random real-form field.
class Sampler {
public:
    virtual ~Sampler() = default;
    virtual const PeriodicGrid& grid() const = 0;
    /// One sample; consumes numbers from `rng` only.
    virtual RealSpinorField draw(RandomStream& rng) const = 0;
    /// The spectral density q0^ the sampler realizes.
    virtual CovarianceSpectrum covariance() const = 0;
    /// JSON object describing the sampler.
    virtual std::string describe_json() const = 0;
};

/// Gaussian field with prescribed spectrum, drawn mode by mode:
/// r^(k) = sqrt(N) L(k) w, L L^* = q0^(k), w circular complex normal, with
/// r^(-k) = conj r^(k) and real draws on self-conjugate modes.
class GaussianSampler final : public Sampler {
public:
    explicit GaussianSampler(CovarianceSpectrum q0);

    const PeriodicGrid& grid() const override { return q0_.grid(); }
    RealSpinorField draw(RandomStream& rng) const override;
    CovarianceSpectrum covariance() const override { return q0_; }
    std::string describe_json() const override;

private:
    CovarianceSpectrum q0_;
    bool scalar_ = false;
    std::vector<double> root_scalar_;
    std::vector<Mat8> root_;
};

enum class KernelShape { gaussian, tent, indicator };
enum class NoiseKind { normal, rademacher };

KernelShape parse_kernel_shape(const std::string& name);
NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(KernelShape shape);
std::string to_string(NoiseKind noise);

/// r_c(x) = sum_{|y| <= R} a(y) xi_c(x + y) with i.i.d. unit-variance noise xi
/// per site and real component. a is normalized to sum a^2 = 1 and is
///   gaussian:  exp(-|y|^2 / (2 width^2)),  tent: max(0, 1 - |y| / width),  indicator: 1.
/// Dependence range is 2R, so the mixing coefficient vanishes beyond 2R.
struct MovingAverageSpec {
    KernelShape shape = KernelShape::gaussian;
    double width = 0.5;
    double radius = 2.0;
    NoiseKind noise = NoiseKind::rademacher;
};

class MovingAverageSampler final : public Sampler {
public:
    struct Tap {
        std::array<int, 3> offset;
        double weight;
    };

    MovingAverageSampler(const PeriodicGrid& grid, const MovingAverageSpec& spec);

    const PeriodicGrid& grid() const override { return grid_; }
    RealSpinorField draw(RandomStream& rng) const override;
    CovarianceSpectrum covariance() const override;
    std::string describe_json() const override;

    const MovingAverageSpec& spec() const { return spec_; }
    const std::vector<Tap>& taps() const { return taps_; }
    /// sum_y a(y) a(y + z), the scalar in q0(z) = (...) I.
    double autocorrelation(const std::array<int, 3>& z) const;
    /// Real-space q0 computed directly from the taps.
    RealspaceKernel realspace_covariance() const;

private:
    PeriodicGrid grid_;
    MovingAverageSpec spec_;
    std::vector<Tap> taps_;
};

/// Seeded ensemble of n samples. Samples are not stored: sample(i) regenerates
/// stream i of the seed and applies the transform chain, so two ensembles with
/// equal sampler, seed and transforms agree bit for bit, sample by sample.
class Ensemble {
public:
    using Transform = std::function<RealSpinorField(const RealSpinorField&)>;

    Ensemble(std::shared_ptr<const Sampler> sampler, std::size_t n, std::uint64_t seed);

    std::size_t size() const { return n_; }
    std::uint64_t seed() const { return seed_; }
    const Sampler& sampler() const { return *sampler_; }
    const PeriodicGrid& grid() const { return sampler_->grid(); }

    RealSpinorField sample(std::size_t i) const;
    /// A new ensemble whose samples are f(sample(i)); `label` goes into the metadata.
    Ensemble transformed(Transform f, std::string label) const;
    std::string metadata_json() const;

private:
    std::shared_ptr<const Sampler> sampler_;
    std::size_t n_;
    std::uint64_t seed_;
    std::vector<std::pair<std::string, Transform>> transforms_;
};

/// Evaluates fn on every sample (in parallel) and returns the values in
/// sample order. fn must return the same number of values for every sample.
std::vector<std::vector<double>> per_sample(const Ensemble& ens,
                                            const std::function<std::vector<double>(std::size_t, const RealSpinorField&)>& fn);

struct ScalarStats {
    double mean = 0.0;
    double std_error = 0.0;
};
/// Mean and standard error (sample spread / sqrt M) of each column.
std::vector<ScalarStats> column_stats(const std::vector<std::vector<double>>& rows);

struct MatrixEstimate {
    std::string probe;
    Mat8 estimate;
    /// Standard errors, real part for Re and imaginary part for Im.
    Mat8 std_error;
};

/// Translation-averaged covariance h(z) = E r(x + z) r(x)^T at lattice offsets
/// (zero mean is known, so no centering); averaged over all base points x.
std::vector<MatrixEstimate> empirical_covariance(const Ensemble& ens, const std::vector<std::array<int, 3>>& offsets);
/// Spectral estimate N^-1 r^(k) r^(k)^* at the given mode sites.
std::vector<MatrixEstimate> empirical_spectrum(const Ensemble& ens, const std::vector<std::size_t>& modes);

/// <psi_j, phi_p> for every sample j and probe p.
std::vector<std::vector<double>> pairings(const Ensemble& ens, const std::vector<RealSpinorField>& probes);

struct CharEstimate {
    cd value;
    double std_error = 0.0;
};
CharEstimate char_functional_from_pairings(const std::vector<double>& values);
CharEstimate empirical_char_functional(const Ensemble& ens, const RealSpinorField& phi);

/// Standardized cumulants of a scalar sample, with leave-one-out jackknife errors.
struct CumulantReport {
    double variance = 0.0;
    double skewness = 0.0;  ///< kappa_3 / kappa_2^{3/2}
    double skewness_err = 0.0;
    double excess_kurtosis = 0.0;  ///< kappa_4 / kappa_2^2
    double excess_kurtosis_err = 0.0;
};
CumulantReport cumulants(const std::vector<double>& values);
CumulantReport gaussianity_test(const Ensemble& ens, const RealSpinorField& phi);

/// Pointwise sample mean of the ensemble.
RealSpinorField empirical_mean(const Ensemble& ens);

struct EstimateRow {
    std::string probe;
    cd estimate;
    double std_error = 0.0;
};
/// CSV with columns probe,estimate_re,estimate_im,stderr.
void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows);

}  // namespace diraclab
