#include "diraclab/norms.hpp"

#include <cmath>

#include "diraclab/fft.hpp"

namespace diraclab {

double japanese_bracket(const Vec3& x) { return std::sqrt(1.0 + x.squaredNorm()); }

double weighted_norm(const ComplexSpinorField& psi, const WeightedNormSpec& spec)
{
    const auto& grid = psi.grid();
    const ComplexSpinorField* smoothed = &psi;
    ComplexSpinorField work;
    if (spec.s != 0.0) {
        SpinorSpectrum hat = fft_forward(psi);
        for (std::size_t site = 0; site < grid.size(); ++site) {
            const double mult = std::pow(1.0 + grid.wavevector(site).squaredNorm(), 0.5 * spec.s);
            for (int c = 0; c < 4; ++c) hat(c, site) *= mult;
        }
        work = fft_inverse(hat);
        smoothed = &work;
    }
    double acc = 0.0;
    for (std::size_t site = 0; site < grid.size(); ++site) {
        const double w = std::pow(japanese_bracket(grid.position(site)), 2.0 * spec.sigma);
        double local = 0.0;
        for (int c = 0; c < 4; ++c) local += std::norm((*smoothed)(c, site));
        acc += w * local;
    }
    return std::sqrt(grid.cell_volume() * acc);
}

double weighted_norm(const RealSpinorField& r, const WeightedNormSpec& spec)
{
    return weighted_norm(complexify(r), spec);
}

}  // namespace diraclab
