#pragma once

#include <random>

#include "diraclab/field.hpp"

namespace testing_support {

inline diraclab::ComplexSpinorField random_field(const diraclab::PeriodicGrid& g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    diraclab::ComplexSpinorField f(g);
    for (auto& v : f.values()) v = {n01(rng), n01(rng)};
    return f;
}

inline diraclab::Vec3 random_k(std::mt19937_64& rng, double scale = 3.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

}  // namespace testing_support

#include "diraclab/covariance.hpp"

namespace testing_support {

/// Random spectrum built as the autocorrelation of a random real 8x8 matrix
/// kernel B supported on |y|_inf <= 1: q(z) = sum_y B(y + z) B(y)^T. Returns
/// both the real-space kernel and the spectrum, which are then related by
/// construction rather than by the code under test.
struct RandomCovariance {
    diraclab::RealspaceKernel kernel;
    diraclab::CovarianceSpectrum spectrum;
};

inline RandomCovariance random_covariance(const diraclab::PeriodicGrid& g, std::uint64_t seed, double scale = 0.3)
{
    using namespace diraclab;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::vector<std::pair<std::array<int, 3>, RMat8>> b;
    for (int x = -1; x <= 1; ++x)
        for (int y = -1; y <= 1; ++y)
            for (int z = -1; z <= 1; ++z) {
                RMat8 m;
                for (int i = 0; i < 8; ++i)
                    for (int j = 0; j < 8; ++j) m(i, j) = (x == 0 && y == 0 && z == 0 ? 1.0 : scale) * n01(rng) / 4.0;
                b.push_back({{x, y, z}, m});
            }
    RealspaceKernel k{g, std::vector<RMat8>(g.size(), RMat8::Zero()), 0.0};
    for (const auto& [ya, ma] : b)
        for (const auto& [yb, mb] : b) {
            // B(ya) B(yb)^T contributes at z = ya - yb
            k.values[g.index(ya[0] - yb[0], ya[1] - yb[1], ya[2] - yb[2])] += ma * mb.transpose();
        }
    // direct DFT oracle for the spectrum
    CovarianceSpectrum q(g);
    for (std::size_t s = 0; s < g.size(); ++s) {
        const Vec3 kv = g.wavevector(s);
        Mat8 acc = Mat8::Zero();
        for (int dx = -2; dx <= 2; ++dx)
            for (int dy = -2; dy <= 2; ++dy)
                for (int dz = -2; dz <= 2; ++dz) {
                    const std::size_t z = g.index(dx, dy, dz);
                    const double h = g.spacing();
                    const double phase = kv.dot(Vec3(dx * h, dy * h, dz * h));
                    acc += std::exp(cd(0.0, phase)) * k.values[z].cast<cd>();
                }
        q[s] = acc;
    }
    return {k, q};
}

}  // namespace testing_support
