#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "diraclab/fft.hpp"
#include "diraclab/free_dynamics.hpp"
#include "helpers.hpp"

using namespace diraclab;

TEST_CASE("free evolution at t = 0 is the identity")
{
    const PeriodicGrid g(8, 8.0);
    const auto psi = testing_support::random_field(g, 1);
    CHECK(evolve_free(psi, 1.0, 0.0) == psi);
    CHECK(evolve_free_real(realify(psi), 1.0, 0.0) == realify(psi));
    CHECK_THROWS_AS(evolve_free(psi, 0.0, 1.0), InvalidParameter);
}

TEST_CASE("single Fourier mode eigenvector picks up exp(i lambda t)")
{
    const double m = 1.0, t = 2.7;
    const PeriodicGrid g(8, 8.0);
    const std::size_t k0 = g.index(1, -2, 3);
    const Vec3 k = g.wavevector(k0);
    const DiracMatrixSet d = build_dirac_matrices(m);
    const Mat4 a = k[0] * d.alpha[0] + k[1] * d.alpha[1] + k[2] * d.alpha[2] - m * d.beta;
    Eigen::SelfAdjointEigenSolver<Mat4> es(a);
    for (int j = 0; j < 4; ++j) {
        const double lambda = es.eigenvalues()[j];
        const Spinor4 v = es.eigenvectors().col(j);
        ComplexSpinorField mode(g);
        for (std::size_t s = 0; s < g.size(); ++s) {
            const cd wave = std::exp(cd(0.0, -k.dot(g.position(s))));
            for (int c = 0; c < 4; ++c) mode(c, s) = v[c] * wave;
        }
        const auto out = evolve_free(mode, m, t);
        CHECK(max_abs_difference(out, std::exp(cd(0.0, lambda * t)) * mode) < 1e-12);
    }
}

TEST_CASE("unitarity, group law and time reversal on random fields")
{
    const double m = 1.0;
    const PeriodicGrid g(4, 5.0);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ut(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto psi = testing_support::random_field(g, 1000 + trial);
        const double t = ut(rng), s = ut(rng);
        const auto ut_psi = evolve_free(psi, m, t);
        CHECK(std::abs(norm(ut_psi) / norm(psi) - 1.0) < 1e-12);
        CHECK(max_abs_difference(evolve_free(ut_psi, m, s), evolve_free(psi, m, t + s)) < 1e-10);
        CHECK(max_abs_difference(dual_evolve_free(ut_psi, m, t), psi) < 1e-10);
        const auto phi = testing_support::random_field(g, 5000 + trial);
        // (psi, U0'(t) phi) = (U0(t) psi, phi)
        CHECK(std::abs(inner(psi, dual_evolve_free(phi, m, t)) - inner(ut_psi, phi)) < 1e-10 * norm(psi) * norm(phi));
        CHECK(std::abs(norm(dual_evolve_free(phi, m, t)) - norm(phi)) < 1e-10 * norm(phi));
    }
    const PeriodicGrid big(16, 16.0);
    const auto psi = testing_support::random_field(big, 3);
    CHECK(std::abs(norm(evolve_free(psi, m, 7.3)) / norm(psi) - 1.0) < 1e-12);
}

TEST_CASE("real-form evolution matches the complex evolution")
{
    const double m = 1.2;
    const PeriodicGrid g(8, 7.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto psi = testing_support::random_field(g, 40 + trial);
        const double t = 0.9 * trial - 3.0;
        CHECK(max_abs_difference(evolve_free_real(realify(psi), m, t), realify(evolve_free(psi, m, t))) < 1e-10);
    }
}

TEST_CASE("propagator matrices: unitary per mode, cached table matches")
{
    const double m = 1.0, t = 3.3;
    const PeriodicGrid g(4, 4.0);
    const FreePropagator u(g, m, t);
    const LambdaSet l = build_lambda_set();
    for (std::size_t s = 0; s < g.size(); ++s) {
        const Mat4 c = u.matrix_complex(s);
        CHECK((c * c.adjoint() - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        const Mat8 r = u.matrix_real(s);
        CHECK((r * r.adjoint() - Mat8::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(u.real_table()[s] == r);
        CHECK((r - symbol_G(l, g.symbol_wavevector(s), m, t)).cwiseAbs().maxCoeff() < 1e-13);
    }
    // zero mode: rotation by cos(mt) - Lambda_0 sin(mt)
    const Mat8 want = (std::cos(m * t) * RMat8::Identity() - std::sin(m * t) * l.lambda0).cast<cd>();
    CHECK((u.matrix_real(0) - want).cwiseAbs().maxCoeff() < 1e-14);

    const auto psi = testing_support::random_field(g, 2);
    CHECK(max_abs_difference(u.apply(psi), evolve_free(psi, m, t)) < 1e-13);
    CHECK(max_abs_difference(u.apply_real(realify(psi)), realify(evolve_free(psi, m, t))) < 1e-12);
    CHECK_THROWS_AS(u.apply(testing_support::random_field(PeriodicGrid(4, 5.0), 1)), ShapeError);
}

TEST_CASE("finite propagation speed up to spectral leakage")
{
    const double m = 1.0, a = 4.0, t = 6.0;
    const PeriodicGrid g(32, 32.0);
    ComplexSpinorField psi(g);
    for (std::size_t s = 0; s < g.size(); ++s) {
        const double r = g.radius(s);
        if (r < a) {
            const double bump = std::exp(1.0 - 1.0 / (1.0 - (r / a) * (r / a)));
            psi(0, s) = bump;
            psi(3, s) = cd(0.0, 0.5 * bump);
        }
    }
    const auto out = evolve_free(psi, m, t);
    double outside = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s)
        if (g.radius(s) > a + t)
            for (int c = 0; c < 4; ++c) outside += std::norm(out(c, s));
    outside *= g.cell_volume();
    CHECK(outside / charge(out) < 1e-3);
}
