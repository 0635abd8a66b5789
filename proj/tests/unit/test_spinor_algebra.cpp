#include <random>

#include "doctest.h"
#include "diraclab/errors.hpp"
#include "diraclab/fft.hpp"
#include "diraclab/spinor_algebra.hpp"
#include "helpers.hpp"

using namespace diraclab;

namespace {
const cd I{0.0, 1.0};
}

TEST_CASE("dirac matrices have the block form and satisfy the Clifford relations exactly")
{
    const DiracMatrixSet d = build_dirac_matrices(1.0);
    Mat4 beta = Mat4::Zero();
    beta.diagonal() << 1.0, 1.0, -1.0, -1.0;
    CHECK(d.beta == beta);

    Mat2 s1;
    s1 << 0.0, 1.0, 1.0, 0.0;
    CHECK(pauli(1) == s1);
    CHECK(d.alpha[0].topRightCorner<2, 2>() == s1);
    CHECK(d.alpha[0].bottomLeftCorner<2, 2>() == s1);

    for (int k = 0; k < 4; ++k) {
        CHECK(d[k].adjoint() == d[k]);
        for (int l = 0; l < 4; ++l) {
            const Mat4 anti = d[k] * d[l] + d[l] * d[k];
            const Mat4 want = (k == l ? 2.0 : 0.0) * Mat4::Identity();
            CHECK(anti == want);
        }
    }
    CHECK((d.alpha[0] * d.alpha[1] + d.alpha[1] * d.alpha[0]).isZero(0.0));
}

TEST_CASE("non-positive mass is rejected")
{
    CHECK_THROWS_AS(build_dirac_matrices(0.0), InvalidParameter);
    CHECK_THROWS_AS(build_dirac_matrices(-1.0), InvalidParameter);
    CHECK_THROWS_AS(pauli(4), InvalidParameter);
}

TEST_CASE("lambda matrices: symmetric spatial part, antisymmetric mass part")
{
    const LambdaSet l = build_lambda_set();
    CHECK((l.lambda0.transpose() + l.lambda0).isZero(0.0));
    for (int k = 0; k < 3; ++k) CHECK((l.lambda[k].transpose() - l.lambda[k]).isZero(0.0));
    // Lambda_k is the real embedding of alpha_k; Lambda_0 embeds i beta.
    const DiracMatrixSet d = build_dirac_matrices(1.0);
    for (int k = 0; k < 3; ++k) CHECK(l.lambda[k] == realify_operator(d.alpha[k]));
    CHECK(l.lambda0 == realify_operator(I * d.beta));
}

TEST_CASE("symbol P: anti-Hermitian, squares to -omega^2, reduces to m Lambda_0 at k = 0")
{
    const double m = 1.3;
    const LambdaSet l = build_lambda_set();
    CHECK(symbol_P(l, Vec3::Zero(), m) == (m * l.lambda0).cast<cd>());
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 k = testing_support::random_k(rng);
        const Mat8 p = symbol_P(l, k, m);
        CHECK((p.adjoint() + p).cwiseAbs().maxCoeff() <= 1e-12);
        const double w2 = k.squaredNorm() + m * m;
        Mat8 sq = Mat8::Zero();  // plain triple loop, independent of Eigen's product kernels
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                for (int q = 0; q < 8; ++q) sq(i, j) += p(i, q) * p(q, j);
        CHECK((sq + w2 * Mat8::Identity()).cwiseAbs().maxCoeff() <= 1e-12 * w2);
        // P^T(k) = -P(-k): the transpose flips the sign of the mass term only.
        CHECK((p.transpose() + symbol_P(l, -k, m)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("G_t is unitary and agrees with the complex propagator symbol")
{
    const double m = 1.0;
    const LambdaSet l = build_lambda_set();
    const DiracMatrixSet d = build_dirac_matrices(m);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 k = testing_support::random_k(rng);
        const double t = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
        const Mat8 g = symbol_G(l, k, m, t);
        CHECK((g * g.adjoint() - Mat8::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
        const Mat4 u = free_propagator_symbol(d, k, t);
        CHECK((u * u.adjoint() - Mat4::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
        const Mat4 h = free_hamiltonian_symbol(d, k);
        CHECK((h * h - (k.squaredNorm() + m * m) * Mat4::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("k = 0 real propagator is cos(mt) - Lambda_0 sin(mt)")
{
    const double m = 0.8, t = 2.1;
    const LambdaSet l = build_lambda_set();
    const Mat8 want = (std::cos(m * t) * RMat8::Identity() - std::sin(m * t) * l.lambda0).cast<cd>();
    CHECK((symbol_G(l, Vec3::Zero(), m, t) - want).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("named symbols evaluate their formulas")
{
    const auto p = make_symbol_P(1.0);
    const auto g = make_symbol_G(1.0, 0.0);
    const auto green = make_symbol_green(2.0);
    const Vec3 k{0.3, -0.2, 0.5};
    CHECK(p.name == "P");
    CHECK((g(k) - Mat8::Identity()).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(std::abs(green(k)(3, 3).real() - 1.0 / (k.squaredNorm() + 4.0)) < 1e-15);
    CHECK_THROWS_AS(make_symbol_P(0.0), InvalidParameter);
}

TEST_CASE("realify and complexify on spinors")
{
    Spinor4 psi = Spinor4::Zero();
    psi[0] = I;
    Real8 want = Real8::Zero();
    want[4] = 1.0;
    CHECK(realify(psi) == want);
    CHECK(complexify(realify(psi)) == psi);
}

TEST_CASE("realify and complexify on fields; pairing equals Re of the inner product")
{
    const PeriodicGrid g(8, 6.0);
    const auto psi = testing_support::random_field(g, 1);
    const auto phi = testing_support::random_field(g, 2);
    CHECK(complexify(realify(psi)) == psi);

    ComplexSpinorField single(g);
    single(0, 17) = I;
    const RealSpinorField r = realify(single);
    for (int c = 0; c < 8; ++c) CHECK(r(c, 17) == (c == 4 ? 1.0 : 0.0));

    // direct summation oracle
    double direct = 0.0, direct_charge = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s)
        for (int c = 0; c < 4; ++c) {
            direct += psi(c, s).real() * phi(c, s).real() + psi(c, s).imag() * phi(c, s).imag();
            direct_charge += std::norm(psi(c, s));
        }
    direct *= g.cell_volume();
    direct_charge *= g.cell_volume();
    CHECK(pairing(realify(psi), realify(phi)) == doctest::Approx(direct).epsilon(1e-13));
    CHECK(pairing(psi, phi) == doctest::Approx(direct).epsilon(1e-13));
    CHECK(pairing(psi, psi) == doctest::Approx(direct_charge).epsilon(1e-13));
    CHECK(charge(psi) == doctest::Approx(direct_charge).epsilon(1e-13));

    const PeriodicGrid other(8, 7.0);
    CHECK_THROWS_AS(pairing(psi, testing_support::random_field(other, 3)), ShapeError);
}

namespace {

// d/dx_j by the spectral multiplier -i k_j.
ComplexSpinorField spectral_derivative(const ComplexSpinorField& psi, int axis)
{
    SpinorSpectrum hat = fft_forward(psi);
    const auto& g = psi.grid();
    for (std::size_t s = 0; s < g.size(); ++s) {
        const double kj = g.wavevector(s)[axis];
        // the Nyquist mode has no odd partner; drop it so the derivative of a real field stays real
        const bool nyquist = g.wave_number(g.coords(s)[axis]) == g.n() / 2;
        for (int c = 0; c < 4; ++c) hat(c, s) *= nyquist ? cd{} : cd{0.0, -kj};
    }
    return fft_inverse(hat);
}

}  // namespace

TEST_CASE("real form of the Dirac generator: R(alpha.grad psi) = (Lambda.grad) R psi and R(H0 psi) = -P R psi")
{
    const double m = 1.0;
    const PeriodicGrid g(8, 8.0);
    const DiracMatrixSet d = build_dirac_matrices(m);
    const LambdaSet l = build_lambda_set();
    const auto psi = testing_support::random_field(g, 9);

    ComplexSpinorField alpha_grad(g);
    RealSpinorField lambda_grad(g);
    for (int j = 0; j < 3; ++j) {
        const ComplexSpinorField dpsi = spectral_derivative(psi, j);
        const RealSpinorField rd = realify(dpsi);
        for (std::size_t s = 0; s < g.size(); ++s) {
            const Spinor4 v = d.alpha[j] * spinor_at(dpsi, s);
            for (int c = 0; c < 4; ++c) alpha_grad(c, s) += v[c];
            Real8 rv;
            for (int c = 0; c < 8; ++c) rv[c] = rd(c, s);
            const Real8 lv = l.lambda[j] * rv;
            for (int c = 0; c < 8; ++c) lambda_grad(c, s) += lv[c];
        }
    }
    CHECK(max_abs_difference(realify(alpha_grad), lambda_grad) <= 1e-10);

    // H0 psi = -alpha.grad psi - i beta m psi against -P R psi = -(Lambda.grad + m Lambda_0) R psi
    const RealSpinorField rpsi = realify(psi);
    ComplexSpinorField h0(g);
    RealSpinorField minus_p(g);
    for (std::size_t s = 0; s < g.size(); ++s) {
        const Spinor4 v = -spinor_at(alpha_grad, s) - I * m * (d.beta * spinor_at(psi, s));
        for (int c = 0; c < 4; ++c) h0(c, s) = v[c];
        Real8 rv;
        for (int c = 0; c < 8; ++c) rv[c] = rpsi(c, s);
        const Real8 mv = m * (l.lambda0 * rv);
        for (int c = 0; c < 8; ++c) minus_p(c, s) = -lambda_grad(c, s) - mv[c];
    }
    CHECK(max_abs_difference(realify(h0), minus_p) <= 1e-10);
}
