#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "diraclab/errors.hpp"
#include "diraclab/fft.hpp"
#include "diraclab/io.hpp"
#include "diraclab/kernels.hpp"
#include "diraclab/norms.hpp"
#include "helpers.hpp"

using namespace diraclab;

TEST_CASE("grid geometry")
{
    const PeriodicGrid g(8, 4.0);
    CHECK(g.spacing() * g.n() == 4.0);
    CHECK(g.size() == 512);
    CHECK(g.wavevector(0).isZero(0.0));
    CHECK(g.position(0).isZero(0.0));
    for (std::size_t s = 0; s < g.size(); ++s) {
        const Vec3 x = g.position(s);
        CHECK(x.minCoeff() >= -2.0);
        CHECK(x.maxCoeff() < 2.0);
        const Vec3 k = g.wavevector(s);
        CHECK(k.minCoeff() > -std::numbers::pi / g.spacing());
        CHECK(k.maxCoeff() <= std::numbers::pi / g.spacing() + 1e-12);
        CHECK(g.negated(g.negated(s)) == s);
        const auto c = g.coords(s);
        CHECK(g.index(c[0], c[1], c[2]) == s);
    }
    CHECK(g.index(-1, 8, 9) == g.index(7, 0, 1));
    CHECK(g.self_conjugate(g.index(4, 0, 4)));
    CHECK_FALSE(g.self_conjugate(g.index(1, 0, 0)));
}

TEST_CASE("grid rejects bad parameters")
{
    CHECK_THROWS_AS(PeriodicGrid(7, 1.0), InvalidParameter);
    CHECK_THROWS_AS(PeriodicGrid(0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(PeriodicGrid(8, -1.0), InvalidParameter);
    ComplexSpinorField a(PeriodicGrid(8, 1.0)), b(PeriodicGrid(4, 1.0));
    CHECK_THROWS_AS(a += b, ShapeError);
}

TEST_CASE("fft: constant field lives at k = 0, round trip, Parseval")
{
    const PeriodicGrid g(8, 5.0);
    ComplexSpinorField c(g);
    for (std::size_t s = 0; s < g.size(); ++s) c(2, s) = {1.5, -0.5};
    const SpinorSpectrum hat = fft_forward(c);
    CHECK(std::abs(hat(2, 0) - cd(1.5, -0.5) * double(g.size())) < 1e-10);
    double off = 0.0;
    for (std::size_t s = 1; s < g.size(); ++s) off = std::max(off, std::abs(hat(2, s)));
    CHECK(off < 1e-10);

    const auto psi = testing_support::random_field(g, 4);
    CHECK(max_abs_difference(fft_inverse(fft_forward(psi)), psi) < 1e-12);
    const SpinorSpectrum ph = fft_forward(psi);
    double direct = 0.0;
    for (const cd& v : psi.values()) direct += std::norm(v);
    double spectral = 0.0;
    for (const cd& v : ph.values()) spectral += std::norm(v);
    CHECK(spectral / g.size() == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("fft sign: a plane wave exp(-i k0.x) lands on the mode k0")
{
    const PeriodicGrid g(8, 8.0);
    const std::size_t k0 = g.index(1, 2, -3);
    const Vec3 kv = g.wavevector(k0);
    ComplexSpinorField w(g);
    for (std::size_t s = 0; s < g.size(); ++s) w(0, s) = std::exp(cd(0.0, -kv.dot(g.position(s))));
    const SpinorSpectrum hat = fft_forward(w);
    CHECK(std::abs(hat(0, k0) - double(g.size())) < 1e-9);
}

TEST_CASE("real field transform is Hermitian-symmetric and inverts")
{
    const PeriodicGrid g(8, 5.0);
    const RealSpinorField r = realify(testing_support::random_field(g, 5));
    const RealSpinorSpectrum hat = fft_forward(r);
    for (std::size_t s = 0; s < g.size(); ++s)
        CHECK(std::abs(hat(3, g.negated(s)) - std::conj(hat(3, s))) < 1e-10);
    CHECK(max_abs_difference(fft_inverse_real(hat), r) < 1e-12);
}

TEST_CASE("weighted norm")
{
    const PeriodicGrid g(8, 6.0);
    const auto psi = testing_support::random_field(g, 6);
    CHECK(weighted_norm(psi, {0.0, 0.0}) == doctest::Approx(norm(psi)).epsilon(1e-13));

    ComplexSpinorField one(g);
    for (std::size_t s = 0; s < g.size(); ++s) one(1, s) = 1.0;
    const double sigma = -2.5 - 0.3;
    double direct = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s) direct += std::pow(1.0 + g.position(s).squaredNorm(), sigma);
    CHECK(weighted_norm(one, {0.0, sigma}) == doctest::Approx(std::sqrt(direct * g.cell_volume())).epsilon(1e-12));
    // constant field is killed by nothing but k = 0, where the multiplier is 1
    CHECK(weighted_norm(one, {2.0, sigma}) == doctest::Approx(weighted_norm(one, {0.0, sigma})).epsilon(1e-10));

    double prev = 0.0;
    for (double s2 : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        const double v = weighted_norm(psi, {0.0, s2});
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(weighted_norm(psi, {1.0, 0.0}) > weighted_norm(psi, {0.0, 0.0}));
}

TEST_CASE("shift moves values and is undone by the opposite shift")
{
    const PeriodicGrid g(4, 4.0);
    const auto psi = testing_support::random_field(g, 8);
    const auto moved = shifted(psi, 1, -2, 3);
    CHECK(moved(2, g.index(1, -2, 3)) == psi(2, 0));
    CHECK(shifted(moved, -1, 2, -3) == psi);
}

TEST_CASE("field dumps round trip in both encodings")
{
    const PeriodicGrid g(4, 3.0);
    const auto psi = testing_support::random_field(g, 10);
    for (auto enc : {FieldEncoding::csv, FieldEncoding::binary}) {
        std::stringstream ss;
        write_field(ss, psi, enc);
        CHECK(read_complex_field(ss) == psi);
        std::stringstream rs;
        write_field(rs, realify(psi), enc);
        CHECK(read_real_field(rs) == realify(psi));
    }
    std::stringstream bad("hello\n");
    CHECK_THROWS_AS(read_complex_field(bad), ValidationError);
    std::stringstream wrong_kind;
    write_field(wrong_kind, realify(psi), FieldEncoding::csv);
    CHECK_THROWS_AS(read_complex_field(wrong_kind), ValidationError);
}

TEST_CASE("parallel kernels match the serial references")
{
    const PeriodicGrid g(16, 10.0);
    const auto a = testing_support::random_field(g, 12);
    const auto b = testing_support::random_field(g, 13);
    CHECK(kernels::sum_squares(a.values()) == doctest::Approx(kernels::reference::sum_squares(a.values())).epsilon(1e-13));
    const cd d1 = kernels::conj_dot(a.values(), b.values());
    const cd d2 = kernels::reference::conj_dot(a.values(), b.values());
    CHECK(std::abs(d1 - d2) < 1e-9 * std::abs(d2) + 1e-9);

    SpinorSpectrum s1 = fft_forward(a), s2 = s1;
    kernels::apply_free_propagator(1.0, 3.7, s1);
    kernels::reference::apply_free_propagator(1.0, 3.7, s2);
    double diff = 0.0;
    for (std::size_t i = 0; i < s1.values().size(); ++i) diff = std::max(diff, std::abs(s1.values()[i] - s2.values()[i]));
    CHECK(diff < 1e-9);

    std::vector<cd> diag(4 * g.size());
    std::vector<Mat4> mats(g.size());
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (auto& v : diag) v = {n01(rng), n01(rng)};
    for (auto& m : mats) m = Mat4::Random();
    auto f1 = a, f2 = a;
    kernels::apply_site_diagonal(diag, f1);
    kernels::reference::apply_site_diagonal(diag, f2);
    CHECK(max_abs_difference(f1, f2) == 0.0);
    kernels::apply_site_matrices(mats, f1);
    kernels::reference::apply_site_matrices(mats, f2);
    CHECK(max_abs_difference(f1, f2) < 1e-12);

    std::vector<Mat8> modes(g.size());
    for (auto& m : modes) m = Mat8::Random();
    RealSpinorSpectrum r1 = fft_forward(realify(a)), r2 = r1;
    kernels::apply_mode_matrices(modes, r1);
    kernels::reference::apply_mode_matrices(modes, r2);
    double rdiff = 0.0;
    for (std::size_t i = 0; i < r1.values().size(); ++i) rdiff = std::max(rdiff, std::abs(r1.values()[i] - r2.values()[i]));
    CHECK(rdiff < 1e-9);
    CHECK_THROWS_AS(kernels::apply_site_diagonal(std::span<const cd>(diag.data(), 3), f1), ShapeError);
}

TEST_CASE("symbol wavevector drops Nyquist components and is odd under negation")
{
    const PeriodicGrid g(8, 8.0);
    for (std::size_t s = 0; s < g.size(); ++s) {
        const Vec3 k = g.symbol_wavevector(s);
        CHECK((k + g.symbol_wavevector(g.negated(s))).isZero(1e-14));
        const auto c = g.coords(s);
        for (int a = 0; a < 3; ++a)
            CHECK(k[a] == (c[a] == g.n() / 2 ? 0.0 : g.wavevector(s)[a]));
    }
}
