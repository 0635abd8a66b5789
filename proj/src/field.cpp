#include "diraclab/field.hpp"

#include "diraclab/kernels.hpp"

namespace diraclab {

Spinor4 spinor_at(const ComplexSpinorField& f, std::size_t site)
{
    return {f(0, site), f(1, site), f(2, site), f(3, site)};
}

void set_spinor(ComplexSpinorField& f, std::size_t site, const Spinor4& s)
{
    for (int c = 0; c < 4; ++c) f(c, site) = s[c];
}

Spinor4 spinor_at(const SpinorSpectrum& f, std::size_t site)
{
    return {f(0, site), f(1, site), f(2, site), f(3, site)};
}

void set_spinor(SpinorSpectrum& f, std::size_t site, const Spinor4& s)
{
    for (int c = 0; c < 4; ++c) f(c, site) = s[c];
}

RealSpinorField realify(const ComplexSpinorField& psi)
{
    RealSpinorField r(psi.grid());
    for (int c = 0; c < 4; ++c) {
        auto src = psi.component(c);
        auto re = r.component(c);
        auto im = r.component(c + 4);
        for (std::size_t i = 0; i < src.size(); ++i) {
            re[i] = src[i].real();
            im[i] = src[i].imag();
        }
    }
    return r;
}

ComplexSpinorField complexify(const RealSpinorField& r)
{
    ComplexSpinorField psi(r.grid());
    for (int c = 0; c < 4; ++c) {
        auto dst = psi.component(c);
        auto re = r.component(c);
        auto im = r.component(c + 4);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = {re[i], im[i]};
    }
    return psi;
}

cd inner(const ComplexSpinorField& psi, const ComplexSpinorField& phi)
{
    require_same_grid(psi.grid(), phi.grid(), "inner");
    return psi.grid().cell_volume() * kernels::conj_dot(psi.values(), phi.values());
}

double pairing(const ComplexSpinorField& psi, const ComplexSpinorField& phi) { return inner(psi, phi).real(); }

double pairing(const RealSpinorField& a, const RealSpinorField& b)
{
    require_same_grid(a.grid(), b.grid(), "pairing");
    return a.grid().cell_volume() * kernels::dot(a.values(), b.values());
}

double charge(const ComplexSpinorField& psi)
{
    return psi.grid().cell_volume() * kernels::sum_squares(psi.values());
}

double norm(const ComplexSpinorField& psi) { return std::sqrt(charge(psi)); }

double norm(const RealSpinorField& r) { return std::sqrt(r.grid().cell_volume() * kernels::sum_squares(r.values())); }

double max_abs_difference(const ComplexSpinorField& a, const ComplexSpinorField& b)
{
    require_same_grid(a.grid(), b.grid(), "max_abs_difference");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double max_abs_difference(const RealSpinorField& a, const RealSpinorField& b)
{
    require_same_grid(a.grid(), b.grid(), "max_abs_difference");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace diraclab
