#include "diraclab/test_functions.hpp"

#include <cmath>

#include "diraclab/errors.hpp"

namespace diraclab {

namespace {

Vec3 minimal_image(const PeriodicGrid& g, const Vec3& d)
{
    Vec3 out;
    for (int a = 0; a < 3; ++a) out[a] = d[a] - g.extent() * std::round(d[a] / g.extent());
    return out;
}

}  // namespace

Spinor4 spin_orientation(const std::string& name)
{
    const double r = 1.0 / std::sqrt(2.0);
    Spinor4 s = Spinor4::Zero();
    if (name == "up") s[0] = 1.0;
    else if (name == "down") s[1] = 1.0;
    else if (name == "up-lower") s[2] = 1.0;
    else if (name == "down-lower") s[3] = 1.0;
    else if (name == "x") s << r, r, 0.0, 0.0;
    else if (name == "y") s << r, cd(0.0, r), 0.0, 0.0;
    else throw InvalidParameter("unknown spin orientation '" + name + "'");
    return s;
}

TestFunction site_bump(const PeriodicGrid& grid, const Vec3& center, const Spinor4& spin, double amplitude)
{
    const double h = grid.spacing();
    const std::size_t site = grid.index(static_cast<int>(std::lround(center[0] / h)),
                                        static_cast<int>(std::lround(center[1] / h)),
                                        static_cast<int>(std::lround(center[2] / h)));
    TestFunction phi{"site-bump", ComplexSpinorField(grid), grid.position(site), 0.0};
    set_spinor(phi.field, site, amplitude * spin);
    return phi;
}

TestFunction gaussian_bump(const PeriodicGrid& grid, const Vec3& center, double width, double cutoff,
                           const Spinor4& spin, double amplitude)
{
    if (!(width > 0.0) || !(cutoff > 0.0)) throw InvalidParameter("gaussian_bump: width and cutoff must be positive");
    if (cutoff >= grid.extent() / 2) throw InvalidParameter("gaussian_bump: cutoff must stay below L/2");
    TestFunction phi{"gaussian-bump", ComplexSpinorField(grid), center, cutoff};
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const double r = minimal_image(grid, grid.position(s) - center).norm();
        if (r <= cutoff) set_spinor(phi.field, s, amplitude * std::exp(-r * r / (2.0 * width * width)) * spin);
    }
    return phi;
}

bool respects_support(const TestFunction& phi)
{
    const auto& g = phi.field.grid();
    for (std::size_t s = 0; s < g.size(); ++s) {
        if (spinor_at(phi.field, s).isZero(0.0)) continue;
        if (minimal_image(g, g.position(s) - phi.center).norm() > phi.support_radius + 1e-12) return false;
    }
    return true;
}

}  // namespace diraclab
