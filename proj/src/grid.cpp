#include "diraclab/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "diraclab/errors.hpp"

namespace diraclab {

PeriodicGrid::PeriodicGrid(int n, double extent) : n_(n), extent_(extent)
{
    if (n <= 0 || n % 2 != 0)
        throw InvalidParameter("PeriodicGrid: points per axis must be a positive even integer, got " +
                               std::to_string(n));
    if (!(extent > 0.0) || !std::isfinite(extent))
        throw InvalidParameter("PeriodicGrid: extent must be positive");
}

Vec3 PeriodicGrid::position(std::size_t site) const
{
    const auto c = coords(site);
    const double h = spacing();
    return {centered(c[0]) * h, centered(c[1]) * h, centered(c[2]) * h};
}

Vec3 PeriodicGrid::wavevector(std::size_t site) const
{
    const auto c = coords(site);
    const double dk = 2.0 * std::numbers::pi / extent_;
    return {wave_number(c[0]) * dk, wave_number(c[1]) * dk, wave_number(c[2]) * dk};
}

Vec3 PeriodicGrid::symbol_wavevector(std::size_t site) const
{
    const auto c = coords(site);
    const double dk = 2.0 * std::numbers::pi / extent_;
    Vec3 k;
    for (int a = 0; a < 3; ++a) {
        const int j = wave_number(c[a]);
        k[a] = (2 * j == n_) ? 0.0 : j * dk;
    }
    return k;
}

std::size_t PeriodicGrid::negated(std::size_t site) const
{
    const auto c = coords(site);
    return index(-c[0], -c[1], -c[2]);
}

void require_same_grid(const PeriodicGrid& a, const PeriodicGrid& b, const char* what)
{
    if (!(a == b))
        throw ShapeError(std::string(what) + ": grid mismatch (" + std::to_string(a.n()) + "^3, L=" +
                         std::to_string(a.extent()) + " vs " + std::to_string(b.n()) + "^3, L=" +
                         std::to_string(b.extent()) + ")");
}

}  // namespace diraclab
