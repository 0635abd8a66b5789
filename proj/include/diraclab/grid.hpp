#pragma once

#include <array>
#include <cstddef>

#include "diraclab/spinor_algebra.hpp"

namespace diraclab {

/// Periodic cubic lattice of n^3 sites with side length L.
///
/// Sites are stored row-major, site = (ix * n + iy) * n + iz. Positions use
/// minimal-image coordinates centred on site 0, x in [-L/2, L/2)^3, and
/// wavevectors k = 2 pi j / L with j in (-n/2, n/2].
class PeriodicGrid {
public:
    PeriodicGrid() = default;
    PeriodicGrid(int n, double extent);

    int n() const { return n_; }
    double extent() const { return extent_; }
    double spacing() const { return extent_ / n_; }
    double cell_volume() const
    {
        const double h = spacing();
        return h * h * h;
    }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }

    std::size_t index(int ix, int iy, int iz) const
    {
        return (static_cast<std::size_t>(wrap(ix)) * n_ + wrap(iy)) * n_ + wrap(iz);
    }
    std::array<int, 3> coords(std::size_t site) const
    {
        const int iz = static_cast<int>(site % n_);
        const int iy = static_cast<int>((site / n_) % n_);
        const int ix = static_cast<int>(site / (static_cast<std::size_t>(n_) * n_));
        return {ix, iy, iz};
    }

    /// Signed minimal-image offset of axis index i, in [-n/2, n/2).
    int centered(int i) const { return i < n_ / 2 ? i : i - n_; }
    /// Signed wave number index of axis index i, in (-n/2, n/2].
    int wave_number(int i) const { return i <= n_ / 2 ? i : i - n_; }

    Vec3 position(std::size_t site) const;
    double radius(std::size_t site) const { return position(site).norm(); }
    Vec3 wavevector(std::size_t site) const;
    /// Wavevector used inside operator symbols: Nyquist components are set
    /// to zero. On a Nyquist plane k and -k are the same mode, so odd
    /// multipliers such as alpha.k would otherwise break the real structure
    /// (realify would no longer commute with the dynamics).
    Vec3 symbol_wavevector(std::size_t site) const;
    /// Index of the wavevector -k.
    std::size_t negated(std::size_t site) const;
    bool self_conjugate(std::size_t site) const { return negated(site) == site; }

    int wrap(int i) const { return ((i % n_) + n_) % n_; }

    bool operator==(const PeriodicGrid& other) const = default;

private:
    int n_ = 0;
    double extent_ = 0.0;
};

/// Throws ShapeError when the two grids differ.
void require_same_grid(const PeriodicGrid& a, const PeriodicGrid& b, const char* what);

}  // namespace diraclab
