#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

#include "diraclab/errors.hpp"
#include "diraclab/grid.hpp"
#include "diraclab/spinor_algebra.hpp"

namespace diraclab {

/// 64-byte aligned allocator so FFT plans can run on any field buffer with SIMD.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

struct PositionSpace {};
struct MomentumSpace {};

/// Multi-component field on a periodic grid, stored component-major: the
/// values of component c occupy [c * N, (c + 1) * N).
template <class T, int Components, class Space>
class LatticeField {
public:
    using value_type = T;
    static constexpr int components = Components;

    LatticeField() = default;
    explicit LatticeField(const PeriodicGrid& grid) : grid_(grid), data_(Components * grid.size(), T{}) {}

    const PeriodicGrid& grid() const { return grid_; }
    std::size_t sites() const { return grid_.size(); }

    std::span<T> component(int c) { return {data_.data() + c * sites(), sites()}; }
    std::span<const T> component(int c) const { return {data_.data() + c * sites(), sites()}; }

    T& operator()(int c, std::size_t site) { return data_[c * sites() + site]; }
    const T& operator()(int c, std::size_t site) const { return data_[c * sites() + site]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    LatticeField& operator+=(const LatticeField& o)
    {
        require_same_grid(grid_, o.grid_, "LatticeField::operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    LatticeField& operator-=(const LatticeField& o)
    {
        require_same_grid(grid_, o.grid_, "LatticeField::operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    template <class S>
    LatticeField& operator*=(S s)
    {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend LatticeField operator+(LatticeField a, const LatticeField& b) { return a += b; }
    friend LatticeField operator-(LatticeField a, const LatticeField& b) { return a -= b; }
    template <class S>
    friend LatticeField operator*(S s, LatticeField a)
    {
        return a *= s;
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](const T& v) {
            if constexpr (std::is_floating_point_v<T>) return std::isfinite(v);
            else return std::isfinite(v.real()) && std::isfinite(v.imag());
        });
    }

    bool operator==(const LatticeField& o) const { return grid_ == o.grid_ && data_ == o.data_; }

private:
    PeriodicGrid grid_;
    std::vector<T, AlignedAllocator<T>> data_;
};

/// psi(x) in C^4.
using ComplexSpinorField = LatticeField<cd, 4, PositionSpace>;
/// R(psi)(x) in R^8.
using RealSpinorField = LatticeField<double, 8, PositionSpace>;
/// Lattice Fourier coefficients of a ComplexSpinorField.
using SpinorSpectrum = LatticeField<cd, 4, MomentumSpace>;
/// Lattice Fourier coefficients of a RealSpinorField (one complex plane per real component).
using RealSpinorSpectrum = LatticeField<cd, 8, MomentumSpace>;

Spinor4 spinor_at(const ComplexSpinorField& f, std::size_t site);
void set_spinor(ComplexSpinorField& f, std::size_t site, const Spinor4& s);
Spinor4 spinor_at(const SpinorSpectrum& f, std::size_t site);
void set_spinor(SpinorSpectrum& f, std::size_t site, const Spinor4& s);

RealSpinorField realify(const ComplexSpinorField& psi);
ComplexSpinorField complexify(const RealSpinorField& r);

/// Hermitian L^2 product (psi, phi) = h^3 sum_x psi^* phi.
cd inner(const ComplexSpinorField& psi, const ComplexSpinorField& phi);
/// Real pairing <psi, phi> = (R psi, R phi) = Re (psi, phi).
double pairing(const ComplexSpinorField& psi, const ComplexSpinorField& phi);
double pairing(const RealSpinorField& a, const RealSpinorField& b);
/// Charge ||psi||^2 = h^3 sum_x |psi(x)|^2.
double charge(const ComplexSpinorField& psi);
double norm(const ComplexSpinorField& psi);
double norm(const RealSpinorField& r);
double max_abs_difference(const ComplexSpinorField& a, const ComplexSpinorField& b);
double max_abs_difference(const RealSpinorField& a, const RealSpinorField& b);

/// Cyclic translation (T_h psi)(x) = psi(x - shift).
template <class T, int C, class S>
LatticeField<T, C, S> shifted(const LatticeField<T, C, S>& f, int sx, int sy, int sz)
{
    LatticeField<T, C, S> out(f.grid());
    const auto& g = f.grid();
    for (std::size_t site = 0; site < g.size(); ++site) {
        const auto c = g.coords(site);
        const std::size_t dst = g.index(c[0] + sx, c[1] + sy, c[2] + sz);
        for (int comp = 0; comp < C; ++comp) out(comp, dst) = f(comp, site);
    }
    return out;
}

}  // namespace diraclab
