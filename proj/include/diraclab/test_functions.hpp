#pragma once

#include <string>

#include "diraclab/field.hpp"

namespace diraclab {

/// Lattice-truncated smooth probe phi, supported in the ball |x - center| <= support_radius.
struct TestFunction {
    std::string name;
    ComplexSpinorField field;
    Vec3 center = Vec3::Zero();
    double support_radius = 0.0;

    RealSpinorField real() const { return realify(field); }
};

/// Spin orientation by name: "up", "down" (upper components), "up-lower",
/// "down-lower", "x" ((1,1,0,0)/sqrt 2), "y" ((1,i,0,0)/sqrt 2).
Spinor4 spin_orientation(const std::string& name);

/// amplitude * spin at the single site nearest to `center`.
TestFunction site_bump(const PeriodicGrid& grid, const Vec3& center, const Spinor4& spin, double amplitude);

/// amplitude * exp(-|x - center|^2 / (2 width^2)) * spin, cut off at |x - center| > cutoff.
TestFunction gaussian_bump(const PeriodicGrid& grid, const Vec3& center, double width, double cutoff,
                           const Spinor4& spin, double amplitude);

/// True when every nonzero value lies inside the declared support ball.
bool respects_support(const TestFunction& phi);

}  // namespace diraclab
