#pragma once

#include "diraclab/field.hpp"

namespace diraclab {

/// Order pair of the weighted Sobolev norm ||<x>^sigma <grad>^s psi||.
struct WeightedNormSpec {
    double s = 0.0;
    double sigma = 0.0;
};

/// <x> = (1 + |x|^2)^{1/2} in minimal-image coordinates.
double japanese_bracket(const Vec3& x);

/// ||<x>^sigma <grad>^s psi||_{L^2}, with <grad>^s the Fourier multiplier
/// (1 + |k|^2)^{s/2} at the lattice wavevectors.
double weighted_norm(const ComplexSpinorField& psi, const WeightedNormSpec& spec);
double weighted_norm(const RealSpinorField& r, const WeightedNormSpec& spec);

}  // namespace diraclab
