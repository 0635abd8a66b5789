#include "diraclab/spinor_algebra.hpp"

#include <cmath>

#include "diraclab/errors.hpp"

namespace diraclab {

namespace {

const cd I{0.0, 1.0};

Mat4 blocks(const Mat2& a, const Mat2& b, const Mat2& c, const Mat2& d)
{
    Mat4 out;
    out << a, b, c, d;
    return out;
}

RMat8 real_blocks(const Mat4& a, const Mat4& b, const Mat4& c, const Mat4& d)
{
    Mat8 out;
    out << a, b, c, d;
    return out.real();
}

}  // namespace

Mat2 pauli(int k)
{
    Mat2 s;
    switch (k) {
    case 1: s << 0.0, 1.0, 1.0, 0.0; break;
    case 2: s << 0.0, -I, I, 0.0; break;
    case 3: s << 1.0, 0.0, 0.0, -1.0; break;
    default: throw InvalidParameter("pauli: index must be 1, 2 or 3");
    }
    return s;
}

DiracMatrixSet build_dirac_matrices(double mass)
{
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw InvalidParameter("build_dirac_matrices: mass must be positive, got " + std::to_string(mass));
    const Mat2 id = Mat2::Identity();
    const Mat2 zero = Mat2::Zero();
    DiracMatrixSet set;
    set.mass = mass;
    set.beta = blocks(id, zero, zero, -id);
    for (int k = 1; k <= 3; ++k) {
        const Mat2 s = pauli(k);
        set.alpha[k - 1] = blocks(zero, s, s, zero);
    }
    return set;
}

LambdaSet build_lambda_set()
{
    const DiracMatrixSet d = build_dirac_matrices(1.0);
    const Mat4 z = Mat4::Zero();
    LambdaSet l;
    l.lambda[0] = real_blocks(d.alpha[0], z, z, d.alpha[0]);
    // i alpha_2 is real because sigma_2 is purely imaginary.
    l.lambda[1] = real_blocks(z, I * d.alpha[1], -I * d.alpha[1], z);
    l.lambda[2] = real_blocks(d.alpha[2], z, z, d.alpha[2]);
    l.lambda0 = real_blocks(z, -d.beta, d.beta, z);
    return l;
}

double omega(const Vec3& k, double mass) { return std::sqrt(k.squaredNorm() + mass * mass); }

Mat8 symbol_P(const LambdaSet& lambdas, const Vec3& k, double mass)
{
    RMat8 lk = k[0] * lambdas.lambda[0] + k[1] * lambdas.lambda[1] + k[2] * lambdas.lambda[2];
    return -I * lk.cast<cd>() + (mass * lambdas.lambda0).cast<cd>();
}

Mat8 symbol_G(const LambdaSet& lambdas, const Vec3& k, double mass, double t)
{
    const double w = omega(k, mass);
    return std::cos(w * t) * Mat8::Identity() - symbol_P(lambdas, k, mass) * (std::sin(w * t) / w);
}

Mat4 free_hamiltonian_symbol(const DiracMatrixSet& dirac, const Vec3& k)
{
    return -(k[0] * dirac.alpha[0] + k[1] * dirac.alpha[1] + k[2] * dirac.alpha[2]) + dirac.mass * dirac.beta;
}

Mat4 free_propagator_symbol(const DiracMatrixSet& dirac, const Vec3& k, double t)
{
    const double w = omega(k, dirac.mass);
    return std::cos(w * t) * Mat4::Identity() - I * (std::sin(w * t) / w) * free_hamiltonian_symbol(dirac, k);
}

MatrixSymbol make_symbol_P(double mass)
{
    build_dirac_matrices(mass);
    return {"P", [l = build_lambda_set(), mass](const Vec3& k) { return symbol_P(l, k, mass); }};
}

MatrixSymbol make_symbol_G(double mass, double t)
{
    build_dirac_matrices(mass);
    return {"G_t", [l = build_lambda_set(), mass, t](const Vec3& k) { return symbol_G(l, k, mass, t); }};
}

MatrixSymbol make_symbol_green(double mass)
{
    build_dirac_matrices(mass);
    return {"green", [mass](const Vec3& k) -> Mat8 {
                return Mat8::Identity() / (k.squaredNorm() + mass * mass);
            }};
}

Real8 realify(const Spinor4& psi)
{
    Real8 r;
    r.head<4>() = psi.real();
    r.tail<4>() = psi.imag();
    return r;
}

Spinor4 complexify(const Real8& r)
{
    return r.head<4>().cast<cd>() + I * r.tail<4>().cast<cd>();
}

RMat8 realify_operator(const Mat4& a)
{
    RMat8 out;
    out.topLeftCorner<4, 4>() = a.real();
    out.topRightCorner<4, 4>() = -a.imag();
    out.bottomLeftCorner<4, 4>() = a.imag();
    out.bottomRightCorner<4, 4>() = a.real();
    return out;
}

}  // namespace diraclab
