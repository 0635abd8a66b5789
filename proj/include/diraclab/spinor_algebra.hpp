#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace diraclab {

using cd = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Mat8 = Eigen::Matrix<cd, 8, 8>;
using RMat8 = Eigen::Matrix<double, 8, 8>;
using Vec3 = Eigen::Vector3d;
using Spinor4 = Eigen::Vector4cd;
using Real8 = Eigen::Matrix<double, 8, 1>;

/// Pauli matrix sigma_k, k = 1, 2, 3.
Mat2 pauli(int k);

/// Dirac matrices in the standard (Dirac) representation:
/// beta = diag(I, -I), alpha_k = [[0, sigma_k], [sigma_k, 0]].
struct DiracMatrixSet {
    std::array<Mat4, 3> alpha;
    Mat4 beta;
    double mass = 1.0;

    /// alpha_0 = beta, alpha_1..3 = alpha.
    const Mat4& operator[](int k) const { return k == 0 ? beta : alpha[k - 1]; }
};

DiracMatrixSet build_dirac_matrices(double mass);

/// Real 8x8 matrices acting on (Re psi, Im psi). With P = Lambda.grad + m Lambda_0,
/// the free equation in real form reads d/dt R(psi) = -P R(psi).
struct LambdaSet {
    std::array<RMat8, 3> lambda;
    RMat8 lambda0;
};

LambdaSet build_lambda_set();

/// omega(k) = sqrt(|k|^2 + m^2).
double omega(const Vec3& k, double mass);

/// P^(k) = -i Lambda.k + m Lambda_0. Anti-Hermitian, P^(k)^2 = -omega^2 I.
Mat8 symbol_P(const LambdaSet& lambdas, const Vec3& k, double mass);

/// Real-form propagator symbol G_t(k) = cos(omega t) - P^(k) sin(omega t) / omega.
Mat8 symbol_G(const LambdaSet& lambdas, const Vec3& k, double mass, double t);

/// Free Hamiltonian symbol H0^(k) = -alpha.k + beta m (gradient maps to -ik).
Mat4 free_hamiltonian_symbol(const DiracMatrixSet& dirac, const Vec3& k);

/// Complex propagator symbol exp(i(alpha.k - beta m) t) = cos(omega t) - i H0^(k) sin(omega t)/omega.
Mat4 free_propagator_symbol(const DiracMatrixSet& dirac, const Vec3& k, double t);

/// A named wavevector-dependent 8x8 matrix.
struct MatrixSymbol {
    std::string name;
    std::function<Mat8(const Vec3&)> eval;

    Mat8 operator()(const Vec3& k) const { return eval(k); }
};

MatrixSymbol make_symbol_P(double mass);
MatrixSymbol make_symbol_G(double mass, double t);
/// Scalar Green-function symbol 1/(k^2 + m^2) times the identity.
MatrixSymbol make_symbol_green(double mass);

/// R(psi) = (Re psi_1..4, Im psi_1..4).
Real8 realify(const Spinor4& psi);
Spinor4 complexify(const Real8& r);

/// Embeds a complex 4x4 operator as the 8x8 real matrix acting on R(psi).
RMat8 realify_operator(const Mat4& a);

}  // namespace diraclab
