#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "qcl/rng.hpp"

namespace qcl {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cxd kI{0.0, 1.0};

// Thrown when the principal matrix logarithm is requested at an eigenvalue
// too close to the branch cut at -1.
struct BranchDegenerateError : std::domain_error {
  using std::domain_error::domain_error;
};

struct HermitianEig {
  RVec values;   // ascending (Eigen convention)
  Mat vectors;   // columns
};

double frob(const Mat& a);
bool is_hermitian(const Mat& a, double tol);
bool is_unitary(const Mat& u, double tol);

HermitianEig eig_hermitian(const Mat& h);

// exp(-i * h * dt) for Hermitian h, via eigendecomposition (exactly unitary
// up to roundoff).
Mat expm_i_hermitian(const Mat& h, double dt);
Mat expm_i_hermitian(const HermitianEig& eig, double dt);

// exp(x) for skew-Hermitian x.
Mat expm_skew(const Mat& x);

// Principal logarithm of a unitary: skew-Hermitian A with exp(A) = u and
// eigen-angles in (-pi, pi]. Throws BranchDegenerateError when an eigen-angle
// sits within `branch_tol` of the cut.
Mat unitary_log_principal(const Mat& u, double branch_tol = 1e-9);

// Nearest unitary in Frobenius norm (polar factor).
Mat polar_unitary(const Mat& m);

// Isometric packing of a Hermitian matrix into R^(N^2):
// [diag; sqrt2*Re upper; sqrt2*Im upper], so dot(pack(A),pack(B)) = Tr(AB).
RVec pack_hermitian(const Mat& a);
Mat unpack_hermitian(const RVec& v, int n);

// First divided difference of f(x) = exp(-i x dt), stable for close nodes.
cxd phase_divdiff1(double x, double y, double dt);
// Second divided difference of the same function (Opitz bidiagonal form).
cxd phase_divdiff2(double x, double y, double z, double dt);

// Directional derivative of h -> exp(-i (H + h V) dt) at h = 0, H Hermitian
// given by its eigensystem, V Hermitian.
Mat dexp_i_hermitian(const HermitianEig& eig, const Mat& v, double dt);
// Mixed second derivative d^2/dh1 dh2 exp(-i (H + h1 V1 + h2 V2) dt) at 0.
Mat d2exp_i_hermitian(const HermitianEig& eig, const Mat& v1, const Mat& v2, double dt);

// Seeded random matrix factories.
Mat random_hermitian(int n, RandomStream& rng, double scale = 1.0);
Mat random_unitary(int n, RandomStream& rng);
Vec random_state(int n, RandomStream& rng);
Mat random_density(int n, RandomStream& rng);

// Hermitian matrix with prescribed eigenvalues and a random eigenbasis.
Mat hermitian_with_spectrum(const RVec& spectrum, RandomStream& rng);

}  // namespace qcl
