#include "qcl/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace qcl {

double frob(const Mat& a) { return a.norm(); }

bool is_hermitian(const Mat& a, double tol) {
  return (a - a.adjoint()).norm() <= tol;
}

bool is_unitary(const Mat& u, double tol) {
  const int n = static_cast<int>(u.rows());
  return (u.adjoint() * u - Mat::Identity(n, n)).norm() <= tol;
}

HermitianEig eig_hermitian(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("hermitian eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

Mat expm_i_hermitian(const HermitianEig& eig, double dt) {
  const int n = static_cast<int>(eig.values.size());
  Vec phases(n);
  for (int k = 0; k < n; ++k) phases(k) = std::exp(cxd(0.0, -eig.values(k) * dt));
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

Mat expm_i_hermitian(const Mat& h, double dt) {
  return expm_i_hermitian(eig_hermitian(h), dt);
}

Mat expm_skew(const Mat& x) {
  // x skew-Hermitian: i*x is Hermitian, exp(x) = exp(-i * (i x) * 1)
  return expm_i_hermitian(Mat(kI * x), 1.0);
}

Mat unitary_log_principal(const Mat& u, double branch_tol) {
  // A unitary matrix is normal; its Schur form is diagonal. Use the Schur
  // basis rather than a general eigensolver so the basis stays orthonormal.
  Eigen::ComplexSchur<Mat> schur(u);
  if (schur.info() != Eigen::Success) throw std::runtime_error("schur decomposition failed");
  const Mat& q = schur.matrixU();
  const Mat& t = schur.matrixT();
  const int n = static_cast<int>(u.rows());
  Vec logs(n);
  for (int k = 0; k < n; ++k) {
    const double theta = std::arg(t(k, k));
    if (std::abs(std::abs(theta) - M_PI) < branch_tol)
      throw BranchDegenerateError("unitary log: eigen-angle at the branch cut (-1 eigenvalue)");
    logs(k) = cxd(0.0, theta);
  }
  Mat a = q * logs.asDiagonal() * q.adjoint();
  return 0.5 * (a - a.adjoint().eval());  // exact skew symmetrization
}

Mat polar_unitary(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

RVec pack_hermitian(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  RVec v(n * n);
  int idx = 0;
  for (int i = 0; i < n; ++i) v(idx++) = a(i, i).real();
  const double s = std::sqrt(2.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      v(idx++) = s * a(i, j).real();
      v(idx++) = s * a(i, j).imag();
    }
  return v;
}

Mat unpack_hermitian(const RVec& v, int n) {
  Mat a = Mat::Zero(n, n);
  int idx = 0;
  for (int i = 0; i < n; ++i) a(i, i) = v(idx++);
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double re = v(idx++) * s;
      const double im = v(idx++) * s;
      a(i, j) = cxd(re, im);
      a(j, i) = cxd(re, -im);
    }
  return a;
}

cxd phase_divdiff1(double x, double y, double dt) {
  // (f(x)-f(y))/(x-y) for f = exp(-i t dt), written via sinc to avoid
  // cancellation when x ~ y.
  const double d = 0.5 * (x - y) * dt;
  const double sinc = std::abs(d) < 1e-6 ? 1.0 - d * d / 6.0 : std::sin(d) / d;
  return cxd(0.0, -dt) * sinc * std::exp(cxd(0.0, -0.5 * (x + y) * dt));
}

namespace {

// exp of a small complex matrix by scaling-and-squaring Taylor; used only for
// the 3x3 Opitz bidiagonal carrying divided differences.
Mat expm_small(Mat a) {
  int squarings = 0;
  double nrm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (nrm > 0.5) {
    a *= 0.5;
    nrm *= 0.5;
    ++squarings;
  }
  const int n = static_cast<int>(a.rows());
  Mat result = Mat::Identity(n, n);
  Mat term = Mat::Identity(n, n);
  for (int k = 1; k <= 16; ++k) {
    term = (term * a / static_cast<double>(k)).eval();
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = (result * result).eval();
  return result;
}

}  // namespace

cxd phase_divdiff2(double x, double y, double z, double dt) {
  // Divided difference f[x,y,z] of f = exp(-i t dt) as the (0,2) entry of
  // exp applied to the bidiagonal [[x,1,0],[0,y,1],[0,0,z]] (Opitz).
  Mat b = Mat::Zero(3, 3);
  b(0, 0) = x; b(1, 1) = y; b(2, 2) = z;
  b(0, 1) = 1.0; b(1, 2) = 1.0;
  const cxd mean = (x + y + z) / 3.0;
  b -= mean * Mat::Identity(3, 3);  // shift for accuracy; restore phase after
  Mat e = expm_small(Mat(cxd(0.0, -dt) * b));
  return e(0, 2) * std::exp(cxd(0.0, -dt) * mean);
}

Mat dexp_i_hermitian(const HermitianEig& eig, const Mat& v, double dt) {
  const int n = static_cast<int>(eig.values.size());
  Mat vt = eig.vectors.adjoint() * v * eig.vectors;
  Mat m(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      m(a, b) = vt(a, b) * phase_divdiff1(eig.values(a), eig.values(b), dt);
  return eig.vectors * m * eig.vectors.adjoint();
}

Mat d2exp_i_hermitian(const HermitianEig& eig, const Mat& v1, const Mat& v2, double dt) {
  const int n = static_cast<int>(eig.values.size());
  Mat v1t = eig.vectors.adjoint() * v1 * eig.vectors;
  Mat v2t = eig.vectors.adjoint() * v2 * eig.vectors;
  Mat m = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      cxd acc(0.0, 0.0);
      for (int c = 0; c < n; ++c) {
        const cxd dd = phase_divdiff2(eig.values(a), eig.values(c), eig.values(b), dt);
        acc += (v1t(a, c) * v2t(c, b) + v2t(a, c) * v1t(c, b)) * dd;
      }
      m(a, b) = acc;
    }
  return eig.vectors * m * eig.vectors.adjoint();
}

Mat random_hermitian(int n, RandomStream& rng, double scale) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cxd(rng.normal(), rng.normal());
  Mat h = 0.5 * (a + a.adjoint().eval());
  return scale * h;
}

Mat random_unitary(int n, RandomStream& rng) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cxd(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix phases so the distribution is Haar
  for (int k = 0; k < n; ++k) {
    cxd d = r(k, k);
    q.col(k) *= (std::abs(d) > 0 ? d / std::abs(d) : cxd(1.0, 0.0));
  }
  return q;
}

Vec random_state(int n, RandomStream& rng) {
  Vec psi(n);
  for (int i = 0; i < n; ++i) psi(i) = cxd(rng.normal(), rng.normal());
  psi.normalize();
  return psi;
}

Mat random_density(int n, RandomStream& rng) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cxd(rng.normal(), rng.normal());
  Mat rho = a * a.adjoint();
  rho /= rho.trace().real();
  return rho;
}

Mat hermitian_with_spectrum(const RVec& spectrum, RandomStream& rng) {
  const int n = static_cast<int>(spectrum.size());
  Mat q = random_unitary(n, rng);
  return q * spectrum.asDiagonal() * q.adjoint();
}

}  // namespace qcl
