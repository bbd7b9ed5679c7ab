#pragma once

// Shared test oracles: finite differences, reference systems, and brute
// force checks kept independent of the implementation paths they verify.

#include <qcl/objectives.hpp>
#include <qcl/rng.hpp>

#include <functional>

namespace qcl::testing {

inline Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline Mat pauli_y() {
  Mat m(2, 2);
  m << cxd(0, 0), cxd(0, -1), cxd(0, 1), cxd(0, 0);
  return m;
}
inline Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline Mat basis_projector(int n, int j) {
  Mat p = Mat::Zero(n, n);
  p(j, j) = 1.0;
  return p;
}

// Random controllable ladder: diagonal anharmonic drift plus banded
// couplings of the requested width.
inline ControlSystem random_ladder(int n, int band, double horizon, RandomStream& rng,
                                   int channels = 1) {
  ControlSystem sys;
  sys.dim = n;
  sys.horizon = horizon;
  Mat h0 = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) h0(i, i) = i + 0.05 * i * i + 0.1 * rng.uniform();
  sys.h0 = h0;
  for (int c = 0; c < channels; ++c) {
    Mat mu = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j <= std::min(n - 1, i + band); ++j) {
        const double re = rng.uniform(-1.0, 1.0);
        mu(i, j) = re;
        mu(j, i) = re;
      }
    sys.dipoles.push_back(mu);
  }
  return sys;
}

inline ControlSystem random_dense_system(int n, double horizon, RandomStream& rng,
                                         int channels = 1, double scale = 1.0) {
  ControlSystem sys;
  sys.dim = n;
  sys.horizon = horizon;
  sys.h0 = random_hermitian(n, rng, scale);
  for (int c = 0; c < channels; ++c) sys.dipoles.push_back(random_hermitian(n, rng, scale));
  return sys;
}

inline ControlField random_smooth_field(double horizon, int steps, int channels,
                                        RandomStream& rng, double scale = 0.5, int modes = 3) {
  RMat a(modes, channels), b(modes, channels);
  for (int m = 0; m < modes; ++m)
    for (int c = 0; c < channels; ++c) {
      a(m, c) = rng.normal();
      b(m, c) = rng.normal();
    }
  return ControlField::sampled(
      horizon, steps,
      [&](double t) {
        RVec v = RVec::Zero(channels);
        for (int m = 0; m < modes; ++m) {
          const double w = 2.0 * M_PI * (m + 1) * t / horizon;
          for (int c = 0; c < channels; ++c)
            v(c) += scale * (a(m, c) * std::cos(w) + b(m, c) * std::sin(w));
        }
        return v;
      },
      channels);
}

// Central finite differences of a scalar field functional, one entry per
// field sample.
inline RMat fd_gradient(const std::function<double(const ControlField&)>& f,
                        const ControlField& field, double h) {
  RMat g(field.steps(), field.channels());
  for (int k = 0; k < field.steps(); ++k)
    for (int c = 0; c < field.channels(); ++c) {
      ControlField up = field, dn = field;
      up.values(k, c) += h;
      dn.values(k, c) -= h;
      g(k, c) = (f(up) - f(dn)) / (2.0 * h);
    }
  return g;
}

// Full second-difference Hessian of a scalar field functional.
inline RMat fd_hessian(const std::function<double(const ControlField&)>& f,
                       const ControlField& field, double h) {
  const int kk = field.steps(), m = field.channels();
  const int dim = kk * m;
  const double f0 = f(field);
  RMat hess(dim, dim);
  auto shift = [&](int a, double ha, int b, double hb) {
    ControlField x = field;
    x.values(a / m, a % m) += ha;
    x.values(b / m, b % m) += hb;
    return f(x);
  };
  for (int a = 0; a < dim; ++a) {
    hess(a, a) = (shift(a, h, a, 0) - 2.0 * f0 + shift(a, -h, a, 0)) / (h * h);
    for (int b = 0; b < a; ++b) {
      const double v = (shift(a, h, b, h) - shift(a, h, b, -h) - shift(a, -h, b, h) +
                        shift(a, -h, b, -h)) /
                       (4.0 * h * h);
      hess(a, b) = v;
      hess(b, a) = v;
    }
  }
  return hess;
}

inline int count_above(const RVec& eigs, double threshold) {
  int n = 0;
  for (int i = 0; i < eigs.size(); ++i)
    if (std::abs(eigs(i)) > threshold) ++n;
  return n;
}

}  // namespace qcl::testing
