#include "qcl/rwa.hpp"

#include <cmath>

namespace qcl {

Mat RotatingFrame::frame_unitary(double t) const {
  const int n = static_cast<int>(energies.size());
  Mat u = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) u(i, i) = std::exp(cxd(0.0, -energies(i) * t));
  return u;
}

ControlSystem diagonalize_system(const ControlSystem& system) {
  system.validate();
  HermitianEig eig = eig_hermitian(system.h0);
  ControlSystem out = system;
  out.h0 = eig.values.cast<cxd>().asDiagonal();
  for (std::size_t c = 0; c < system.dipoles.size(); ++c)
    out.dipoles[c] = eig.vectors.adjoint() * system.dipoles[c] * eig.vectors;
  return out;
}

RwaSystem rwa_transform(const ControlSystem& system, double tol) {
  system.validate();
  const int n = system.dim;
  const double scale = std::max(1.0, system.h0.norm());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && std::abs(system.h0(i, j)) > tol * scale)
        throw InvalidInput("rwa_transform: drift must be diagonal (use diagonalize_system)");

  RwaSystem out;
  out.frame.energies = system.h0.diagonal().real();
  out.system = system;
  out.system.h0 = Mat::Zero(n, n);

  const double espread = out.frame.energies.maxCoeff() - out.frame.energies.minCoeff();
  if (espread < tol * scale) {  // no drift to eliminate
    out.frame.trivial = true;
    out.frame.carrier = RVec::Zero(system.channels());
    for (int c = 0; c < system.channels(); ++c) out.frame.channel_pairs.emplace_back(-1, -1);
    return out;
  }

  out.frame.carrier = RVec::Zero(system.channels());
  for (int c = 0; c < system.channels(); ++c) {
    const Mat& mu = system.dipoles[c];
    const double mu_scale = std::max(1.0, mu.norm());
    int pj = -1, pk = -1;
    double gap = 0.0;
    bool found = false;
    for (int i = 0; i < n; ++i) {
      if (std::abs(mu(i, i)) > tol * mu_scale)
        throw InvalidInput("rwa_transform: dipoles must be off-diagonal in the drift eigenbasis");
      for (int j = i + 1; j < n; ++j) {
        if (std::abs(mu(i, j)) <= tol * mu_scale) continue;
        const double g = out.frame.energies(j) - out.frame.energies(i);
        if (!found) {
          pj = i;
          pk = j;
          gap = g;
          found = true;
        } else if (std::abs(g - gap) > 1e-9 * std::max(1.0, std::abs(gap))) {
          throw InvalidInput("rwa_transform: channel couples several distinct transition frequencies");
        }
      }
    }
    if (!found) throw InvalidInput("rwa_transform: channel dipole vanishes");
    out.frame.channel_pairs.emplace_back(pj, pk);
    out.frame.carrier(c) = gap;
  }
  return out;
}

ControlField lab_field_from_envelope(const RotatingFrame& frame, const ControlField& envelope,
                                     int oversample) {
  if (oversample < 1) throw InvalidInput("lab_field_from_envelope: oversample must be >= 1");
  const int kk = envelope.steps();
  const int m = envelope.channels();
  const double t_total = envelope.duration();
  const int kk_lab = kk * oversample;

  ControlField lab;
  lab.grid = RVec::LinSpaced(kk_lab + 1, 0.0, t_total);
  lab.values = RMat(kk_lab, m);
  const double dt_lab = t_total / kk_lab;
  for (int k = 0; k < kk_lab; ++k) {
    const double t = lab.grid(k) + 0.5 * dt_lab;
    const int k_env = std::min(static_cast<int>(t / envelope.dt()), kk - 1);
    for (int c = 0; c < m; ++c) {
      const double env = envelope.values(k_env, c);
      lab.values(k, c) = frame.trivial ? env : 2.0 * env * std::cos(frame.carrier(c) * t);
    }
  }
  return lab;
}

}  // namespace qcl
