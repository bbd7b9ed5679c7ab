#include "qcl/system.hpp"

#include <cmath>

namespace qcl {

void ControlSystem::validate() const {
  if (dim < 2) throw InvalidInput("ControlSystem: dim must be >= 2");
  if (horizon <= 0.0) throw InvalidInput("ControlSystem: horizon must be positive");
  if (dipoles.empty()) throw InvalidInput("ControlSystem: at least one dipole required");
  if (h0.rows() != dim || h0.cols() != dim) throw InvalidInput("ControlSystem: h0 shape mismatch");
  if (!is_hermitian(h0, 1e-12 * std::max(1.0, h0.norm())))
    throw InvalidInput("ControlSystem: h0 not Hermitian");
  for (const Mat& mu : dipoles) {
    if (mu.rows() != dim || mu.cols() != dim) throw InvalidInput("ControlSystem: dipole shape mismatch");
    if (!is_hermitian(mu, 1e-12 * std::max(1.0, mu.norm())))
      throw InvalidInput("ControlSystem: dipole not Hermitian");
  }
}

void ControlField::validate() const {
  const int k = steps();
  if (k < 2) throw InvalidInput("ControlField: need at least 2 intervals");
  if (grid.size() != k + 1) throw InvalidInput("ControlField: grid/value size mismatch");
  const double step = dt();
  for (int i = 0; i + 1 < grid.size(); ++i)
    if (std::abs((grid(i + 1) - grid(i)) - step) > 1e-9 * std::max(1.0, std::abs(step)))
      throw InvalidInput("ControlField: grid not uniform");
  if (!values.allFinite()) throw InvalidInput("ControlField: non-finite field values");
  if (shape) {
    if (shape->size() != k) throw InvalidInput("ControlField: shape size mismatch");
    if ((shape->array() <= 0.0).any()) throw InvalidInput("ControlField: shape must be strictly positive");
  }
}

double ControlField::fluence(double) const {
  return values.squaredNorm() * dt();
}

ControlField ControlField::constant(double horizon, int steps, const RVec& amplitudes) {
  ControlField f;
  f.grid = RVec::LinSpaced(steps + 1, 0.0, horizon);
  f.values = RMat(steps, amplitudes.size());
  for (int k = 0; k < steps; ++k) f.values.row(k) = amplitudes.transpose();
  return f;
}

ControlField ControlField::zero(double horizon, int steps, int channels) {
  return constant(horizon, steps, RVec::Zero(channels));
}

ControlField ControlField::sampled(double horizon, int steps,
                                   const std::function<RVec(double)>& f, int channels) {
  ControlField field;
  field.grid = RVec::LinSpaced(steps + 1, 0.0, horizon);
  field.values = RMat(steps, channels);
  const double dt = horizon / steps;
  for (int k = 0; k < steps; ++k) {
    RVec v = f(field.grid(k) + 0.5 * dt);
    if (v.size() != channels) throw InvalidInput("ControlField::sampled: channel mismatch");
    field.values.row(k) = v.transpose();
  }
  return field;
}

Trajectory propagate(const ControlSystem& system, const ControlField& field) {
  system.validate();
  field.validate();
  if (field.channels() != system.channels())
    throw InvalidInput("propagate: field channels do not match dipole count");
  if (std::abs(field.duration() - system.horizon) > 1e-9 * std::max(1.0, system.horizon))
    throw InvalidInput("propagate: field grid does not span [0, horizon]");

  const int n = system.dim;
  const int kk = field.steps();
  const double dt = field.dt();

  Trajectory traj;
  traj.system = system;
  traj.field = field;
  traj.propagators.reserve(kk + 1);
  traj.steps.reserve(kk);
  traj.propagators.push_back(Mat::Identity(n, n));

  for (int k = 0; k < kk; ++k) {
    Mat h = system.h0;
    for (int c = 0; c < system.channels(); ++c) h -= system.dipoles[c] * field.values(k, c);
    HermitianEig eig = eig_hermitian(h);
    Mat u_step = expm_i_hermitian(eig, dt);
    traj.propagators.push_back(u_step * traj.propagators.back());
    traj.steps.push_back(std::move(eig));
  }
  return traj;
}

Mat interaction_dipole(const Trajectory& traj, int channel, int k) {
  if (channel < 0 || channel >= traj.system.channels())
    throw InvalidInput("interaction_dipole: channel out of range");
  if (k < 0 || k >= static_cast<int>(traj.propagators.size()))
    throw InvalidInput("interaction_dipole: grid index out of range");
  const Mat& u = traj.propagators[k];
  return u.adjoint() * traj.system.dipoles[channel] * u;
}

Mat effective_generator(const Trajectory& traj, int k, const Mat& v) {
  const double dt = traj.dt();
  Mat d = dexp_i_hermitian(traj.steps[k], v, dt);
  // U(T)^ dU/dh = U(t_k+1)^ D U(t_k); return the Hermitian m = -i/dt * that.
  Mat m = cxd(0.0, -1.0 / dt) * traj.propagators[k + 1].adjoint() * d * traj.propagators[k];
  return 0.5 * (m + m.adjoint().eval());
}

Mat effective_dipole(const Trajectory& traj, int k, int channel) {
  return effective_generator(traj, k, Mat(-traj.system.dipoles[channel]));
}

Mat effective_generator_second(const Trajectory& traj, int k, const Mat& v1, const Mat& v2) {
  Mat d2 = d2exp_i_hermitian(traj.steps[k], v1, v2, traj.dt());
  return traj.propagators[k + 1].adjoint() * d2 * traj.propagators[k];
}

Mat principal_log_unitary(const Mat& u, double branch_tol) {
  const int n = static_cast<int>(u.rows());
  if (!is_unitary(u, 1e-9 * n)) throw InvalidInput("principal_log_unitary: input not unitary");
  return unitary_log_principal(u, branch_tol);
}

Mat geodesic_point(const Mat& u0, const Mat& w, double s) {
  const int n = static_cast<int>(u0.rows());
  if (!is_unitary(u0, 1e-9 * n) || !is_unitary(w, 1e-9 * n))
    throw InvalidInput("geodesic_point: endpoints must be unitary");
  Mat a = unitary_log_principal(Mat(u0.adjoint() * w));
  return u0 * expm_skew(Mat(s * a));
}

}  // namespace qcl
