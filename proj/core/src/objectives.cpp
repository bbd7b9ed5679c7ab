#include "qcl/objectives.hpp"

#include <cmath>

namespace qcl {

void ObservableSpec::validate() const {
  const int n = static_cast<int>(rho0.rows());
  if (rho0.cols() != n || theta.rows() != n || theta.cols() != n)
    throw InvalidInput("ObservableSpec: shape mismatch");
  if (!is_hermitian(rho0, 1e-10) || !is_hermitian(theta, 1e-10 * std::max(1.0, theta.norm())))
    throw InvalidInput("ObservableSpec: matrices must be Hermitian");
  if (std::abs(rho0.trace().real() - 1.0) > 1e-10)
    throw InvalidInput("ObservableSpec: rho0 must have unit trace");
  HermitianEig eig = eig_hermitian(rho0);
  if (eig.values.minCoeff() < -1e-12)
    throw InvalidInput("ObservableSpec: rho0 must be positive semidefinite");
}

void GateSpec::validate() const {
  const int n = static_cast<int>(w.rows());
  if (w.cols() != n) throw InvalidInput("GateSpec: target must be square");
  if (!is_unitary(w, 1e-10 * n)) throw InvalidInput("GateSpec: target must be unitary");
}

double observable_expectation(const Mat& u, const ObservableSpec& spec) {
  if (u.rows() != spec.rho0.rows()) throw InvalidInput("observable_expectation: dimension mismatch");
  const cxd val = (u * spec.rho0 * u.adjoint() * spec.theta).trace();
  if (std::abs(val.imag()) > 1e-10 * std::max(1.0, std::abs(val.real())) + 1e-10)
    throw std::runtime_error("observable_expectation: non-real value");
  return val.real();
}

double gate_distance(const Mat& u, const GateSpec& spec) {
  if (u.rows() != spec.w.rows()) throw InvalidInput("gate_distance: dimension mismatch");
  const int n = static_cast<int>(u.rows());
  return 2.0 * n - 2.0 * (spec.w.adjoint() * u).trace().real();
}

double fluence_penalty(const ControlField& field, const PenaltySpec& penalty) {
  if (penalty.lambda < 0.0) throw InvalidInput("PenaltySpec: lambda must be nonnegative");
  const double dt = field.dt();
  double acc = 0.0;
  for (int k = 0; k < field.steps(); ++k) {
    double s = 1.0;
    if (penalty.shape) {
      s = (*penalty.shape)(k);
      if (s <= 0.0) throw InvalidInput("PenaltySpec: shape must be strictly positive");
    }
    acc += field.values.row(k).squaredNorm() / s * dt;
  }
  return penalty.lambda * acc;
}

double total_cost(const ControlSystem& system, const ControlField& field,
                  const Objective& objective, const PenaltySpec& penalty) {
  Trajectory traj = propagate(system, field);
  const double pen = fluence_penalty(field, penalty);
  if (std::holds_alternative<ObservableSpec>(objective))
    return observable_expectation(traj.final_unitary(), std::get<ObservableSpec>(objective)) - pen;
  return gate_distance(traj.final_unitary(), std::get<GateSpec>(objective)) + pen;
}

Mat observable_kinematic_operator(const Mat& u, const ObservableSpec& spec) {
  Mat theta_back = u.adjoint() * spec.theta * u;
  Mat comm = theta_back * spec.rho0 - spec.rho0 * theta_back;
  return Mat(-kI * comm);
}

Mat gate_kinematic_operator(const Mat& u, const GateSpec& spec) {
  Mat a = spec.w.adjoint() * u;
  return Mat(-kI * (a - a.adjoint().eval()));
}

namespace {

// Common gradient loop: g(k,c) = <pack(m_kc), pack(op)> with op Hermitian.
RMat gradient_against_operator(const Trajectory& traj, const Mat& op) {
  const int kk = traj.step_count();
  const int m = traj.system.channels();
  RMat g(kk, m);
  for (int k = 0; k < kk; ++k)
    for (int c = 0; c < m; ++c) {
      Mat mu_eff = effective_dipole(traj, k, c);
      g(k, c) = (mu_eff * op).trace().real();
    }
  return g;
}

}  // namespace

FieldGradient observable_field_gradient(const Trajectory& traj, const ObservableSpec& spec) {
  spec.validate();
  if (spec.rho0.rows() != traj.dim()) throw InvalidInput("observable_field_gradient: dimension mismatch");
  Mat op = observable_kinematic_operator(traj.final_unitary(), spec);
  return {gradient_against_operator(traj, op)};
}

FieldGradient observable_field_gradient_at(const Trajectory& traj, const ObservableSpec& spec,
                                           const Mat& u_final) {
  Mat op = observable_kinematic_operator(u_final, spec);
  return {gradient_against_operator(traj, op)};
}

FieldGradient gate_field_gradient(const Trajectory& traj, const GateSpec& spec) {
  spec.validate();
  if (spec.w.rows() != traj.dim()) throw InvalidInput("gate_field_gradient: dimension mismatch");
  Mat op = gate_kinematic_operator(traj.final_unitary(), spec);
  return {gradient_against_operator(traj, op)};
}

namespace {

struct HessianWork {
  std::vector<Mat> m;  // effective dipoles, index k*channels + c
  int kk, channels;
  double dt;
};

HessianWork hessian_prepare(const Trajectory& traj) {
  HessianWork w;
  w.kk = traj.step_count();
  w.channels = traj.system.channels();
  w.dt = traj.dt();
  w.m.reserve(w.kk * w.channels);
  for (int k = 0; k < w.kk; ++k)
    for (int c = 0; c < w.channels; ++c) w.m.push_back(effective_dipole(traj, k, c));
  return w;
}

}  // namespace

RMat observable_field_hessian(const Trajectory& traj, const ObservableSpec& spec) {
  spec.validate();
  HessianWork w = hessian_prepare(traj);
  const Mat& u = traj.final_unitary();
  Mat theta_back = u.adjoint() * spec.theta * u;
  Mat rho_theta = spec.rho0 * theta_back;  // A
  const double dt2 = w.dt * w.dt;
  const int dim = w.kk * w.channels;
  RMat h(dim, dim);

  // Cross blocks, later interval acts on the left: U^ d2U = -dt^2 m_a m_b.
  for (int a = 0; a < dim; ++a) {
    const int ka = a / w.channels;
    for (int b = 0; b <= a; ++b) {
      const int kb = b / w.channels;
      double entry;
      if (ka == kb) {
        const int ca = a % w.channels, cb = b % w.channels;
        Mat q = effective_generator_second(traj, ka, Mat(-traj.system.dipoles[ca]),
                                           Mat(-traj.system.dipoles[cb]));
        entry = 2.0 * ((q * rho_theta).trace().real() +
                       dt2 * (w.m[a] * spec.rho0 * w.m[b] * theta_back).trace().real());
      } else {
        const Mat& later = ka > kb ? w.m[a] : w.m[b];
        const Mat& earlier = ka > kb ? w.m[b] : w.m[a];
        entry = 2.0 * dt2 *
                ((later * spec.rho0 * earlier * theta_back).trace().real() -
                 (later * earlier * rho_theta).trace().real());
      }
      h(a, b) = entry;
      h(b, a) = entry;
    }
  }
  return 0.5 * (h + h.transpose().eval());
}

RMat gate_field_hessian(const Trajectory& traj, const GateSpec& spec) {
  spec.validate();
  HessianWork w = hessian_prepare(traj);
  Mat wu = spec.w.adjoint() * traj.final_unitary();
  const double dt2 = w.dt * w.dt;
  const int dim = w.kk * w.channels;
  RMat h(dim, dim);

  for (int a = 0; a < dim; ++a) {
    const int ka = a / w.channels;
    for (int b = 0; b <= a; ++b) {
      const int kb = b / w.channels;
      double entry;
      if (ka == kb) {
        const int ca = a % w.channels, cb = b % w.channels;
        Mat q = effective_generator_second(traj, ka, Mat(-traj.system.dipoles[ca]),
                                           Mat(-traj.system.dipoles[cb]));
        entry = -2.0 * (wu * q).trace().real();
      } else {
        const Mat& later = ka > kb ? w.m[a] : w.m[b];
        const Mat& earlier = ka > kb ? w.m[b] : w.m[a];
        entry = 2.0 * dt2 * (wu * later * earlier).trace().real();
      }
      h(a, b) = entry;
      h(b, a) = entry;
    }
  }
  return 0.5 * (h + h.transpose().eval());
}

double hessian_quadratic_form(const RMat& hessian, const RVec& omega) {
  if (hessian.rows() != omega.size()) throw InvalidInput("hessian_quadratic_form: shape mismatch");
  return omega.dot(hessian * omega);
}

}  // namespace qcl
