#pragma once

#include <variant>

#include "qcl/system.hpp"

namespace qcl {

// Initial state and target observable for expectation-value control.
struct ObservableSpec {
  Mat rho0;   // Hermitian, PSD, trace one
  Mat theta;  // Hermitian
  void validate() const;
};

// Target transformation for gate-distance control.
struct GateSpec {
  Mat w;  // unitary
  void validate() const;
};

struct PenaltySpec {
  double lambda = 0.0;
  std::optional<RVec> shape;  // strictly positive envelope, per interval
};

using Objective = std::variant<ObservableSpec, GateSpec>;

// Per-interval, per-channel samples of the functional derivative:
// dPhi = sum_k values(k,c) * deps(k,c) * dt.
struct FieldGradient {
  RMat values;  // K x m
  double max_abs() const { return values.cwiseAbs().maxCoeff(); }
};

// Tr[U rho0 U^ theta]
double observable_expectation(const Mat& u, const ObservableSpec& spec);
// 2N - 2 Re Tr[W^ U], in [0, 4N], zero iff U = W
double gate_distance(const Mat& u, const GateSpec& spec);

// J = Phi1 - lambda * integral(eps^2 / S)  (maximization form), or
// J = Phi2 + lambda * integral(eps^2 / S)  (minimization form).
double total_cost(const ControlSystem& system, const ControlField& field,
                  const Objective& objective, const PenaltySpec& penalty);
double fluence_penalty(const ControlField& field, const PenaltySpec& penalty);

// Exact derivatives of the discrete propagation map (no O(dt^2) sampling
// error), normalized per unit time.
FieldGradient observable_field_gradient(const Trajectory& traj, const ObservableSpec& spec);
FieldGradient gate_field_gradient(const Trajectory& traj, const GateSpec& spec);

// Full (K*m) x (K*m) symmetric second-derivative matrix with respect to the
// field samples; index order (k, c) -> k * m + c. Explicitly symmetrized.
RMat observable_field_hessian(const Trajectory& traj, const ObservableSpec& spec);
RMat gate_field_hessian(const Trajectory& traj, const GateSpec& spec);

// Hessian quadratic form <w|H|w>; with w the unit top eigenvector this is
// the top eigenvalue (Rayleigh identity).
double hessian_quadratic_form(const RMat& hessian, const RVec& omega);

// Hermitian operators representing dPhi/dU pulled back to t = 0:
// dPhi/deps(t) = <pack(m(t)), pack(op)>.
Mat observable_kinematic_operator(const Mat& u, const ObservableSpec& spec);
Mat gate_kinematic_operator(const Mat& u, const GateSpec& spec);

// Gradient evaluated with the endpoint replaced by an arbitrary unitary
// (used to check kinematic critical points through the field formula).
FieldGradient observable_field_gradient_at(const Trajectory& traj, const ObservableSpec& spec,
                                           const Mat& u_final);

}  // namespace qcl
