#pragma once

#include "qcl/objectives.hpp"

namespace qcl {

struct FlowStepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BoundInapplicableError : std::domain_error {
  using std::domain_error::domain_error;
};

// Kinematic flow on U(N), sampled at the requested nodes.
struct UnitaryFlowResult {
  RVec s;
  std::vector<Mat> unitaries;
  RVec values;
  RVec grad_norms;
};

// Gradient flow dU/ds = -U [rho0, U^ theta U]; ascends the expectation value.
UnitaryFlowResult unitary_flow_observable(const Mat& u0, const ObservableSpec& spec,
                                          double s_max, int steps, double max_ds = 0.01);

// Gradient flow dU/ds = W - U W^ U; descends the gate distance.
UnitaryFlowResult unitary_flow_gate(const Mat& u0, const GateSpec& spec,
                                    double s_max, int steps, double max_ds = 0.01);

struct FlowPopulations {
  RVec x;
  bool saddle_limited = false;  // no overlap with any top eigenvector
};

// Closed-form populations of the observable flow for a pure initial state,
// expressed in the eigenbasis of theta:
// x_i(s) = |c_i(0)|^2 e^(2 s lambda_i) / sum_j |c_j(0)|^2 e^(2 s lambda_j).
FlowPopulations gradient_flow_populations(const Vec& c0, const RVec& theta_eigs, double s);

// Closed-form gate flow. Returns U(s) with
// W^ U(s) = (sinh s + cosh s W^ U0)(cosh s + sinh s W^ U0)^{-1}.
Mat gate_flow_closed_form(const Mat& u0, const Mat& w, double s);

struct ConvergenceBoundInputs {
  int n = 0;             // Hilbert space dimension
  int k = 1;             // degeneracy of the largest theta eigenvalue
  double mu_gap = 0.0;   // gap between the two largest distinct eigenvalues
  double eps = 0.0;      // target ball radius
  double theta0 = 0.0;   // largest initial eigenphase of W^ U0 (gate flow)
  RVec lambda_list;      // theta spectrum, descending
};

// (1/2mu) [ ln(2 N k / eps^2) + 2 ln((N-k-2) lambda_{k+1} / (k (lambda_1 - lambda_{k+1}))) ]
double observable_flow_time_bound(const ConvergenceBoundInputs& in);
// (1/2) ln(4N / (a^2 eps)), a = sin(theta0) / (1 - cos(theta0))
double gate_flow_time_bound(const ConvergenceBoundInputs& in);

struct OptimizeOptions {
  int max_steps = 2000;
  double grad_tol = 1e-6;
  double step0 = 0.2;
  double armijo = 1e-4;
  double step_floor = 1e-14;
  std::optional<double> stop_at_value;  // early stop once the objective crosses this
};

struct FieldSearchResult {
  ControlField field;
  RVec values;      // objective (with penalty) per accepted iterate
  RVec grad_norms;  // sup norm of the (penalized) gradient
  bool converged = false;
  bool stalled = false;  // line search hit the floor
  int iterations = 0;
  double objective = 0.0;        // raw Phi at the final field
  double penalized_value = 0.0;  // J including the fluence penalty
};

// First-order search on the field with backtracking line search. Ascends
// J = Phi1 - lambda P for observable targets, descends J = Phi2 + lambda P
// for gate targets.
FieldSearchResult optimize_field(const ControlSystem& system, const ControlField& field0,
                                 const Objective& objective, const PenaltySpec& penalty,
                                 const OptimizeOptions& opts = {});

// n (2N - n) - sum_i n_i^2 with n = sum of the rank-support multiplicities.
int gradient_subspace_dimension(const std::vector<int>& rho_multiplicities, int n_dim);

// Gram matrix of the field->propagator response over [0, T]; identical to
// the tracking correlation matrix (shared assembly).
RMat kinematic_projection_matrix(const Trajectory& traj);

}  // namespace qcl
