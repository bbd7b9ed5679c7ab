#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qcl/linalg.hpp"

namespace qcl {

// Dimension/shape violations and invalid inputs.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Drift Hamiltonian, dipole coupling operators and the control horizon.
// Dynamics follow H(t) = h0 - sum_c mu_c * eps_c(t), hbar = 1.
struct ControlSystem {
  int dim = 0;
  Mat h0;
  std::vector<Mat> dipoles;
  double horizon = 0.0;

  int channels() const { return static_cast<int>(dipoles.size()); }
  void validate() const;
};

// Piecewise-constant multi-channel field on a uniform grid of K intervals.
// values(k, c) holds the channel-c amplitude on [t_k, t_{k+1}); an optional
// strictly positive envelope shape(k) weights penalty and homotopy terms.
struct ControlField {
  RVec grid;          // K+1 nodes, uniform
  RMat values;        // K x m
  std::optional<RVec> shape;

  int steps() const { return static_cast<int>(values.rows()); }
  int channels() const { return static_cast<int>(values.cols()); }
  double dt() const { return grid(1) - grid(0); }
  double duration() const { return grid(grid.size() - 1) - grid(0); }
  double fluence(double dt_weight = 1.0) const;
  void validate() const;

  static ControlField constant(double horizon, int steps, const RVec& amplitudes);
  static ControlField zero(double horizon, int steps, int channels);
  // Samples a smooth function at interval midpoints (second-order accurate
  // against the continuum dynamics).
  static ControlField sampled(double horizon, int steps,
                              const std::function<RVec(double)>& f, int channels);
};

struct UnitaryPropagator {
  Mat matrix;
  double time = 0.0;
};

// Propagators at every grid node plus cached per-interval eigensystems of
// H_k (reused by gradient/Hessian assembly).
struct Trajectory {
  ControlSystem system;
  ControlField field;
  std::vector<Mat> propagators;     // K+1, propagators[0] = I
  std::vector<HermitianEig> steps;  // K interval Hamiltonian eigensystems

  int dim() const { return system.dim; }
  int step_count() const { return field.steps(); }
  double dt() const { return field.dt(); }
  const Mat& final_unitary() const { return propagators.back(); }
  UnitaryPropagator at(int k) const { return {propagators[k], field.grid(k)}; }
};

// U(t_{k+1}) = exp(-i H_k dt) U(t_k), H_k = h0 - sum_c mu_c values(k,c).
Trajectory propagate(const ControlSystem& system, const ControlField& field);

// Interaction-picture dipole U^(t_k) mu_c U(t_k) at a grid node.
Mat interaction_dipole(const Trajectory& traj, int channel, int k);

// Exact effective generator of the discrete propagation map: the Hermitian
// m with U(T)^ dU(T)/dh = i dt m for the perturbation H_k -> H_k + h V on
// interval k. For V = -mu_c this is the discrete counterpart of the
// interaction dipole (its interval average when H_k is constant), and it is
// what makes field gradients exact rather than O(dt^2) approximations.
Mat effective_generator(const Trajectory& traj, int k, const Mat& v);

// Channel version, V = -mu_c (so m -> U^ mu U as dt -> 0).
Mat effective_dipole(const Trajectory& traj, int k, int channel);

// U(t_{k+1})^ * d2/dh2 exp(-i (H_k + hV) dt) * U(t_k); second-order partner
// of effective_generator, used for Hessian diagonals.
Mat effective_generator_second(const Trajectory& traj, int k, const Mat& v1, const Mat& v2);

Mat principal_log_unitary(const Mat& u, double branch_tol = 1e-9);

// Endpoint-correct geodesic u0 * exp(s log(u0^ w)).
Mat geodesic_point(const Mat& u0, const Mat& w, double s);

}  // namespace qcl
