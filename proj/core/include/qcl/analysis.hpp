#pragma once

#include "qcl/objectives.hpp"

namespace qcl {

struct LieRankReport {
  int dimension_found = 0;   // on u(N), counting the free global-phase direction
  int su_dimension = 0;      // traceless part of the closure
  int ambient = 0;           // N^2
  bool controllable = false;
  int generator_depth = 0;   // commutator nesting level at closure
  bool closed = false;       // closure reached within the depth cap
};

// Rank condition: dimension of the real Lie algebra generated by
// {-i h0, -i mu_c} under commutators, Gram-Schmidt with a relative
// threshold of 1e-10.
LieRankReport lie_rank(const ControlSystem& system, int depth_cap = 16);

// The only abnormal extremal of single-control SU(2) gate control with a
// fluence cost: the constant field -Tr(h_d mu)/Tr(mu mu). Stated for the
// coupling convention H = h_d + mu eps; realizing it on a system with
// H = h_d - mu eps means negating either the dipole or the field.
double abnormal_extremal_su2(const Mat& h_d, const Mat& mu);

struct ThreeLevelOracle {
  double value = 0.0;             // 3 pi^2 / (4 T), analytic
  double shooting_fluence = 0.0;  // fluence of the integrated extremal
  double final_population = 0.0;
  bool converged = false;
  double p_theta0 = 0.0, p_phi = 0.0;  // shooting parameters (unit-time scale)
  RVec t;                               // sample times
  RMat populations;                     // samples x 3
  RMat controls;                        // samples x 2
};

// Minimal-fluence |1> -> |3> transfer through the integrable reduced sphere
// system, solved by two-parameter shooting.
ThreeLevelOracle three_level_min_fluence(double t_final, int samples = 201);

struct TrilinearResult {
  double t_star = 0.0;
  double kappa = 0.0;          // theta / (2 pi)
  double sweep_amplitude = 0.0;  // 2 pi J
  double sweep_angle = 0.0;      // total phase sweep beta = pi (kappa - 2)
  double sweep_rate = 0.0;       // beta / t_star
};

// Minimal time sqrt(kappa (4 - kappa)) / (2J) for a trilinear propagator
// with angle theta in [0, 4 pi], plus the phase-sweep parameters of the
// analytic adjoint control.
TrilinearResult trilinear_min_time(double theta, double j_coupling);

struct KrausLift {
  Mat rho_s;   // system state, N x N
  Mat rho_e;   // environment state, L x L
  Mat theta;   // system observable
  int lifted_dim = 0;  // N * L
  void validate() const;
};

struct KrausObjectiveValue {
  double lifted = 0.0;  // Tr[U (rho_s x rho_e) U^ (theta x I)]
  double kraus = 0.0;   // same value assembled from the Kraus operators
};

KrausObjectiveValue kraus_lift_objective(const KrausLift& lift, const Mat& u_lifted);

struct OpenLandscapeExtrema {
  double max = 0.0;
  double min = 0.0;
  bool enumeration_checked = false;  // cross-checked against full enumeration
};

// Sorted/anti-sorted eigenvalue pairings of rho_s x rho_e against theta x I;
// cross-checked by enumeration when the lifted dimension allows it.
OpenLandscapeExtrema open_landscape_extrema(const KrausLift& lift);

Mat kron(const Mat& a, const Mat& b);

}  // namespace qcl
