#pragma once

#include <functional>

#include "qcl/objectives.hpp"

namespace qcl {

// Gram matrix of the packed field->propagator responses over [0, T]; its
// invertibility governs unitary tracking solvability. Real symmetric PSD,
// N^2 x N^2, channel contributions summed.
struct CorrelationMatrix {
  RMat g;
  double condition = 0.0;
};

CorrelationMatrix correlation_matrix(const Trajectory& traj);

enum class TrackKind { unitary_path, geodesic };
enum class TrackStatus { ok, condition_abort, divergence, branch_abort };

struct TrackSpec {
  TrackKind kind = TrackKind::geodesic;
  Mat w;                                 // geodesic target
  std::function<Mat(double)> u_path;     // explicit track when kind == unitary_path
  double tolerance = 1e-3;
  double ridge = 0.0;                    // Tikhonov term added to G
  double condition_cap = 1e8;
  std::function<RMat(double, const ControlField&)> free_fn;  // optional f_s
};

struct UnitaryTrackResult {
  RVec s;
  RVec residual;   // ||U(s; field) - U_track(s)||_F per step
  RVec condition;  // cond(G) per step
  RVec fluence;
  ControlField field;
  Mat final_unitary;
  TrackStatus status = TrackStatus::ok;
  double fail_s = -1.0;
};

// Follows a path in U(N) by solving (G + ridge I) x = pack(Delta) - alpha each
// step and moving the field along x^ pack(m(t)) plus the free function.
UnitaryTrackResult track_unitary(const ControlSystem& system, const ControlField& field0,
                                 const TrackSpec& spec, int s_steps);

// Observable values along the endpoint-correct geodesic from u0 to w.
RVec geodesic_observable_track(const Mat& u0, const Mat& w, const ObservableSpec& spec,
                               const RVec& s_grid);

// Scalar tracks for several observables along one unitary path; column i is
// the track of observables[i].
RMat multi_observable_tracks(const Mat& u0, const Mat& w, const std::vector<Mat>& observables,
                             const Mat& rho0, const RVec& s_grid);

// Rank of the stacked per-observable gradient functions at the trajectory's
// endpoint (SVD with a relative threshold).
int observable_constraint_rank(const Trajectory& traj, const Mat& rho0,
                               const std::vector<Mat>& observables, double rel_tol = 1e-8);

struct MeasurementRecord {
  std::vector<Mat> povm;
  std::vector<std::int64_t> counts;
  std::int64_t n_total = 0;
};

MeasurementRecord simulate_measurements(const Mat& rho, const std::vector<Mat>& povm,
                                        std::int64_t n, std::uint64_t seed);

struct MleOptions {
  int max_iters = 5000;
  double tol = 1e-13;
};

struct MleResult {
  Mat rho;  // PSD, unit trace by construction
  bool converged = false;
  bool informationally_complete = false;
  double loglik = 0.0;
  RVec loglik_history;
};

// Maximum-likelihood state estimate via a damped R rho R fixed-point
// iteration with a monotone-likelihood acceptance rule.
MleResult mle_reconstruct(const MeasurementRecord& record, const MleOptions& opts = {});

double loglikelihood(const Mat& rho, const MeasurementRecord& record);

}  // namespace qcl
