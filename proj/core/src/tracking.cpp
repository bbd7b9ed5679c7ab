#include "qcl/tracking.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "qcl/rng.hpp"

namespace qcl {

CorrelationMatrix correlation_matrix(const Trajectory& traj) {
  const int n = traj.dim();
  const int kk = traj.step_count();
  const int m = traj.system.channels();
  const double dt = traj.dt();

  RMat g = RMat::Zero(n * n, n * n);
  for (int k = 0; k < kk; ++k)
    for (int c = 0; c < m; ++c) {
      RVec v = pack_hermitian(effective_dipole(traj, k, c));
      g.noalias() += dt * v * v.transpose();
    }
  g = 0.5 * (g + g.transpose().eval());

  Eigen::SelfAdjointEigenSolver<RMat> es(g);
  const RVec& ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  const double bottom = std::max(ev.minCoeff(), top * 1e-300);
  CorrelationMatrix out;
  out.g = std::move(g);
  out.condition = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
  return out;
}

UnitaryTrackResult track_unitary(const ControlSystem& system, const ControlField& field0,
                                 const TrackSpec& spec, int s_steps) {
  if (s_steps < 1) throw InvalidInput("track_unitary: s_steps must be positive");
  const int n = system.dim;

  Trajectory traj = propagate(system, field0);
  std::function<Mat(double)> u_track;
  if (spec.kind == TrackKind::geodesic) {
    if (!is_unitary(spec.w, 1e-9 * n)) throw InvalidInput("track_unitary: target not unitary");
    const Mat u_start = traj.final_unitary();
    const Mat a = unitary_log_principal(Mat(u_start.adjoint() * spec.w));
    u_track = [u_start, a](double s) { return Mat(u_start * expm_skew(Mat(s * a))); };
  } else {
    if (!spec.u_path) throw InvalidInput("track_unitary: unitary_path requires u_path");
    u_track = spec.u_path;
  }
  if ((traj.final_unitary() - u_track(0.0)).norm() > std::max(spec.tolerance, 1e-9))
    throw InvalidInput("track_unitary: initial propagator off the track");

  UnitaryTrackResult out;
  out.field = field0;
  out.s = RVec::LinSpaced(s_steps + 1, 0.0, 1.0);
  out.residual = RVec::Zero(s_steps + 1);
  out.condition = RVec::Zero(s_steps + 1);
  out.fluence = RVec::Zero(s_steps + 1);

  const double ds = 1.0 / s_steps;
  const double dt = field0.dt();
  const int kk = field0.steps();
  const int m = system.channels();

  for (int j = 0; j <= s_steps; ++j) {
    const double s = out.s(j);
    const Mat u_now = traj.final_unitary();
    const double residual = (u_now - u_track(s)).norm();
    out.residual(j) = residual;
    out.fluence(j) = out.field.fluence();

    CorrelationMatrix corr = correlation_matrix(traj);
    out.condition(j) = corr.condition;

    if (residual > 10.0 * spec.tolerance) {
      out.status = TrackStatus::divergence;
      out.fail_s = s;
      break;
    }
    if (corr.condition > spec.condition_cap && spec.ridge <= 0.0) {
      out.status = TrackStatus::condition_abort;
      out.fail_s = s;
      break;
    }
    if (j == s_steps) break;

    Mat a;
    try {
      a = unitary_log_principal(Mat(u_now.adjoint() * u_track(s + ds)));
    } catch (const BranchDegenerateError&) {
      out.status = TrackStatus::branch_abort;
      out.fail_s = s;
      break;
    }
    Mat delta = Mat(-kI * a / ds);  // Hermitian target velocity

    RMat f = spec.free_fn ? spec.free_fn(s, out.field)
                          : RMat::Zero(kk, m).eval();
    RVec alpha = RVec::Zero(n * n);
    std::vector<RVec> packed;
    packed.reserve(kk * m);
    for (int k = 0; k < kk; ++k)
      for (int c = 0; c < m; ++c) {
        packed.push_back(pack_hermitian(effective_dipole(traj, k, c)));
        alpha += dt * f(k, c) * packed.back();
      }

    RMat g_reg = corr.g;
    if (spec.ridge > 0.0) g_reg += spec.ridge * RMat::Identity(n * n, n * n);
    RVec x = Eigen::LDLT<RMat>(g_reg).solve(pack_hermitian(delta) - alpha);

    for (int k = 0; k < kk; ++k)
      for (int c = 0; c < m; ++c)
        out.field.values(k, c) += ds * (f(k, c) + packed[k * m + c].dot(x));
    traj = propagate(system, out.field);
  }

  out.final_unitary = traj.final_unitary();
  return out;
}

RVec geodesic_observable_track(const Mat& u0, const Mat& w, const ObservableSpec& spec,
                               const RVec& s_grid) {
  spec.validate();
  const Mat a = unitary_log_principal(Mat(u0.adjoint() * w));
  RVec track(s_grid.size());
  for (int j = 0; j < s_grid.size(); ++j) {
    Mat u = u0 * expm_skew(Mat(s_grid(j) * a));
    track(j) = observable_expectation(u, spec);
  }
  return track;
}

RMat multi_observable_tracks(const Mat& u0, const Mat& w, const std::vector<Mat>& observables,
                             const Mat& rho0, const RVec& s_grid) {
  if (observables.empty()) throw InvalidInput("multi_observable_tracks: no observables");
  const int n = static_cast<int>(rho0.rows());
  if (static_cast<int>(observables.size()) > n * n - 1)
    throw InvalidInput("multi_observable_tracks: more observables than independent directions");

  // Gram check for linear independence.
  const int count = static_cast<int>(observables.size());
  RMat packed(n * n, count);
  for (int i = 0; i < count; ++i) packed.col(i) = pack_hermitian(observables[i]);
  Eigen::JacobiSVD<RMat> svd(packed);
  const double tol = 1e-10 * svd.singularValues().maxCoeff();
  if ((svd.singularValues().array() > tol).count() < count)
    throw InvalidInput("multi_observable_tracks: observables are linearly dependent");

  const Mat a = unitary_log_principal(Mat(u0.adjoint() * w));
  RMat tracks(s_grid.size(), count);
  for (int j = 0; j < s_grid.size(); ++j) {
    Mat u = u0 * expm_skew(Mat(s_grid(j) * a));
    Mat evolved = u * rho0 * u.adjoint();
    for (int i = 0; i < count; ++i) tracks(j, i) = (evolved * observables[i]).trace().real();
  }
  return tracks;
}

int observable_constraint_rank(const Trajectory& traj, const Mat& rho0,
                               const std::vector<Mat>& observables, double rel_tol) {
  const int kk = traj.step_count();
  const int m = traj.system.channels();
  const int count = static_cast<int>(observables.size());
  const Mat& u = traj.final_unitary();

  RMat jac(count, kk * m);
  std::vector<Mat> ops;
  ops.reserve(count);
  for (const Mat& th : observables) {
    ObservableSpec spec{rho0, th};
    ops.push_back(observable_kinematic_operator(u, spec));
  }
  for (int k = 0; k < kk; ++k)
    for (int c = 0; c < m; ++c) {
      Mat mu_eff = effective_dipole(traj, k, c);
      for (int i = 0; i < count; ++i) jac(i, k * m + c) = (mu_eff * ops[i]).trace().real();
    }
  Eigen::JacobiSVD<RMat> svd(jac);
  const double top = svd.singularValues().maxCoeff();
  if (top <= 0.0) return 0;
  return static_cast<int>((svd.singularValues().array() > rel_tol * top).count());
}

MeasurementRecord simulate_measurements(const Mat& rho, const std::vector<Mat>& povm,
                                        std::int64_t n, std::uint64_t seed) {
  if (povm.empty() || n < 1) throw InvalidInput("simulate_measurements: need effects and n >= 1");
  const int dim = static_cast<int>(rho.rows());
  Mat sum = Mat::Zero(dim, dim);
  for (const Mat& f : povm) sum += f;
  if ((sum - Mat::Identity(dim, dim)).norm() > 1e-10 * dim)
    throw InvalidInput("simulate_measurements: effects do not sum to identity");

  const int count = static_cast<int>(povm.size());
  std::vector<double> p(count);
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    double pi = (rho * povm[i]).trace().real();
    if (pi < -1e-12) throw InvalidInput("simulate_measurements: negative outcome probability");
    p[i] = std::max(pi, 0.0);
    total += p[i];
  }
  for (double& pi : p) pi /= total;

  std::vector<double> cdf(count);
  double acc = 0.0;
  for (int i = 0; i < count; ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  cdf[count - 1] = 1.0;

  MeasurementRecord rec;
  rec.povm = povm;
  rec.counts.assign(count, 0);
  rec.n_total = n;
  RandomStream rng = RandomStream(seed).fork("measurement");
  for (std::int64_t shot = 0; shot < n; ++shot) {
    const double u = rng.uniform();
    int lo = 0, hi = count - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (u < cdf[mid]) hi = mid;
      else lo = mid + 1;
    }
    rec.counts[lo] += 1;
  }
  return rec;
}

double loglikelihood(const Mat& rho, const MeasurementRecord& record) {
  double ll = 0.0;
  for (std::size_t i = 0; i < record.povm.size(); ++i) {
    if (record.counts[i] == 0) continue;
    const double p = std::max((rho * record.povm[i]).trace().real(), 1e-300);
    ll += static_cast<double>(record.counts[i]) * std::log(p);
  }
  return ll;
}

MleResult mle_reconstruct(const MeasurementRecord& record, const MleOptions& opts) {
  const int n = static_cast<int>(record.povm.front().rows());
  MleResult out;

  {  // informational completeness: packed effects must span Hermitian space
    RMat packed(n * n, record.povm.size());
    for (std::size_t i = 0; i < record.povm.size(); ++i)
      packed.col(i) = pack_hermitian(record.povm[i]);
    Eigen::JacobiSVD<RMat> svd(packed);
    const double tol = 1e-10 * svd.singularValues().maxCoeff();
    out.informationally_complete =
        (svd.singularValues().array() > tol).count() == n * n;
  }

  Mat rho = Mat::Identity(n, n) / static_cast<double>(n);
  double ll = loglikelihood(rho, record);
  std::vector<double> history{ll};

  const double n_total = static_cast<double>(record.n_total);
  for (int it = 0; it < opts.max_iters; ++it) {
    Mat r = Mat::Zero(n, n);
    for (std::size_t i = 0; i < record.povm.size(); ++i) {
      if (record.counts[i] == 0) continue;
      const double p = std::max((rho * record.povm[i]).trace().real(), 1e-300);
      r += (static_cast<double>(record.counts[i]) / (p * n_total)) * record.povm[i];
    }
    // Damped R rho R with a monotone acceptance rule.
    bool accepted = false;
    double beta = 1.0;
    for (int half = 0; half < 40; ++half) {
      Mat step = (1.0 - beta) * Mat::Identity(n, n) + beta * r;
      Mat cand = step * rho * step.adjoint();
      const double tr = cand.trace().real();
      if (tr > 0.0) {
        cand /= tr;
        const double cand_ll = loglikelihood(cand, record);
        if (cand_ll >= ll) {
          const double gain = cand_ll - ll;
          rho = 0.5 * (cand + cand.adjoint().eval());
          ll = cand_ll;
          history.push_back(ll);
          accepted = true;
          if (gain < opts.tol * (1.0 + std::abs(ll))) {
            out.converged = true;
          }
          break;
        }
      }
      beta *= 0.5;
    }
    if (!accepted || out.converged) {
      out.converged = out.converged || !accepted;  // no ascent direction left
      break;
    }
  }

  out.rho = rho;
  out.loglik = ll;
  out.loglik_history = Eigen::Map<RVec>(history.data(), history.size());
  return out;
}

}  // namespace qcl
