#include "qcl/flows.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "qcl/tracking.hpp"

namespace qcl {

namespace {

using Rhs = std::function<Mat(const Mat&)>;

Mat rk4_step(const Mat& u, double ds, const Rhs& rhs) {
  Mat k1 = rhs(u);
  Mat k2 = rhs(Mat(u + 0.5 * ds * k1));
  Mat k3 = rhs(Mat(u + 0.5 * ds * k2));
  Mat k4 = rhs(Mat(u + ds * k3));
  return polar_unitary(Mat(u + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)));
}

// Shared adaptive driver: RK4 substeps between requested nodes, halving the
// local step whenever monotonicity is violated beyond slack.
UnitaryFlowResult run_flow(const Mat& u0, double s_max, int steps, double max_ds,
                           const Rhs& rhs, const std::function<double(const Mat&)>& value,
                           const std::function<double(const Mat&)>& grad_norm,
                           double orientation) {
  const int n = static_cast<int>(u0.rows());
  if (!is_unitary(u0, 1e-9 * n)) throw InvalidInput("unitary flow: u0 not unitary");
  if (steps < 1 || s_max <= 0.0) throw InvalidInput("unitary flow: bad s range");

  UnitaryFlowResult out;
  out.s = RVec::LinSpaced(steps + 1, 0.0, s_max);
  out.values = RVec(steps + 1);
  out.grad_norms = RVec(steps + 1);
  out.unitaries.reserve(steps + 1);

  Mat u = u0;
  out.unitaries.push_back(u);
  out.values(0) = value(u);
  out.grad_norms(0) = grad_norm(u);

  constexpr double kSlack = 1e-9;
  for (int j = 0; j < steps; ++j) {
    double target = out.s(j + 1);
    double s = out.s(j);
    while (s < target - 1e-15 * s_max) {
      double ds = std::min(max_ds, target - s);
      for (;;) {
        Mat trial = rk4_step(u, ds, rhs);
        if (orientation * (value(trial) - value(u)) >= -kSlack) {
          u = trial;
          s += ds;
          break;
        }
        ds *= 0.5;
        if (ds < 1e-12)
          throw FlowStepError("unitary flow: monotonicity violated at the step floor; halve max_ds");
      }
    }
    out.unitaries.push_back(u);
    out.values(j + 1) = value(u);
    out.grad_norms(j + 1) = grad_norm(u);
  }
  return out;
}

}  // namespace

UnitaryFlowResult unitary_flow_observable(const Mat& u0, const ObservableSpec& spec,
                                          double s_max, int steps, double max_ds) {
  spec.validate();
  Rhs rhs = [&spec](const Mat& u) -> Mat {
    Mat theta_back = u.adjoint() * spec.theta * u;
    Mat comm = spec.rho0 * theta_back - theta_back * spec.rho0;
    return Mat(-u * comm);
  };
  auto value = [&spec](const Mat& u) { return observable_expectation(u, spec); };
  auto gnorm = [&spec](const Mat& u) {
    Mat theta_back = u.adjoint() * spec.theta * u;
    return (spec.rho0 * theta_back - theta_back * spec.rho0).norm();
  };
  return run_flow(u0, s_max, steps, max_ds, rhs, value, gnorm, +1.0);
}

UnitaryFlowResult unitary_flow_gate(const Mat& u0, const GateSpec& spec,
                                    double s_max, int steps, double max_ds) {
  spec.validate();
  Rhs rhs = [&spec](const Mat& u) -> Mat { return Mat(spec.w - u * spec.w.adjoint() * u); };
  auto value = [&spec](const Mat& u) { return gate_distance(u, spec); };
  auto gnorm = [&spec](const Mat& u) { return (spec.w - u * spec.w.adjoint() * u).norm(); };
  return run_flow(u0, s_max, steps, max_ds, rhs, value, gnorm, -1.0);
}

FlowPopulations gradient_flow_populations(const Vec& c0, const RVec& theta_eigs, double s) {
  const int n = static_cast<int>(c0.size());
  if (theta_eigs.size() != n) throw InvalidInput("gradient_flow_populations: size mismatch");
  if (std::abs(c0.norm() - 1.0) > 1e-9) throw InvalidInput("gradient_flow_populations: c0 not normalized");

  const double lam_max = theta_eigs.maxCoeff();
  FlowPopulations out;
  out.x = RVec(n);
  double z = 0.0;
  double top_weight = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::norm(c0(i)) * std::exp(2.0 * s * (theta_eigs(i) - lam_max));
    out.x(i) = w;
    z += w;
    if (lam_max - theta_eigs(i) < 1e-12 * std::max(1.0, std::abs(lam_max)))
      top_weight += std::norm(c0(i));
  }
  out.x /= z;
  out.saddle_limited = top_weight < 1e-14;
  return out;
}

Mat gate_flow_closed_form(const Mat& u0, const Mat& w, double s) {
  const int n = static_cast<int>(u0.rows());
  if (!is_unitary(u0, 1e-9 * n) || !is_unitary(w, 1e-9 * n))
    throw InvalidInput("gate_flow_closed_form: inputs must be unitary");
  Mat v0 = w.adjoint() * u0;
  // Diagonalize the unitary v0 via its Schur form, flow each eigenphase by
  // the Moebius map (tanh s + v)/(1 + tanh s v).
  Eigen::ComplexSchur<Mat> schur(v0);
  const Mat& q = schur.matrixU();
  const double t = std::tanh(s);
  Vec flowed(n);
  for (int i = 0; i < n; ++i) {
    const cxd v = schur.matrixT()(i, i);
    const cxd denom = 1.0 + t * v;
    if (std::abs(denom) < 1e-12)
      throw FlowStepError("gate_flow_closed_form: singular resolvent (eigenvalue at -coth s)");
    flowed(i) = (t + v) / denom;
  }
  Mat vs = q * flowed.asDiagonal() * q.adjoint();
  return polar_unitary(Mat(w * vs));
}

double observable_flow_time_bound(const ConvergenceBoundInputs& in) {
  if (in.n <= 0 || in.k <= 0 || in.lambda_list.size() < in.k + 1)
    throw InvalidInput("observable_flow_time_bound: bad inputs");
  if (!(in.mu_gap > 0.0) || !(in.eps > 0.0 && in.eps < 1.0))
    throw BoundInapplicableError("observable_flow_time_bound: need mu_gap > 0 and eps in (0,1)");
  if (in.n - in.k - 2 <= 0)
    throw BoundInapplicableError("observable_flow_time_bound: N - k - 2 must be positive");
  const double lam_next = in.lambda_list(in.k);  // largest sub-leading eigenvalue
  const double lam_top = in.lambda_list(0);
  const double arg = (in.n - in.k - 2) * lam_next / (in.k * (lam_top - lam_next));
  if (!(arg > 0.0))
    throw BoundInapplicableError("observable_flow_time_bound: log argument not positive");
  return (std::log(2.0 * in.n * in.k / (in.eps * in.eps)) + 2.0 * std::log(arg)) / (2.0 * in.mu_gap);
}

double gate_flow_time_bound(const ConvergenceBoundInputs& in) {
  if (in.n <= 0 || !(in.eps > 0.0)) throw InvalidInput("gate_flow_time_bound: bad inputs");
  if (!(in.theta0 > 0.0 && in.theta0 < M_PI))
    throw BoundInapplicableError("gate_flow_time_bound: theta0 must lie in (0, pi)");
  const double a = std::sin(in.theta0) / (1.0 - std::cos(in.theta0));
  return 0.5 * std::log(4.0 * in.n / (a * a * in.eps));
}

namespace {

struct PenalizedObjective {
  const ControlSystem& system;
  const Objective& objective;
  const PenaltySpec& penalty;
  double sense;  // +1 maximize (observable), -1 minimize -> maximize -J (gate)

  double value(const ControlField& field) const {
    return sense * total_cost(system, field, objective, penalty);
  }
  // gradient of the sensed objective per unit time
  RMat gradient(const Trajectory& traj) const {
    RMat g;
    if (std::holds_alternative<ObservableSpec>(objective))
      g = observable_field_gradient(traj, std::get<ObservableSpec>(objective)).values;
    else
      g = gate_field_gradient(traj, std::get<GateSpec>(objective)).values;
    // d/deps of lambda * eps^2 / S enters with the cost's own sign
    RMat pen = 2.0 * penalty.lambda * traj.field.values;
    if (penalty.shape)
      for (int k = 0; k < pen.rows(); ++k) pen.row(k) /= (*penalty.shape)(k);
    if (std::holds_alternative<ObservableSpec>(objective)) return sense * (g - pen);
    return sense * (g + pen);
  }
};

}  // namespace

FieldSearchResult optimize_field(const ControlSystem& system, const ControlField& field0,
                                 const Objective& objective, const PenaltySpec& penalty,
                                 const OptimizeOptions& opts) {
  const double sense = std::holds_alternative<ObservableSpec>(objective) ? +1.0 : -1.0;
  PenalizedObjective f{system, objective, penalty, sense};

  FieldSearchResult res;
  res.field = field0;
  std::vector<double> values, gnorms;

  double current = f.value(res.field);
  double step = opts.step0;
  const double dt = field0.dt();

  int it = 0;
  for (; it < opts.max_steps; ++it) {
    Trajectory traj = propagate(system, res.field);
    RMat g = f.gradient(traj);
    const double gmax = g.cwiseAbs().maxCoeff();
    values.push_back(sense * current);
    gnorms.push_back(gmax);
    if (gmax < opts.grad_tol) {
      res.converged = true;
      break;
    }
    if (opts.stop_at_value && sense * current >= sense * *opts.stop_at_value &&
        std::holds_alternative<ObservableSpec>(objective)) {
      res.converged = true;
      break;
    }
    if (opts.stop_at_value && std::holds_alternative<GateSpec>(objective) &&
        -current <= *opts.stop_at_value) {
      res.converged = true;
      break;
    }

    const double slope = g.squaredNorm() * dt;  // <g, g> under the Riemann inner product
    bool accepted = false;
    while (step >= opts.step_floor) {
      ControlField trial = res.field;
      trial.values += step * g;
      const double trial_value = f.value(trial);
      if (trial_value >= current + opts.armijo * step * slope) {
        res.field = std::move(trial);
        current = trial_value;
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.stalled = true;
      break;
    }
  }

  res.iterations = it;
  res.values = Eigen::Map<RVec>(values.data(), values.size());
  res.grad_norms = Eigen::Map<RVec>(gnorms.data(), gnorms.size());
  res.penalized_value = sense * current;
  Trajectory traj = propagate(system, res.field);
  if (std::holds_alternative<ObservableSpec>(objective))
    res.objective = observable_expectation(traj.final_unitary(), std::get<ObservableSpec>(objective));
  else
    res.objective = gate_distance(traj.final_unitary(), std::get<GateSpec>(objective));
  return res;
}

int gradient_subspace_dimension(const std::vector<int>& rho_multiplicities, int n_dim) {
  int n_support = 0;
  int sum_sq = 0;
  for (int m : rho_multiplicities) {
    if (m <= 0) throw InvalidInput("gradient_subspace_dimension: multiplicities must be positive");
    n_support += m;
    sum_sq += m * m;
  }
  if (n_support > n_dim) throw InvalidInput("gradient_subspace_dimension: support exceeds dimension");
  return n_support * (2 * n_dim - n_support) - sum_sq;
}

RMat kinematic_projection_matrix(const Trajectory& traj) {
  return correlation_matrix(traj).g;
}

}  // namespace qcl
