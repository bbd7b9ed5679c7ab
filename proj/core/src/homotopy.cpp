#include "qcl/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "qcl/rng.hpp"

namespace qcl {

FreeFunction make_free_function(const FreeFunctionSpec& spec) {
  switch (spec.kind) {
    case FreeFunctionKind::zero:
      return [](double, const ControlField& field) {
        return RMat::Zero(field.steps(), field.channels()).eval();
      };
    case FreeFunctionKind::fluence_min:
    case FreeFunctionKind::fluence_max: {
      const double sign = spec.kind == FreeFunctionKind::fluence_min ? -1.0 : 1.0;
      const double rate = spec.rate;
      return [sign, rate](double, const ControlField& field) {
        RMat f = sign * rate * field.values;
        if (field.shape)
          for (int k = 0; k < f.rows(); ++k) f.row(k) /= (*field.shape)(k);
        return f.eval();
      };
    }
    case FreeFunctionKind::random_null: {
      // Fixed band-limited profile; coefficients drawn once from the seed so
      // identical problems give bit-identical trajectories.
      auto coeffs = std::make_shared<std::vector<std::pair<RVec, RVec>>>();
      const int modes = std::max(1, spec.modes);
      const double amp = spec.amplitude;
      const std::uint64_t seed = spec.seed;
      return [coeffs, modes, amp, seed](double, const ControlField& field) {
        const int kk = field.steps();
        const int m = field.channels();
        if (coeffs->empty()) {
          RandomStream rng = RandomStream(seed).fork("free-function/random-null");
          for (int c = 0; c < m; ++c) {
            RVec a(modes), b(modes);
            for (int j = 0; j < modes; ++j) {
              a(j) = rng.normal();
              b(j) = rng.normal();
            }
            coeffs->emplace_back(a, b);
          }
        }
        const double t_total = field.duration();
        const double dt = field.dt();
        RMat f(kk, m);
        for (int c = 0; c < m; ++c) {
          for (int k = 0; k < kk; ++k) {
            const double t = field.grid(k) + 0.5 * dt;
            double v = 0.0;
            for (int j = 0; j < modes; ++j) {
              const double w = 2.0 * M_PI * (j + 1) * t / t_total;
              v += (*coeffs)[c].first(j) * std::cos(w) + (*coeffs)[c].second(j) * std::sin(w);
            }
            f(k, c) = amp * v;
          }
          f.col(c).array() -= f.col(c).mean();  // exact zero grid mean
        }
        return f.eval();
      };
    }
  }
  throw InvalidInput("make_free_function: unknown kind");
}

namespace {

RVec shape_or_ones(const ControlField& field) {
  if (field.shape) return *field.shape;
  return RVec::Ones(field.steps());
}

struct PathDerivatives {
  Mat dh0;
  std::vector<Mat> dmu;
};

PathDerivatives path_derivative(const HomotopyProblem& problem, double s) {
  const double h = problem.path_derivative_step;
  double lo = std::max(0.0, s - h);
  double hi = std::min(1.0, s + h);
  if (hi - lo < 1e-14) throw InvalidInput("path_derivative: degenerate parameter range");
  ControlSystem a = problem.system_path(lo);
  ControlSystem b = problem.system_path(hi);
  PathDerivatives d;
  const double inv = 1.0 / (hi - lo);
  d.dh0 = (b.h0 - a.h0) * inv;
  d.dmu.reserve(a.dipoles.size());
  for (std::size_t c = 0; c < a.dipoles.size(); ++c)
    d.dmu.push_back((b.dipoles[c] - a.dipoles[c]) * inv);
  return d;
}

double target_value(const HomotopyProblem& problem, double s, double p0) {
  return problem.mode == HomotopyMode::track ? problem.track(s) : p0;
}

}  // namespace

MorphCoefficients morph_coefficients(const HomotopyProblem& problem, double s,
                                     const ControlField& field, const Trajectory& traj) {
  ObservableSpec spec{problem.rho0, problem.theta};
  const int kk = field.steps();
  const int m = field.channels();
  const double dt = field.dt();

  MorphCoefficients co;
  co.a0 = observable_field_gradient(traj, spec).values;
  co.a1 = RMat::Zero(kk, m);
  co.a2 = RVec::Zero(kk);
  co.b = 0.0;

  PathDerivatives d = path_derivative(problem, s);
  const bool path_static = d.dh0.norm() < 1e-300 &&
      std::all_of(d.dmu.begin(), d.dmu.end(), [](const Mat& x) { return x.norm() < 1e-300; });
  if (!path_static) {
    Mat op = observable_kinematic_operator(traj.final_unitary(), spec);
    for (int k = 0; k < kk; ++k) {
      for (int c = 0; c < m; ++c)
        co.a1(k, c) = (effective_generator(traj, k, Mat(-d.dmu[c])) * op).trace().real();
      co.a2(k) = (effective_generator(traj, k, d.dh0) * op).trace().real();
    }
    double acc = 0.0;
    for (int k = 0; k < kk; ++k) {
      for (int c = 0; c < m; ++c) acc += co.a1(k, c) * field.values(k, c);
      acc += co.a2(k);
    }
    co.b = -acc * dt;
  }
  return co;
}

DmorphStepResult dmorph_step(const HomotopyProblem& problem, double s, const ControlField& field,
                             double ds, double dp_ds) {
  ControlSystem system = problem.system_path(s);
  Trajectory traj = propagate(system, field);
  MorphCoefficients co = morph_coefficients(problem, s, field, traj);
  FreeFunction f_fn = make_free_function(problem.free_fn);
  RMat f = f_fn(s, field);

  const RVec shape = shape_or_ones(field);
  const double dt = field.dt();

  double big_gamma = 0.0, gamma = 0.0, max_a0_sq = 0.0;
  for (int k = 0; k < field.steps(); ++k)
    for (int c = 0; c < field.channels(); ++c) {
      big_gamma += shape(k) * co.a0(k, c) * co.a0(k, c) * dt;
      gamma += shape(k) * co.a0(k, c) * f(k, c) * dt;
      max_a0_sq = std::max(max_a0_sq, co.a0(k, c) * co.a0(k, c));
    }

  DmorphStepResult out;
  out.gamma = gamma;
  out.big_gamma = big_gamma;
  const double gamma_min = 1e-10 * (shape.sum() * dt) * max_a0_sq;
  if (big_gamma <= gamma_min || !(big_gamma > 0.0)) {
    out.status = HomotopyStatus::gamma_abort;
    out.field = field;
    return out;
  }

  const double coef = (co.b + dp_ds - gamma) / big_gamma;
  ControlField next = field;
  for (int k = 0; k < field.steps(); ++k)
    for (int c = 0; c < field.channels(); ++c)
      next.values(k, c) += ds * shape(k) * (f(k, c) + coef * co.a0(k, c));
  out.field = std::move(next);
  return out;
}

namespace {

HomotopyTrajectory run_homotopy(const HomotopyProblem& problem, const ControlField& field0) {
  ObservableSpec spec{problem.rho0, problem.theta};
  spec.validate();

  ControlField field = field0;
  Trajectory traj = propagate(problem.system_path(0.0), field);
  const double p0 = observable_expectation(traj.final_unitary(), spec);

  if (problem.mode == HomotopyMode::track) {
    if (!problem.track) throw InvalidInput("track mode requires a target track");
    if (std::abs(problem.track(0.0) - p0) > 1e-6)
      throw InvalidInput("track mode: P(0) does not match the initial field's observable");
    HermitianEig theig = eig_hermitian(problem.theta);
    const double lo = theig.values.minCoeff(), hi = theig.values.maxCoeff();
    for (int j = 0; j <= problem.s_steps; ++j) {
      const double p = problem.track(static_cast<double>(j) / problem.s_steps);
      if (p < lo - 1e-12 || p > hi + 1e-12) {
        HomotopyTrajectory bad;
        bad.status = HomotopyStatus::infeasible_track;
        bad.fail_s = static_cast<double>(j) / problem.s_steps;
        bad.final_field = field;
        return bad;
      }
    }
  }

  std::vector<double> s_nodes{0.0}, obs{p0}, flu{field.fluence()}, drift{0.0}, trace;
  std::vector<RMat> fields{field.values};
  auto record_trace = [&](const Trajectory& t) {
    if (problem.hessian_trace_stride > 0 &&
        static_cast<int>(s_nodes.size() - 1) % problem.hessian_trace_stride == 0)
      trace.push_back(observable_field_hessian(t, spec).trace());
    else
      trace.push_back(std::numeric_limits<double>::quiet_NaN());
  };
  trace.clear();
  record_trace(traj);

  HomotopyStatus status = HomotopyStatus::ok;
  double fail_s = -1.0;
  const double ds_nominal = 1.0 / problem.s_steps;
  const double inner_tol = 0.5 * problem.tolerance;
  double s = 0.0;
  double ds = ds_nominal;

  while (s < 1.0 - 1e-12) {
    double ds_try = std::min(ds, 1.0 - s);
    bool accepted = false;
    while (!accepted) {
      const double target_next = target_value(problem, s + ds_try, p0);
      const double dp_ds = (target_next - target_value(problem, s, p0)) / ds_try;
      DmorphStepResult step = dmorph_step(problem, s, field, ds_try, dp_ds);
      if (step.status != HomotopyStatus::ok) {
        status = step.status;
        fail_s = s;
        break;
      }
      ControlSystem sys_next = problem.system_path(s + ds_try);
      Trajectory traj_next = propagate(sys_next, step.field);
      double value = observable_expectation(traj_next.final_unitary(), spec);
      double dev = std::abs(value - target_next);

      if (dev > inner_tol && problem.adaptive && ds_try > problem.ds_floor) {
        ds_try *= 0.5;
        if (ds_try <= problem.ds_floor) {
          status = HomotopyStatus::step_floor_abort;
          fail_s = s;
          break;
        }
        continue;
      }
      if (dev > 10.0 * problem.tolerance) {
        status = HomotopyStatus::divergence;
        fail_s = s;
        break;
      }

      if (problem.projection && dev > 0.02 * problem.tolerance) {
        // Newton correction along a0: d<Theta>/dc = Gamma at the new point.
        for (int iter = 0; iter < 3 && dev > 0.02 * problem.tolerance; ++iter) {
          MorphCoefficients co = morph_coefficients(problem, s + ds_try, step.field, traj_next);
          const RVec shape = shape_or_ones(step.field);
          const double dt = step.field.dt();
          double big_gamma = 0.0;
          for (int k = 0; k < step.field.steps(); ++k)
            for (int c = 0; c < step.field.channels(); ++c)
              big_gamma += shape(k) * co.a0(k, c) * co.a0(k, c) * dt;
          if (!(big_gamma > 0.0)) break;
          const double corr = (target_next - value) / big_gamma;
          for (int k = 0; k < step.field.steps(); ++k)
            for (int c = 0; c < step.field.channels(); ++c)
              step.field.values(k, c) += corr * shape(k) * co.a0(k, c);
          traj_next = propagate(sys_next, step.field);
          value = observable_expectation(traj_next.final_unitary(), spec);
          dev = std::abs(value - target_next);
        }
      }

      field = std::move(step.field);
      traj = std::move(traj_next);
      s += ds_try;
      s_nodes.push_back(s);
      obs.push_back(value);
      flu.push_back(field.fluence());
      drift.push_back(dev);
      fields.push_back(field.values);
      record_trace(traj);
      accepted = true;
      ds = std::min(ds_try * 1.26, 2.0 * ds_nominal);
    }
    if (!accepted) break;
  }

  HomotopyTrajectory out;
  const int count = static_cast<int>(s_nodes.size());
  out.s = Eigen::Map<RVec>(s_nodes.data(), count);
  out.observable = Eigen::Map<RVec>(obs.data(), count);
  out.fluence = Eigen::Map<RVec>(flu.data(), count);
  out.drift = Eigen::Map<RVec>(drift.data(), count);
  out.hessian_trace = Eigen::Map<RVec>(trace.data(), count);
  out.fields = std::move(fields);
  out.status = status;
  out.fail_s = fail_s;
  out.final_field = field;
  return out;
}

}  // namespace

HomotopyTrajectory explore_level_set(const HomotopyProblem& problem, const ControlField& field0) {
  if (problem.mode != HomotopyMode::level_set)
    throw InvalidInput("explore_level_set: problem mode must be level_set");
  return run_homotopy(problem, field0);
}

HomotopyTrajectory morph_hamiltonian(const HomotopyProblem& problem, const ControlField& field0) {
  if (problem.mode != HomotopyMode::morph)
    throw InvalidInput("morph_hamiltonian: problem mode must be morph");
  return run_homotopy(problem, field0);
}

HomotopyTrajectory track_observable(const HomotopyProblem& problem, const ControlField& field0) {
  if (problem.mode != HomotopyMode::track)
    throw InvalidInput("track_observable: problem mode must be track");
  return run_homotopy(problem, field0);
}

}  // namespace qcl
