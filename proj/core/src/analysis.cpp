#include "qcl/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "qcl/topology.hpp"

namespace qcl {

namespace {

// Incremental orthonormal basis of skew-Hermitian matrices under the real
// Frobenius inner product (packed through iA, which is Hermitian).
class SkewBasis {
 public:
  explicit SkewBasis(int n) : n_(n) {}

  bool add(const Mat& skew) {
    RVec v = pack_hermitian(Mat(kI * skew));
    const double orig = v.norm();
    if (orig < 1e-14) return false;
    for (int pass = 0; pass < 2; ++pass)
      for (const RVec& b : vectors_) v -= b.dot(v) * b;
    if (v.norm() <= 1e-10 * orig) return false;
    v.normalize();
    vectors_.push_back(v);
    matrices_.push_back(Mat(-kI * unpack_hermitian(v, n_)));
    return true;
  }

  int size() const { return static_cast<int>(vectors_.size()); }
  const std::vector<Mat>& matrices() const { return matrices_; }

 private:
  int n_;
  std::vector<RVec> vectors_;
  std::vector<Mat> matrices_;
};

}  // namespace

LieRankReport lie_rank(const ControlSystem& system, int depth_cap) {
  system.validate();
  if (depth_cap < 1) throw InvalidInput("lie_rank: depth_cap must be >= 1");
  const int n = system.dim;

  SkewBasis basis(n);
  std::vector<Mat> level;
  auto push = [&](const Mat& h) {
    Mat skew = Mat(-kI * h);
    if (basis.add(skew)) level.push_back(basis.matrices().back());
  };
  push(system.h0);
  for (const Mat& mu : system.dipoles) push(mu);

  LieRankReport report;
  report.ambient = n * n;
  int depth = 0;   // nesting level of the most recent additions
  int rounds = 0;
  bool closed = false;
  while (basis.size() < n * n && rounds < depth_cap) {
    std::vector<Mat> snapshot = basis.matrices();
    std::vector<Mat> next;
    for (const Mat& a : snapshot)
      for (const Mat& b : level) {
        Mat cand = a * b - b * a;
        if (basis.add(cand)) next.push_back(basis.matrices().back());
      }
    ++rounds;
    if (next.empty()) {
      closed = true;
      break;
    }
    depth = rounds;
    level = std::move(next);
  }
  if (basis.size() == n * n) closed = true;
  report.generator_depth = depth;
  report.closed = closed;

  // traceless projection of the closure
  SkewBasis su_basis(n);
  for (const Mat& a : basis.matrices()) {
    Mat traceless = a - (a.trace() / static_cast<double>(n)) * Mat::Identity(n, n);
    su_basis.add(traceless);
  }
  report.su_dimension = su_basis.size();

  // dimension on u(N): the global phase direction costs nothing
  SkewBasis with_phase = basis;
  with_phase.add(Mat(kI * Mat::Identity(n, n)));
  report.dimension_found = with_phase.size();
  report.controllable = report.dimension_found == n * n;
  return report;
}

double abnormal_extremal_su2(const Mat& h_d, const Mat& mu) {
  if (h_d.rows() != 2 || mu.rows() != 2) throw InvalidInput("abnormal_extremal_su2: N must be 2");
  const double denom = (mu * mu).trace().real();
  if (std::abs(denom) < 1e-14) throw InvalidInput("abnormal_extremal_su2: Tr(mu mu) vanishes");
  return -(h_d * mu).trace().real() / denom;
}

namespace {

struct SphereState {
  double theta, phi, p_theta, p_phi;
};

SphereState sphere_rhs(const SphereState& y) {
  const double tn = std::tan(y.theta);
  SphereState d;
  d.theta = y.p_theta;
  d.phi = y.p_phi * tn * tn;
  d.p_theta = -y.p_phi * y.p_phi * tn * (1.0 + tn * tn);
  d.p_phi = 0.0;
  return d;
}

SphereState sphere_axpy(const SphereState& y, double h, const SphereState& d) {
  return {y.theta + h * d.theta, y.phi + h * d.phi, y.p_theta + h * d.p_theta, y.p_phi};
}

// Integrate the reduced Hamiltonian system on [0, 1]; returns false when the
// polar angle runs into the tan singularity.
bool integrate_sphere(double p_theta0, double p_phi, int steps,
                      std::vector<SphereState>* path) {
  SphereState y{0.0, 0.0, p_theta0, p_phi};
  const double h = 1.0 / steps;
  if (path) {
    path->clear();
    path->push_back(y);
  }
  for (int i = 0; i < steps; ++i) {
    SphereState k1 = sphere_rhs(y);
    SphereState k2 = sphere_rhs(sphere_axpy(y, 0.5 * h, k1));
    SphereState k3 = sphere_rhs(sphere_axpy(y, 0.5 * h, k2));
    SphereState k4 = sphere_rhs(sphere_axpy(y, h, k3));
    y.theta += h / 6.0 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
    y.phi += h / 6.0 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi);
    y.p_theta += h / 6.0 * (k1.p_theta + 2 * k2.p_theta + 2 * k3.p_theta + k4.p_theta);
    if (std::abs(y.theta) > 1.45) return false;  // too close to the equator pole
    if (path) path->push_back(y);
  }
  return true;
}

}  // namespace

ThreeLevelOracle three_level_min_fluence(double t_final, int samples) {
  if (t_final <= 0.0) throw InvalidInput("three_level_min_fluence: T must be positive");
  ThreeLevelOracle out;
  out.value = 0.75 * M_PI * M_PI / t_final;

  const int steps = 4000;
  auto residual = [&](double p0, double a, SphereState* end) {
    std::vector<SphereState> path;
    if (!integrate_sphere(p0, a, steps, &path)) return false;
    if (end) *end = path.back();
    return true;
  };

  // Newton on (p_theta0, p_phi) targeting (theta, phi)(1) = (0, pi/2).
  const double expected_p0 = std::sqrt(0.75) * M_PI;  // constant-speed geodesic
  double best_p0 = 0.0, best_a = 0.0, best_fluence = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double p0_guess : {expected_p0, 2.0, 3.2}) {
    for (double a_guess : {0.7, 1.2, 1.8, 2.5, 3.5}) {
      double p0 = p0_guess, a = a_guess;
      bool ok = true;
      for (int it = 0; it < 60; ++it) {
        SphereState end;
        if (!residual(p0, a, &end)) { ok = false; break; }
        const double r1 = end.theta, r2 = end.phi - 0.5 * M_PI;
        if (std::abs(r1) < 1e-12 && std::abs(r2) < 1e-12) break;
        const double h = 1e-7;
        SphereState e1, e2;
        if (!residual(p0 + h, a, &e1) || !residual(p0, a + h, &e2)) { ok = false; break; }
        const double j11 = (e1.theta - end.theta) / h, j12 = (e2.theta - end.theta) / h;
        const double j21 = (e1.phi - end.phi) / h, j22 = (e2.phi - end.phi) / h;
        const double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-14) { ok = false; break; }
        double dp0 = (-r1 * j22 + r2 * j12) / det;
        double da = (r1 * j21 - r2 * j11) / det;
        const double limit = 1.0;  // damped update
        const double scale = std::max(1.0, std::max(std::abs(dp0), std::abs(da)) / limit);
        p0 += dp0 / scale;
        a += da / scale;
        if (it == 59) ok = false;
      }
      if (!ok) continue;
      SphereState end;
      if (!residual(p0, a, &end)) continue;
      if (std::abs(end.theta) > 1e-10 || std::abs(end.phi - 0.5 * M_PI) > 1e-10) continue;
      const double fluence = (p0 * p0) / t_final;  // 2 h T with h = p0^2/2 at theta = 0
      if (fluence < best_fluence) {
        best_fluence = fluence;
        best_p0 = p0;
        best_a = a;
        found = true;
      }
    }
  }
  if (!found) return out;  // converged stays false, analytic value still valid

  out.converged = true;
  out.p_theta0 = best_p0;
  out.p_phi = best_a;
  out.shooting_fluence = best_fluence;

  std::vector<SphereState> path;
  integrate_sphere(best_p0, best_a, steps, &path);
  out.t = RVec(samples);
  out.populations = RMat(samples, 3);
  out.controls = RMat(samples, 2);
  for (int i = 0; i < samples; ++i) {
    const double tau = static_cast<double>(i) / (samples - 1);
    const auto& y = path[static_cast<std::size_t>(std::llround(tau * steps))];
    out.t(i) = tau * t_final;
    const double y1 = std::cos(y.theta) * std::cos(y.phi);
    const double y2 = std::sin(y.theta);
    const double y3 = std::cos(y.theta) * std::sin(y.phi);
    out.populations(i, 0) = y1 * y1;
    out.populations(i, 1) = y2 * y2;
    out.populations(i, 2) = y3 * y3;
    out.controls(i, 0) = y.p_theta / t_final;
    out.controls(i, 1) = y.p_phi * std::tan(y.theta) / t_final;
  }
  const auto& end = path.back();
  out.final_population = std::pow(std::cos(end.theta) * std::sin(end.phi), 2);
  return out;
}

TrilinearResult trilinear_min_time(double theta, double j_coupling) {
  if (theta < 0.0 || theta > 4.0 * M_PI)
    throw InvalidInput("trilinear_min_time: theta must lie in [0, 4 pi]");
  if (j_coupling <= 0.0) throw InvalidInput("trilinear_min_time: J must be positive");
  TrilinearResult out;
  out.kappa = theta / (2.0 * M_PI);
  out.t_star = std::sqrt(out.kappa * (4.0 - out.kappa)) / (2.0 * j_coupling);
  out.sweep_amplitude = 2.0 * M_PI * j_coupling;
  out.sweep_angle = M_PI * (out.kappa - 2.0);
  out.sweep_rate = out.t_star > 0.0 ? out.sweep_angle / out.t_star : 0.0;
  return out;
}

void KrausLift::validate() const {
  const int n = static_cast<int>(rho_s.rows());
  const int l = static_cast<int>(rho_e.rows());
  if (lifted_dim != n * l) throw InvalidInput("KrausLift: lifted_dim mismatch");
  for (const Mat* m : {&rho_s, &rho_e}) {
    if (!is_hermitian(*m, 1e-10)) throw InvalidInput("KrausLift: states must be Hermitian");
    if (std::abs(m->trace().real() - 1.0) > 1e-10) throw InvalidInput("KrausLift: states must have unit trace");
    if (eig_hermitian(*m).values.minCoeff() < -1e-12)
      throw InvalidInput("KrausLift: states must be PSD");
  }
  if (!is_hermitian(theta, 1e-10 * std::max(1.0, theta.norm())))
    throw InvalidInput("KrausLift: observable must be Hermitian");
}

Mat kron(const Mat& a, const Mat& b) {
  const int ar = static_cast<int>(a.rows()), ac = static_cast<int>(a.cols());
  const int br = static_cast<int>(b.rows()), bc = static_cast<int>(b.cols());
  Mat out(ar * br, ac * bc);
  for (int i = 0; i < ar; ++i)
    for (int j = 0; j < ac; ++j) out.block(i * br, j * bc, br, bc) = a(i, j) * b;
  return out;
}

KrausObjectiveValue kraus_lift_objective(const KrausLift& lift, const Mat& u_lifted) {
  lift.validate();
  const int n = static_cast<int>(lift.rho_s.rows());
  const int l = static_cast<int>(lift.rho_e.rows());
  if (u_lifted.rows() != n * l) throw InvalidInput("kraus_lift_objective: dimension mismatch");
  if (!is_unitary(u_lifted, 1e-9 * n * l))
    throw InvalidInput("kraus_lift_objective: lifted propagator must be unitary");

  KrausObjectiveValue out;
  Mat p = kron(lift.rho_s, lift.rho_e);
  Mat theta_lift = kron(lift.theta, Mat::Identity(l, l));
  out.lifted = (u_lifted * p * u_lifted.adjoint() * theta_lift).trace().real();

  // Kraus route: K_ab = sqrt(q_a) <b| U |a>, blocks over the environment
  // eigenbasis of rho_e; rho_out = sum K rho_s K^.
  HermitianEig env = eig_hermitian(lift.rho_e);
  Mat rho_out = Mat::Zero(n, n);
  for (int a = 0; a < l; ++a) {
    const double q = std::max(env.values(a), 0.0);
    if (q == 0.0) continue;
    for (int b = 0; b < l; ++b) {
      Mat k_ab = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          cxd acc(0.0, 0.0);
          for (int ea = 0; ea < l; ++ea)
            for (int eb = 0; eb < l; ++eb)
              acc += std::conj(env.vectors(eb, b)) * u_lifted(i * l + eb, j * l + ea) *
                     env.vectors(ea, a);
          k_ab(i, j) = acc;
        }
      rho_out += q * k_ab * lift.rho_s * k_ab.adjoint();
    }
  }
  out.kraus = (rho_out * lift.theta).trace().real();
  return out;
}

OpenLandscapeExtrema open_landscape_extrema(const KrausLift& lift) {
  lift.validate();
  const int l = static_cast<int>(lift.rho_e.rows());
  Mat p = kron(lift.rho_s, lift.rho_e);
  Mat theta_lift = kron(lift.theta, Mat::Identity(l, l));

  RVec pe = eig_hermitian(p).values;    // ascending
  RVec te = eig_hermitian(theta_lift).values;
  const int d = static_cast<int>(pe.size());

  OpenLandscapeExtrema out;
  for (int i = 0; i < d; ++i) {
    out.max += pe(i) * te(i);              // sorted with sorted
    out.min += pe(i) * te(d - 1 - i);      // sorted against anti-sorted
  }

  if (d <= 8) {
    Mat p_fixed = 0.5 * (p + p.adjoint().eval());
    p_fixed /= p_fixed.trace().real();
    ObservableSpec spec{p_fixed, theta_lift};
    auto records = enumerate_observable_critical_manifolds(spec);
    double emax = -std::numeric_limits<double>::infinity();
    double emin = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      emax = std::max(emax, r.value);
      emin = std::min(emin, r.value);
    }
    const double scale = std::max({1.0, std::abs(out.max), std::abs(out.min)});
    if (std::abs(emax - out.max) > 1e-9 * scale || std::abs(emin - out.min) > 1e-9 * scale)
      throw std::runtime_error("open_landscape_extrema: enumeration disagrees with pairing");
    out.enumeration_checked = true;
  }
  return out;
}

}  // namespace qcl
