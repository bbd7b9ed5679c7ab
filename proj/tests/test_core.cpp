#include <doctest.h>

#include <qcl/rwa.hpp>
#include <qcl/system.hpp>

#include "oracles.hpp"

using namespace qcl;
using namespace qcl::testing;

TEST_CASE("free evolution reproduces exp(-i H0 T)") {
  RandomStream rng(101);
  ControlSystem sys = random_dense_system(3, 2.0, rng);
  ControlField field = ControlField::zero(sys.horizon, 32, 1);
  Trajectory traj = propagate(sys, field);
  Mat expected = expm_i_hermitian(sys.h0, sys.horizon);
  CHECK((traj.final_unitary() - expected).norm() < 1e-10);
}

TEST_CASE("resonant half-cycle swaps populations") {
  ControlSystem sys;
  sys.dim = 2;
  sys.h0 = Mat::Zero(2, 2);
  sys.dipoles = {pauli_x()};
  sys.horizon = 1.0;
  const double amp = M_PI / 2.0;  // integral of eps over [0, 1]
  ControlField field = ControlField::constant(1.0, 16, RVec::Constant(1, amp));
  Trajectory traj = propagate(sys, field);
  Mat expected = expm_skew(Mat(kI * (M_PI / 2.0) * pauli_x()));
  CHECK((traj.final_unitary() - expected).norm() < 1e-10);
  Vec psi = traj.final_unitary().col(0);
  CHECK(std::norm(psi(1)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("step-halving against a reference grid") {
  RandomStream rng(7);
  ControlSystem sys = random_dense_system(4, 3.0, rng);
  RandomStream frng = rng.fork("field");
  ControlField coarse = random_smooth_field(sys.horizon, 160, 1, frng, 0.4);
  RandomStream frng2 = rng.fork("field");
  ControlField fine = random_smooth_field(sys.horizon, 1600, 1, frng2, 0.4);
  Mat u_coarse = propagate(sys, coarse).final_unitary();
  Mat u_fine = propagate(sys, fine).final_unitary();
  CHECK((u_coarse - u_fine).norm() < 1e-6);
}

TEST_CASE("midpoint sampling converges at second order") {
  RandomStream rng(11);
  ControlSystem sys = random_dense_system(3, 2.0, rng);
  std::vector<Mat> endpoints;
  for (int steps : {64, 128, 256, 512}) {
    RandomStream frng = rng.fork("field");  // identical smooth field each time
    endpoints.push_back(propagate(sys, random_smooth_field(sys.horizon, steps, 1, frng)).final_unitary());
  }
  double prev = (endpoints[0] - endpoints[1]).norm();
  for (int i = 1; i + 1 < static_cast<int>(endpoints.size()); ++i) {
    double next = (endpoints[i] - endpoints[i + 1]).norm();
    CHECK(prev / next >= 3.5);
    prev = next;
  }
}

TEST_CASE("propagators stay unitary and compose") {
  RandomStream rng(23);
  ControlSystem sys = random_dense_system(5, 2.0, rng);
  RandomStream frng = rng.fork("field");
  ControlField field = random_smooth_field(sys.horizon, 64, 1, frng);
  Trajectory traj = propagate(sys, field);
  for (const Mat& u : traj.propagators)
    CHECK((u.adjoint() * u - Mat::Identity(5, 5)).norm() <= 1e-9 * 5);

  // split propagation over [0, T/2], [T/2, T]
  ControlSystem first_half = sys;
  first_half.horizon = sys.horizon / 2;
  ControlSystem second_half = first_half;
  ControlField fa, fb;
  fa.grid = RVec::LinSpaced(33, 0.0, sys.horizon / 2);
  fb.grid = fa.grid;
  fa.values = field.values.topRows(32);
  fb.values = field.values.bottomRows(32);
  Mat ua = propagate(first_half, fa).final_unitary();
  Mat ub = propagate(second_half, fb).final_unitary();
  CHECK((ub * ua - traj.final_unitary()).norm() < 1e-10);
}

TEST_CASE("propagate validates inputs") {
  RandomStream rng(3);
  ControlSystem sys = random_dense_system(3, 1.0, rng);
  ControlField field = ControlField::zero(1.0, 8, 2);  // wrong channel count
  CHECK_THROWS_AS(propagate(sys, field), InvalidInput);
  ControlField bad = ControlField::zero(1.0, 8, 1);
  bad.values(3, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(propagate(sys, bad), InvalidInput);
}

TEST_CASE("interaction dipole: identity at t=0, phase rotation, spectrum preserved") {
  RandomStream rng(31);
  ControlSystem sys;
  sys.dim = 3;
  sys.horizon = 1.5;
  RVec energies(3);
  energies << 0.0, 1.1, 2.7;
  sys.h0 = energies.cast<cxd>().asDiagonal();
  Mat mu = Mat::Zero(3, 3);
  mu(0, 1) = mu(1, 0) = 1.0;
  mu(1, 2) = mu(2, 1) = 0.7;
  sys.dipoles = {mu};
  ControlField field = ControlField::zero(sys.horizon, 30, 1);
  Trajectory traj = propagate(sys, field);

  CHECK((interaction_dipole(traj, 0, 0) - mu).norm() < 1e-12);

  const int k = 20;
  const double t = traj.field.grid(k);
  Mat expected = mu;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      expected(i, j) *= std::exp(cxd(0.0, (energies(i) - energies(j)) * t));
  CHECK((interaction_dipole(traj, 0, k) - expected).norm() < 1e-10);

  // unitary invariance of Tr mu(t)^2 on a random system
  ControlSystem rnd = random_dense_system(3, 1.0, rng);
  RandomStream frng = rng.fork("field");
  ControlField f2 = random_smooth_field(1.0, 24, 1, frng);
  Trajectory t2 = propagate(rnd, f2);
  const double ref = (rnd.dipoles[0] * rnd.dipoles[0]).trace().real();
  for (int j = 0; j <= 24; j += 6) {
    Mat md = interaction_dipole(t2, 0, j);
    CHECK(is_hermitian(md, 1e-10));
    CHECK((md * md).trace().real() == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("effective dipole is the exact derivative of the step map") {
  RandomStream rng(41);
  ControlSystem sys = random_dense_system(3, 1.2, rng);
  RandomStream frng = rng.fork("field");
  ControlField field = random_smooth_field(sys.horizon, 12, 1, frng);
  Trajectory traj = propagate(sys, field);
  const double dt = traj.dt();
  const int k = 5;
  const double h = 1e-6;

  ControlField up = field, dn = field;
  up.values(k, 0) += h;
  dn.values(k, 0) -= h;
  Mat du = (propagate(sys, up).final_unitary() - propagate(sys, dn).final_unitary()) / (2 * h);
  Mat m_expected = Mat(-kI / dt) * traj.final_unitary().adjoint() * du;
  CHECK((effective_dipole(traj, k, 0) - m_expected).norm() < 1e-7);
}

TEST_CASE("principal log of a unitary") {
  CHECK(unitary_log_principal(Mat::Identity(3, 3)).norm() < 1e-12);

  Mat u = Mat::Zero(2, 2);
  u(0, 0) = std::exp(cxd(0, 0.3));
  u(1, 1) = std::exp(cxd(0, -0.3));
  Mat a = unitary_log_principal(u);
  CHECK(std::abs(a(0, 0) - cxd(0, 0.3)) < 1e-12);
  CHECK(std::abs(a(1, 1) - cxd(0, -0.3)) < 1e-12);

  RandomStream rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Mat q = random_unitary(4, rng);
    Mat log_q = principal_log_unitary(q);
    CHECK((expm_skew(log_q) - q).norm() < 1e-9);
    CHECK((log_q + log_q.adjoint()).norm() < 1e-12);
  }

  Mat branch = Mat::Identity(2, 2);
  branch(0, 0) = -1.0;
  CHECK_THROWS_AS(unitary_log_principal(branch), BranchDegenerateError);
}

TEST_CASE("geodesic endpoints, halfway point and arc length") {
  RandomStream rng(17);
  Mat u0 = random_unitary(3, rng);
  Mat w = random_unitary(3, rng);
  CHECK((geodesic_point(u0, w, 0.0) - u0).norm() < 1e-10);
  CHECK((geodesic_point(u0, w, 1.0) - w).norm() < 1e-10);

  Mat i2 = Mat::Identity(2, 2);
  Mat w2 = Mat::Zero(2, 2);
  w2(0, 0) = cxd(0, 1);
  w2(1, 1) = cxd(0, -1);
  Mat mid = geodesic_point(i2, w2, 0.5);
  CHECK(std::abs(mid(0, 0) - std::exp(cxd(0, M_PI / 4))) < 1e-12);
  CHECK(std::abs(mid(1, 1) - std::exp(cxd(0, -M_PI / 4))) < 1e-12);

  // arc length quadrature equals ||log(u0^ w)||_F
  const double expected = unitary_log_principal(Mat(u0.adjoint() * w)).norm();
  const int segments = 2000;
  double length = 0.0;
  Mat prev = geodesic_point(u0, w, 0.0);
  for (int i = 1; i <= segments; ++i) {
    Mat next = geodesic_point(u0, w, static_cast<double>(i) / segments);
    length += (next - prev).norm();
    prev = next;
  }
  CHECK(length == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("rwa: trivial drift, two-level textbook case, ladder equivalence") {
  // zero drift -> identity transform
  ControlSystem flat;
  flat.dim = 2;
  flat.h0 = Mat::Zero(2, 2);
  flat.dipoles = {pauli_x()};
  flat.horizon = 1.0;
  RwaSystem rwa0 = rwa_transform(flat);
  CHECK(rwa0.frame.trivial);
  ControlField env0 = ControlField::constant(1.0, 8, RVec::Constant(1, 0.3));
  ControlField lab0 = lab_field_from_envelope(rwa0.frame, env0, 2);
  CHECK(lab0.values.maxCoeff() == doctest::Approx(0.3));

  // resonant two-level drive: rotated-frame propagation matches the lab frame
  const double omega = 40.0;
  ControlSystem two;
  two.dim = 2;
  RVec e2(2);
  e2 << 0.0, omega;
  two.h0 = e2.cast<cxd>().asDiagonal();
  two.dipoles = {pauli_x()};
  two.horizon = 2.0;
  RwaSystem rwa2 = rwa_transform(two);
  CHECK(rwa2.frame.carrier(0) == doctest::Approx(omega));

  const double rabi = omega / 50.0;
  ControlField env = ControlField::constant(two.horizon, 400, RVec::Constant(1, rabi));
  ControlField lab = lab_field_from_envelope(rwa2.frame, env, 40);
  Mat u_rwa = propagate(rwa2.system, env).final_unitary();
  Mat u_lab = propagate(two, lab).final_unitary();
  Mat u_restored = rwa2.frame.frame_unitary(two.horizon) * u_rwa;
  for (int col = 0; col < 2; ++col) {
    const double overlap = std::abs((u_lab.col(col).adjoint() * u_restored.col(col))(0, 0));
    CHECK(1.0 - overlap * overlap < 1e-3);
  }

  // three-level ladder with two resonant channels
  ControlSystem ladder;
  ladder.dim = 3;
  RVec e3(3);
  e3 << 0.0, 37.0, 81.0;
  ladder.h0 = e3.cast<cxd>().asDiagonal();
  Mat mu01 = Mat::Zero(3, 3), mu12 = Mat::Zero(3, 3);
  mu01(0, 1) = mu01(1, 0) = 1.0;
  mu12(1, 2) = mu12(2, 1) = 1.0;
  ladder.dipoles = {mu01, mu12};
  ladder.horizon = 2.0;
  RwaSystem rwa3 = rwa_transform(ladder);
  CHECK(rwa3.frame.carrier(0) == doctest::Approx(37.0));
  CHECK(rwa3.frame.carrier(1) == doctest::Approx(44.0));

  RVec amps(2);
  amps << 37.0 / 50.0 * 0.5, 44.0 / 50.0 * 0.5;
  ControlField env3 = ControlField::constant(ladder.horizon, 500, amps);
  ControlField lab3 = lab_field_from_envelope(rwa3.frame, env3, 40);
  Mat u_rwa3 = propagate(rwa3.system, env3).final_unitary();
  Mat u_lab3 = propagate(ladder, lab3).final_unitary();
  Mat restored = rwa3.frame.frame_unitary(ladder.horizon) * u_rwa3;
  Vec psi0 = Vec::Zero(3);
  psi0(0) = 1.0;
  const double fid = std::abs((u_lab3 * psi0).adjoint().dot(restored * psi0));
  CHECK(1.0 - fid * fid < 1e-3);

  // non-diagonal drift rejected
  ControlSystem skewed = flat;
  skewed.h0 = pauli_x();
  CHECK_THROWS_AS(rwa_transform(skewed), InvalidInput);
}
