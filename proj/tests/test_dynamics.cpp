// Copyright 2026 The crfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "crfit/dynamics.hpp"

using namespace crfit;
using Catch::Approx;
using std::complex;

namespace {

constexpr complex<double> kI{0.0, 1.0};
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Weak-coupling pair in scaled units; slow enough that one solve takes
/// a few hundred integrator steps.
DeviceParams scaled_device() {
  DeviceParams dp;
  dp.omega1 = kTwoPi * 0.010;
  dp.omega2 = kTwoPi * 0.008;
  dp.delta1 = -kTwoPi * 0.003;
  dp.delta2 = -kTwoPi * 0.003;
  dp.j12 = kTwoPi * 0.0003;
  dp.drive_strength1 = kTwoPi * 0.002;
  dp.drive_strength2 = kTwoPi * 0.002;
  dp.levels = 3;
  dp.dt_ns = 0.22222222;
  return dp;
}

PulseSchedule cr_schedule(const DeviceParams& dp, double a1, double a2,
                          int duration_dt, int risefall_dt) {
  PulseSchedule s;
  s.dt_ns = dp.dt_ns;
  s.pulse_q1 = {a1, duration_dt, risefall_dt, 8.0};
  s.pulse_q2 = {a2, duration_dt, risefall_dt, 8.0};
  s.drive_freq_q1 = dp.omega1;
  s.drive_freq_q2 = dp.omega1; // both tones at the target frequency
  return s;
}

CorrectionSet small_d2(const DeviceParams& dp) {
  CorrectionSet corr = CorrectionSet::zero(dp.dim(), dp.omega2);
  corr.active_d2 = true;
  corr.d2(0, 1) = 0.010;
  corr.d2(1, 0) = 0.010;
  corr.d2(3, 4) = 0.016;
  corr.d2(4, 3) = 0.016;
  return corr;
}

}  // namespace

TEST_CASE("computational outcomes sit at the expected flat indices") {
  const auto i3 = computational_indices(3);
  REQUIRE(i3 == std::array<int, 4>{0, 1, 3, 4});
  const auto i2 = computational_indices(2);
  REQUIRE(i2 == std::array<int, 4>{0, 1, 2, 3});
}

TEST_CASE("computational probabilities pick the right amplitudes") {
  StateVector psi = StateVector::Zero(9);
  psi(0) = 0.5;
  psi(1) = complex<double>(0.0, 0.3);
  psi(3) = -0.2;
  psi(4) = complex<double>(0.1, 0.1);
  psi(8) = 0.7; // leakage amplitude, invisible to the four outcomes
  const ProbabilityVector p = computational_probs(psi, 3);
  REQUIRE(p.p00 == Approx(0.25).margin(1e-15));
  REQUIRE(p.p01 == Approx(0.09).margin(1e-15));
  REQUIRE(p.p10 == Approx(0.04).margin(1e-15));
  REQUIRE(p.p11 == Approx(0.02).margin(1e-15));
  REQUIRE(p.sum() == Approx(0.40).margin(1e-14));
  REQUIRE(p[0] == p.p00);
  REQUIRE(p[1] == p.p01);
  REQUIRE(p[2] == p.p10);
  REQUIRE(p[3] == p.p11);
  REQUIRE_THROWS_AS(computational_probs(psi, 2), DimensionError);
}

TEST_CASE("exact propagator reproduces a closed-form spin flip") {
  // H = w * sigma_x for time t rotates (1,0) to (cos wt, -i sin wt).
  const double w = 0.37, t = 2.1;
  ComplexMatrix h(2, 2);
  h << 0.0, w, w, 0.0;
  StateVector psi(2);
  psi << 1.0, 0.0;
  const StateVector out = propagate_exact({{h, t}}, psi);
  REQUIRE(std::abs(out(0) - std::cos(w * t)) < 1e-13);
  REQUIRE(std::abs(out(1) - (-kI * std::sin(w * t))) < 1e-13);
}

TEST_CASE("exact propagator composes segments of one Hamiltonian") {
  ComplexMatrix h(3, 3);
  h << 0.4, complex<double>(0.1, 0.05), 0.0, complex<double>(0.1, -0.05), -0.2,
      0.3, 0.0, 0.3, 0.1;
  StateVector psi(3);
  psi << 0.6, complex<double>(0.0, 0.8), 0.0;
  const StateVector split = propagate_exact({{h, 1.3}, {h, 0.9}}, psi);
  const StateVector whole = propagate_exact({{h, 2.2}}, psi);
  REQUIRE((split - whole).cwiseAbs().maxCoeff() < 1e-12);
  // Unitarity.
  REQUIRE(std::abs(split.norm() - psi.norm()) < 1e-13);
}

TEST_CASE("exact propagator rejects bad segments") {
  ComplexMatrix h(2, 2);
  h << 0.0, 1.0, 0.5, 0.0; // not Hermitian
  StateVector psi(2);
  psi << 1.0, 0.0;
  REQUIRE_THROWS_AS(propagate_exact({{h, 1.0}}, psi), DataError);
  h(1, 0) = 1.0;
  REQUIRE_THROWS_AS(propagate_exact({{h, 0.0}}, psi), DataError);
  StateVector bad(3);
  bad << 1.0, 0.0, 0.0;
  REQUIRE_THROWS_AS(propagate_exact({{h, 1.0}}, bad), DimensionError);
}

TEST_CASE("fidelity measures squared overlap") {
  StateVector a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  REQUIRE(fidelity(a, a) == Approx(1.0).margin(1e-15));
  REQUIRE(fidelity(a, b) == 0.0);
  const StateVector c = (a + b) / std::sqrt(2.0);
  REQUIRE(fidelity(a, c) == Approx(0.5).margin(1e-15));
  StateVector d(3);
  REQUIRE_THROWS_AS(fidelity(a, d), DimensionError);
}

TEST_CASE("undriven exchange follows the two-level oscillation formula") {
  DeviceParams dp;
  dp.omega1 = 1.05;
  dp.omega2 = 1.00;
  dp.j12 = 0.02;
  dp.drive_strength1 = 0.0;
  dp.drive_strength2 = 0.0;
  dp.levels = 2;
  dp.dt_ns = 0.25;

  PulseSchedule s = cr_schedule(dp, 0.0, 0.0, 320, 0);
  s.drive_freq_q1 = 0.0;
  s.drive_freq_q2 = 0.0;
  const double T = s.duration_ns();

  const double delta = dp.omega1 - dp.omega2;
  const double rabi = std::sqrt(0.25 * delta * delta + dp.j12 * dp.j12);
  const double transfer = dp.j12 * dp.j12 / (rabi * rabi) *
                          std::pow(std::sin(rabi * T), 2);

  const StateVector psi0 = basis_state(2, 0, 1);
  for (Frame frame : {Frame::rotating, Frame::lab}) {
    const SimContext ctx = prepare_context(dp, frame);
    const StateVector psi = evolve(ctx, nullptr, s, psi0, 1e-10, 1e-12);
    const ProbabilityVector p = computational_probs(psi, 2);
    REQUIRE(p.p01 == Approx(1.0 - transfer).margin(1e-7));
    REQUIRE(p.p10 == Approx(transfer).margin(1e-7));
    REQUIRE(p.p00 == Approx(0.0).margin(1e-10));
    REQUIRE(p.p11 == Approx(0.0).margin(1e-10));
  }
}

TEST_CASE("evolve agrees with the eigendecomposition propagator when the "
          "Hamiltonian is constant") {
  const DeviceParams dp = scaled_device();
  // No drive; a constant Hermitian offset makes the full operator static.
  PulseSchedule s = cr_schedule(dp, 0.0, 0.0, 256, 0);
  CorrectionSet corr = CorrectionSet::zero(dp.dim(), dp.omega2);
  corr.active_m = true;
  corr.m(0, 4) = complex<double>(0.002, 0.001);
  corr.m(4, 0) = complex<double>(0.002, -0.001);
  corr.m(2, 6) = complex<double>(0.0, -0.0015);
  corr.m(6, 2) = complex<double>(0.0, 0.0015);

  const StateVector psi0 = basis_state(3, 1, 0);
  const ComplexMatrix h = static_hamiltonian(dp) + corr.m;
  const StateVector exact = propagate_exact({{h, s.duration_ns()}}, psi0);

  for (Frame frame : {Frame::rotating, Frame::lab}) {
    const SimContext ctx = prepare_context(dp, frame);
    const StateVector psi = evolve(ctx, &corr, s, psi0, 1e-11, 1e-13);
    // The rotating frame sees a time-dependent operator, so the comparison
    // carries genuine truncation error at the requested tolerance.
    REQUIRE(fidelity(psi, exact) >= 1.0 - 1e-9);
    REQUIRE((psi - exact).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("lab and rotating frames produce the same lab-frame state") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.25, 0.5, 320, 32);
  const CorrectionSet corr = small_d2(dp);
  const StateVector psi0 = basis_state(3, 0, 0);

  const SimContext rot = prepare_context(dp, Frame::rotating);
  const SimContext lab = prepare_context(dp, Frame::lab);
  const StateVector a = evolve(rot, &corr, s, psi0, 1e-10, 1e-12);
  const StateVector b = evolve(lab, &corr, s, psi0, 1e-10, 1e-12);
  REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-6);

  const ProbabilityVector pa = computational_probs(a, 3);
  const ProbabilityVector pb = computational_probs(b, 3);
  for (int i = 0; i < 4; ++i)
    REQUIRE(pa[i] == Approx(pb[i]).margin(1e-7));
}

TEST_CASE("rotating-frame generator is the conjugated lab generator") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.3, 0.4, 320, 32);
  const CorrectionSet corr = small_d2(dp);
  const SimContext rot = prepare_context(dp, Frame::rotating);
  const SimContext lab = prepare_context(dp, Frame::lab);
  SchrodingerRhs rhs_rot(rot, s, &corr);
  SchrodingerRhs rhs_lab(lab, s, &corr);

  std::mt19937 eng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int d = dp.dim();
  Eigen::VectorXcd phi(d), u(d), dphi(d), dpsi(d), expect(d);
  for (int trial = 0; trial < 5; ++trial) {
    for (int j = 0; j < d; ++j) phi(j) = complex<double>(dist(eng), dist(eng));
    phi.normalize();
    const double t = 0.5 * (dist(eng) + 1.0) * s.duration_ns();
    rhs_rot(t, phi, dphi);
    rhs_rot.frame_phases(t, u);
    rhs_lab(t, u.cwiseProduct(phi).eval(), dpsi);
    // d/dt (u phi) = -i Lambda u phi + u dphi  =>
    // dphi = conj(u) dpsi + i Lambda phi.
    for (int j = 0; j < d; ++j)
      expect(j) = std::conj(u(j)) * dpsi(j) + kI * rot.static_diag(j) * phi(j);
    REQUIRE((dphi - expect).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("lab-frame assembly matches the reference Hamiltonian") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.2, 0.45, 320, 32);
  CorrectionSet corr = small_d2(dp);
  corr.active_m = true;
  corr.m(1, 2) = complex<double>(0.001, -0.002);
  corr.m(2, 1) = complex<double>(0.001, 0.002);

  const SimContext ctx = prepare_context(dp, Frame::lab);
  SchrodingerRhs rhs(ctx, s, &corr);
  ComplexMatrix h;
  for (double t : {0.0, 3.7, 20.0, 50.1, 71.0}) {
    rhs.assemble_lab(t, h);
    const ComplexMatrix ref = total_hamiltonian(dp, corr, s, t);
    const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
    REQUIRE((h - ref).cwiseAbs().maxCoeff() < 1e-14 * scale);
  }
}

TEST_CASE("driven evolution conserves the norm") {
  const DeviceParams dp = scaled_device();
  const CorrectionSet corr = small_d2(dp);
  std::mt19937 eng(21);
  std::uniform_real_distribution<double> amp(0.0, 0.6);
  std::uniform_int_distribution<int> dur(128, 512);
  for (int trial = 0; trial < 5; ++trial) {
    const PulseSchedule s =
        cr_schedule(dp, amp(eng), amp(eng), dur(eng), 32);
    const SimContext ctx = prepare_context(dp, Frame::rotating);
    IntegrateStats st;
    const StateVector psi =
        evolve(ctx, &corr, s, basis_state(3, 0, 0), 1e-10, 1e-12, &st);
    REQUIRE(std::abs(psi.norm() - 1.0) < 1e-8);
    REQUIRE(st.accepted > 0);
    REQUIRE(st.rhs_evals > 0);
  }
}

TEST_CASE("strong driving leaks population out of the qubit subspace") {
  DeviceParams dp = scaled_device();
  dp.drive_strength1 = kTwoPi * 0.02; // ten times the nominal drive
  const PulseSchedule s = cr_schedule(dp, 1.0, 0.0, 512, 0);
  const SimContext ctx = prepare_context(dp, Frame::rotating);
  const StateVector psi = evolve(ctx, nullptr, s, basis_state(3, 0, 0));
  const ProbabilityVector p = computational_probs(psi, 3);
  REQUIRE(std::abs(psi.norm() - 1.0) < 1e-7);
  REQUIRE(p.sum() < 1.0 - 1e-6);
  REQUIRE(p.sum() > 0.0);
}

TEST_CASE("integrating backward in time undoes the forward evolution") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.3, 0.5, 256, 32);
  const CorrectionSet corr = small_d2(dp);
  const SimContext ctx = prepare_context(dp, Frame::rotating);
  SchrodingerRhs rhs(ctx, s, &corr);

  IntegratorOptions opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;
  opt.max_step = carrier_limited_max_step(ctx, s, &corr);

  const StateVector psi0 = basis_state(3, 0, 1);
  Eigen::VectorXcd y = psi0;
  std::vector<double> edges = s.breakpoints();
  double t = 0.0;
  for (double b : edges) {
    integrate(rhs, t, b, y, opt);
    t = b;
  }
  integrate(rhs, t, s.duration_ns(), y, opt);
  t = s.duration_ns();
  for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
    integrate(rhs, t, *it, y, opt);
    t = *it;
  }
  integrate(rhs, t, 0.0, y, opt);
  REQUIRE((y - psi0).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("tightening tolerances converges the final state") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.3, 0.5, 320, 32);
  const SimContext ctx = prepare_context(dp, Frame::rotating);
  const StateVector psi0 = basis_state(3, 0, 0);
  const StateVector tight = evolve(ctx, nullptr, s, psi0, 1e-12, 1e-13);
  const StateVector mid = evolve(ctx, nullptr, s, psi0, 1e-9, 1e-11);
  const StateVector loose = evolve(ctx, nullptr, s, psi0, 1e-6, 1e-8);
  REQUIRE((loose - tight).cwiseAbs().maxCoeff() < 1e-3);
  REQUIRE((mid - tight).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("a zero-length schedule returns the initial state unchanged") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.3, 0.5, 0, 0);
  const StateVector psi0 = basis_state(3, 1, 1);
  for (Frame frame : {Frame::rotating, Frame::lab}) {
    const SimContext ctx = prepare_context(dp, frame);
    const StateVector psi = evolve(ctx, nullptr, s, psi0);
    REQUIRE((psi - psi0).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("evolve validates its inputs") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.1, 0.1, 64, 0);
  const SimContext ctx = prepare_context(dp, Frame::rotating);

  StateVector wrong_dim = StateVector::Zero(4);
  wrong_dim(0) = 1.0;
  REQUIRE_THROWS_AS(evolve(ctx, nullptr, s, wrong_dim), DimensionError);

  StateVector unnormalized = StateVector::Zero(9);
  unnormalized(0) = 0.5;
  REQUIRE_THROWS_AS(evolve(ctx, nullptr, s, unnormalized), DataError);

  CorrectionSet bad = CorrectionSet::zero(9, dp.omega2);
  bad.d2(0, 0) = 0.1; // nonzero diagonal
  REQUIRE_THROWS_AS(evolve(ctx, &bad, s, basis_state(3, 0, 0)), DataError);

  CorrectionSet wrong_size = CorrectionSet::zero(4, dp.omega2);
  REQUIRE_THROWS_AS(evolve(ctx, &wrong_size, s, basis_state(3, 0, 0)),
                    DimensionError);
}

TEST_CASE("the device-level convenience overload matches the context form") {
  const DeviceParams dp = scaled_device();
  const PulseSchedule s = cr_schedule(dp, 0.2, 0.4, 192, 16);
  const CorrectionSet corr = small_d2(dp);
  const StateVector psi0 = basis_state(3, 0, 0);
  const SimContext ctx = prepare_context(dp, Frame::rotating);
  const StateVector a = evolve(ctx, &corr, s, psi0);
  const StateVector b = evolve(dp, corr, s, psi0);
  REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0);
}
